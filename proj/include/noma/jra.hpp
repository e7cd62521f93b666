#pragma once

#include <span>
#include <utility>
#include <vector>

#include "noma/env.hpp"

namespace noma {

// Two users sharing one channel, ordered so that user 1 is the strong one.
struct ChannelPair {
  double gamma1 = 0.0;  // CNR of the strong user, 1/W
  double gamma2 = 0.0;  // CNR of the weak user, 1/W
  double a1 = 4.0;      // 2^(R_min / B_c) for the strong user
  double a2 = 4.0;      // same for the weak user
  int user1 = -1;
  int user2 = -1;
};

// Orders two users on channel k by CNR; ties go to the lower index as user 1.
ChannelPair make_channel_pair(const NetworkInstance& instance, int channel,
                              int user_a, int user_b, double a1, double a2);

struct PowerAllocation {
  std::vector<double> budgets;  // q^k
  std::vector<double> p1;
  std::vector<double> p2;
  double lambda = 0.0;
  std::vector<std::pair<double, double>> rates;  // (R_1^k, R_2^k), bit/s
  std::vector<ChannelPair> pairs;
  double sum_rate = 0.0;
};

// Smallest per-channel budget at which both users meet their minimum rates.
double min_budget(const ChannelPair& pair);

// Closed-form MSR split of a channel budget q. The strong user gets as much
// as the weak user's minimum rate allows. Throws BudgetTooSmall if q is below
// min_budget(pair).
std::pair<double, double> split_budget(const ChannelPair& pair, double q);

// Waterfilling offset c^k so that q^k = max(gamma^k, B_c / lambda - c^k).
double water_offset(const ChannelPair& pair);

std::vector<double> budgets_for_lambda(std::span<const ChannelPair> pairs,
                                       double lambda, double b_c);

// Budgets and multiplier only; p1/p2/rates are left empty.
// Throws Infeasible when sum of gamma^k exceeds p_t.
PowerAllocation solve_budgets(std::span<const ChannelPair> pairs, double p_t,
                              double b_c);

std::pair<double, double> pair_rates(const ChannelPair& pair, double p1,
                                     double p2, double b_c);

// Rate of the n-th user on a channel. The powers of users ahead of it in the
// CNR ordering are not cancelled and count as interference.
double rate_general(double cnr, std::span<const double> powers_below,
                    double own_power, double b_c);

// Full JRA for a complete assignment (per-user channel index).
// Throws MalformedAssignment or Infeasible.
PowerAllocation evaluate_assignment(const NetworkInstance& instance,
                                    std::span<const int> assignment,
                                    const EnvConfig& config);

}  // namespace noma
