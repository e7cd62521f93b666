#include "noma/jra.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "noma/errors.hpp"

namespace noma {

namespace {

constexpr int kMaxIterations = 200;
constexpr double kResidualTol = 1e-9;

double total_budget(std::span<const ChannelPair> pairs, double lambda, double b_c) {
  double total = 0.0;
  for (const auto& p : pairs)
    total += std::max(min_budget(p), b_c / lambda - water_offset(p));
  return total;
}

}  // namespace

ChannelPair make_channel_pair(const NetworkInstance& instance, int channel,
                              int user_a, int user_b, double a1, double a2) {
  if (user_b < user_a) std::swap(user_a, user_b);
  const double ga = instance.cnr_at(user_a, channel);
  const double gb = instance.cnr_at(user_b, channel);
  ChannelPair pair;
  pair.a1 = a1;
  pair.a2 = a2;
  if (gb > ga) {
    pair.user1 = user_b;
    pair.user2 = user_a;
    pair.gamma1 = gb;
    pair.gamma2 = ga;
  } else {
    pair.user1 = user_a;
    pair.user2 = user_b;
    pair.gamma1 = ga;
    pair.gamma2 = gb;
  }
  return pair;
}

double min_budget(const ChannelPair& p) {
  return p.a2 * (p.a1 - 1.0) / p.gamma1 + (p.a2 - 1.0) / p.gamma2;
}

std::pair<double, double> split_budget(const ChannelPair& p, double q) {
  const double gamma = min_budget(p);
  if (q < gamma * (1.0 - 1e-12)) {
    throw BudgetTooSmall("channel budget " + std::to_string(q) +
                         " W is below the minimum " + std::to_string(gamma) + " W");
  }
  const double p1 = (p.gamma2 * q - p.a2 + 1.0) / (p.a2 * p.gamma2);
  return {p1, q - p1};
}

double water_offset(const ChannelPair& p) {
  return p.a2 / p.gamma1 - p.a2 / p.gamma2 + 1.0 / p.gamma2;
}

std::vector<double> budgets_for_lambda(std::span<const ChannelPair> pairs,
                                       double lambda, double b_c) {
  std::vector<double> q;
  q.reserve(pairs.size());
  for (const auto& p : pairs)
    q.push_back(std::max(min_budget(p), b_c / lambda - water_offset(p)));
  return q;
}

PowerAllocation solve_budgets(std::span<const ChannelPair> pairs, double p_t,
                              double b_c) {
  PowerAllocation out;
  if (pairs.empty()) return out;

  double sum_gamma = 0.0;
  double positive_offsets = 0.0;
  for (const auto& p : pairs) {
    sum_gamma += min_budget(p);
    positive_offsets += std::max(0.0, water_offset(p));
  }
  if (sum_gamma > p_t) {
    throw Infeasible("minimum budgets need " + std::to_string(sum_gamma) +
                     " W but only " + std::to_string(p_t) + " W are available");
  }

  // At lambda_lo every channel gets at least p_t, so the total overshoots.
  double lo = b_c / (p_t + positive_offsets);
  double hi = lo;
  int expansions = 0;
  while (total_budget(pairs, hi, b_c) > p_t) {
    lo = hi;
    hi *= 2.0;
    if (++expansions > kMaxIterations)
      throw NoConvergence("could not bracket the Lagrange multiplier");
  }

  double lambda = hi;
  for (int it = 0; it < kMaxIterations && hi > lo; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    const double total = total_budget(pairs, mid, b_c);
    lambda = mid;
    if (std::abs(total - p_t) <= 1e-12 * p_t) break;
    if (total > p_t)
      lo = mid;
    else
      hi = mid;
  }

  // Given the active set at lambda, the water level is linear in the
  // remaining power; solving for it removes the bisection residual.
  std::vector<double> q = budgets_for_lambda(pairs, lambda, b_c);
  double clamped = 0.0;
  double offsets = 0.0;
  int active = 0;
  for (std::size_t k = 0; k < pairs.size(); ++k) {
    if (q[k] > min_budget(pairs[k])) {
      offsets += water_offset(pairs[k]);
      ++active;
    } else {
      clamped += q[k];
    }
  }
  if (active > 0) {
    const double level = (p_t - clamped + offsets) / active;
    bool consistent = level > 0.0;
    std::vector<double> polished = q;
    for (std::size_t k = 0; k < pairs.size() && consistent; ++k) {
      if (q[k] > min_budget(pairs[k])) {
        polished[k] = level - water_offset(pairs[k]);
        consistent = polished[k] >= min_budget(pairs[k]);
      }
    }
    if (consistent) {
      q = std::move(polished);
      lambda = b_c / level;
    }
  }

  const double total = std::accumulate(q.begin(), q.end(), 0.0);
  if (std::abs(total - p_t) > kResidualTol * p_t) {
    throw NoConvergence("budget residual " + std::to_string(total - p_t) +
                        " W exceeds tolerance");
  }
  out.budgets = std::move(q);
  out.lambda = lambda;
  return out;
}

std::pair<double, double> pair_rates(const ChannelPair& p, double p1, double p2,
                                     double b_c) {
  const double r1 = b_c * std::log2(1.0 + p1 * p.gamma1);
  const double r2 = b_c * std::log2(1.0 + p2 * p.gamma2 / (1.0 + p1 * p.gamma2));
  return {r1, r2};
}

double rate_general(double cnr, std::span<const double> powers_below,
                    double own_power, double b_c) {
  const double interference =
      std::accumulate(powers_below.begin(), powers_below.end(), 0.0) * cnr;
  return b_c * std::log2(1.0 + own_power * cnr / (1.0 + interference));
}

PowerAllocation evaluate_assignment(const NetworkInstance& instance,
                                    std::span<const int> assignment,
                                    const EnvConfig& config) {
  const int n = instance.n_users;
  const int k = instance.n_channels;
  if (static_cast<int>(assignment.size()) != n)
    throw MalformedAssignment("assignment has " + std::to_string(assignment.size()) +
                              " entries, expected " + std::to_string(n));

  std::vector<std::vector<int>> members(k);
  for (int u = 0; u < n; ++u) {
    const int c = assignment[u];
    if (c < 0 || c >= k)
      throw MalformedAssignment("user " + std::to_string(u) +
                                " has no valid channel");
    members[c].push_back(u);
  }
  const double a = config.rate_factor();
  std::vector<ChannelPair> pairs;
  pairs.reserve(k);
  for (int c = 0; c < k; ++c) {
    if (members[c].size() != 2)
      throw MalformedAssignment("channel " + std::to_string(c) + " has " +
                                std::to_string(members[c].size()) + " users");
    pairs.push_back(make_channel_pair(instance, c, members[c][0], members[c][1], a, a));
  }

  PowerAllocation out = solve_budgets(pairs, config.p_t_w, instance.b_c);
  out.p1.resize(k);
  out.p2.resize(k);
  out.rates.resize(k);
  out.sum_rate = 0.0;
  for (int c = 0; c < k; ++c) {
    const auto [p1, p2] = split_budget(pairs[c], out.budgets[c]);
    out.p1[c] = p1;
    out.p2[c] = p2;
    out.rates[c] = pair_rates(pairs[c], p1, p2, instance.b_c);
    out.sum_rate += out.rates[c].first + out.rates[c].second;
  }
  out.pairs = std::move(pairs);
  return out;
}

}  // namespace noma
