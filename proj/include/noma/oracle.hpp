#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "noma/env.hpp"

namespace noma {

inline constexpr std::uint64_t kDefaultSearchBudget = 10'000'000;

struct SearchResult {
  double r_max = 0.0;
  double r_min = 0.0;
  std::vector<int> best_assignment;
  std::vector<int> worst_assignment;
  std::uint64_t n_evaluated = 0;
  std::uint64_t n_infeasible = 0;
};

// prod_{i=0}^{(N-2)/2} C(N - 2i, 2). Throws Overflow past 64 bits.
std::uint64_t assignment_count(int n_users);

// Visits every labeled assignment once: channel 0 takes a pair from the
// remaining users in lexicographic order, then channel 1, and so on.
void for_each_assignment(int n_users,
                         const std::function<void(std::span<const int>)>& visit);

std::vector<std::vector<int>> enumerate_assignments(int n_users);

// Exact extrema of the JRA sum rate over all feasible assignments. Ties go to
// the lexicographically smallest assignment.
// Throws BudgetExceeded or AllInfeasible.
SearchResult search(const NetworkInstance& instance, const EnvConfig& config,
                    std::uint64_t budget = kDefaultSearchBudget);

}  // namespace noma
