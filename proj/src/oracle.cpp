#include "noma/oracle.hpp"

#include <algorithm>
#include <limits>
#include <string>

#include "noma/errors.hpp"
#include "noma/jra.hpp"

namespace noma {

std::uint64_t assignment_count(int n_users) {
  if (n_users < 2 || n_users % 2 != 0)
    throw InvalidConfig("n_users: must be even and at least 2");
  std::uint64_t count = 1;
  for (int m = n_users; m >= 2; m -= 2) {
    const std::uint64_t pairs = static_cast<std::uint64_t>(m) * (m - 1) / 2;
    if (count > std::numeric_limits<std::uint64_t>::max() / pairs)
      throw Overflow("assignment count for N=" + std::to_string(n_users) +
                     " does not fit in 64 bits");
    count *= pairs;
  }
  return count;
}

namespace {

void enumerate(std::vector<int>& assignment, std::vector<bool>& used, int channel,
               int n_channels,
               const std::function<void(std::span<const int>)>& visit) {
  if (channel == n_channels) {
    visit(assignment);
    return;
  }
  const int n = static_cast<int>(assignment.size());
  for (int i = 0; i < n; ++i) {
    if (used[i]) continue;
    used[i] = true;
    assignment[i] = channel;
    for (int j = i + 1; j < n; ++j) {
      if (used[j]) continue;
      used[j] = true;
      assignment[j] = channel;
      enumerate(assignment, used, channel + 1, n_channels, visit);
      used[j] = false;
      assignment[j] = -1;
    }
    used[i] = false;
    assignment[i] = -1;
  }
}

}  // namespace

void for_each_assignment(int n_users,
                         const std::function<void(std::span<const int>)>& visit) {
  if (n_users < 2 || n_users % 2 != 0)
    throw InvalidConfig("n_users: must be even and at least 2");
  std::vector<int> assignment(n_users, -1);
  std::vector<bool> used(n_users, false);
  enumerate(assignment, used, 0, n_users / 2, visit);
}

std::vector<std::vector<int>> enumerate_assignments(int n_users) {
  std::vector<std::vector<int>> out;
  for_each_assignment(n_users, [&](std::span<const int> a) {
    out.emplace_back(a.begin(), a.end());
  });
  return out;
}

SearchResult search(const NetworkInstance& instance, const EnvConfig& config,
                    std::uint64_t budget) {
  std::uint64_t count = 0;
  try {
    count = assignment_count(instance.n_users);
  } catch (const Overflow&) {
    throw BudgetExceeded("exhaustive search for N=" +
                         std::to_string(instance.n_users) +
                         " exceeds the evaluation budget");
  }
  if (count > budget)
    throw BudgetExceeded("exhaustive search for N=" +
                         std::to_string(instance.n_users) + " needs " +
                         std::to_string(count) + " evaluations, budget is " +
                         std::to_string(budget));

  SearchResult result;
  bool any = false;
  for_each_assignment(instance.n_users, [&](std::span<const int> a) {
    double rate;
    try {
      rate = evaluate_assignment(instance, a, config).sum_rate;
    } catch (const Infeasible&) {
      ++result.n_infeasible;
      return;
    }
    ++result.n_evaluated;
    const auto lex_less = [&](const std::vector<int>& other) {
      return std::lexicographical_compare(a.begin(), a.end(), other.begin(),
                                          other.end());
    };
    if (!any || rate > result.r_max ||
        (rate == result.r_max && lex_less(result.best_assignment))) {
      result.r_max = rate;
      result.best_assignment.assign(a.begin(), a.end());
    }
    if (!any || rate < result.r_min ||
        (rate == result.r_min && lex_less(result.worst_assignment))) {
      result.r_min = rate;
      result.worst_assignment.assign(a.begin(), a.end());
    }
    any = true;
  });
  if (!any) throw AllInfeasible("no assignment satisfies the minimum budgets");
  return result;
}

}  // namespace noma
