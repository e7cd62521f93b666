#include <doctest.h>

#include <algorithm>
#include <set>

#include "noma/errors.hpp"
#include "noma/jra.hpp"
#include "noma/oracle.hpp"

using namespace noma;

TEST_CASE("assignment_count product formula") {
  CHECK(assignment_count(2) == 1u);
  CHECK(assignment_count(4) == 6u);
  CHECK(assignment_count(6) == 90u);
  CHECK(assignment_count(8) == 2520u);
  CHECK(assignment_count(10) == 113400u);
  CHECK_THROWS_AS(assignment_count(5), InvalidConfig);
  CHECK_THROWS_AS(assignment_count(0), InvalidConfig);
  CHECK_NOTHROW(assignment_count(22));
  CHECK_THROWS_AS(assignment_count(24), Overflow);
}

TEST_CASE("enumeration is complete and duplicate-free") {
  for (int n : {2, 4, 6, 8, 10}) {
    std::set<std::vector<int>> seen;
    std::uint64_t visited = 0;
    for_each_assignment(n, [&](std::span<const int> a) {
      ++visited;
      std::vector<int> v(a.begin(), a.end());
      std::vector<int> per_channel(n / 2, 0);
      for (int c : v) {
        REQUIRE(c >= 0);
        REQUIRE(c < n / 2);
        ++per_channel[c];
      }
      for (int cnt : per_channel) CHECK(cnt == 2);
      seen.insert(std::move(v));
    });
    CHECK(visited == assignment_count(n));
    CHECK(seen.size() == visited);
  }
  CHECK(enumerate_assignments(2).size() == 1u);
}

TEST_CASE("search on N=2 has a single assignment") {
  EnvConfig c;
  c.n_users = 2;
  const auto r = search(generate_instance(c, 1), c);
  CHECK(r.r_max == r.r_min);
  CHECK(r.n_evaluated == 1u);
  CHECK(r.n_infeasible == 0u);
}

TEST_CASE("search agrees with an independent brute force") {
  EnvConfig c;
  c.n_users = 4;
  const std::vector<std::vector<int>> all = {
      {0, 0, 1, 1}, {0, 1, 0, 1}, {0, 1, 1, 0}, {1, 0, 0, 1}, {1, 0, 1, 0}, {1, 1, 0, 0}};
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto inst = generate_instance(c, seed);
    double hi = -1, lo = 1e300;
    for (const auto& a : all) {
      const double r = evaluate_assignment(inst, a, c).sum_rate;
      hi = std::max(hi, r);
      lo = std::min(lo, r);
    }
    const auto res = search(inst, c);
    CHECK(res.r_max == hi);
    CHECK(res.r_min == lo);
    CHECK(res.n_evaluated + res.n_infeasible == 6u);
    CHECK(evaluate_assignment(inst, res.best_assignment, c).sum_rate == res.r_max);
    CHECK(evaluate_assignment(inst, res.worst_assignment, c).sum_rate == res.r_min);
  }
}

TEST_CASE("every assignment lies between the extrema") {
  EnvConfig c;
  c.n_users = 6;
  const auto inst = generate_instance(c, 77);
  const auto res = search(inst, c);
  CHECK(res.r_max >= res.r_min);
  for (const auto& a : enumerate_assignments(6)) {
    const double r = evaluate_assignment(inst, a, c).sum_rate;
    CHECK(r <= res.r_max);
    CHECK(r >= res.r_min);
  }
  // Pure function of the inputs.
  const auto again = search(inst, c);
  CHECK(again.r_max == res.r_max);
  CHECK(again.best_assignment == res.best_assignment);
}

TEST_CASE("r_max is non-decreasing in P_T") {
  EnvConfig c;
  c.n_users = 6;
  double previous = 0.0;
  for (double p_t : {2.0, 4.0, 8.0, 12.0}) {
    c.p_t_w = p_t;
    const double r = search(generate_instance(c, 5), c).r_max;
    CHECK(r >= previous);
    previous = r;
  }
}

TEST_CASE("budget and infeasibility errors") {
  EnvConfig c;
  c.n_users = 20;
  CHECK_THROWS_AS(search(generate_instance(c, 1), c), BudgetExceeded);
  c.n_users = 6;
  CHECK_THROWS_AS(search(generate_instance(c, 1), c, 10), BudgetExceeded);

  // Enough power for some pairings but not others: infeasible ones are
  // counted and skipped.
  c.n_users = 4;
  c.p_t_w = 1e-9;
  CHECK_THROWS_AS(search(generate_instance(c, 1), c), AllInfeasible);
}

TEST_CASE("infeasible assignments are skipped") {
  EnvConfig c;
  c.n_users = 4;
  const auto inst = generate_instance(c, 8);
  // Pick P_T between the smallest and largest total minimum budget.
  std::vector<double> needs;
  for (const auto& a : enumerate_assignments(4)) {
    double need = 0;
    for (int k = 0; k < 2; ++k) {
      std::vector<int> users;
      for (int u = 0; u < 4; ++u)
        if (a[u] == k) users.push_back(u);
      need += min_budget(make_channel_pair(inst, k, users[0], users[1], 4, 4));
    }
    needs.push_back(need);
  }
  std::sort(needs.begin(), needs.end());
  REQUIRE(needs.front() < needs.back());
  c.p_t_w = 0.5 * (needs.front() + needs.back());
  const auto res = search(inst, c);
  CHECK(res.n_infeasible > 0u);
  CHECK(res.n_evaluated + res.n_infeasible == 6u);
}
