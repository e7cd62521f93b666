#include <doctest.h>

#include <cmath>
#include <numeric>
#include <random>

#include "noma/env.hpp"
#include "noma/errors.hpp"
#include "noma/jra.hpp"
#include "oracles.hpp"

using namespace noma;

namespace {

ChannelPair pair_of(double g1, double g2, double a1 = 4.0, double a2 = 4.0) {
  return {g1, g2, a1, a2, 0, 1};
}

// CNRs in the range produced by the default scenario.
ChannelPair random_pair(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> lg(3.5, 7.0);
  double g1 = std::pow(10.0, lg(rng));
  double g2 = std::pow(10.0, lg(rng));
  if (g2 > g1) std::swap(g1, g2);
  return pair_of(g1, g2);
}

}  // namespace

TEST_CASE("min_budget by substitution") {
  CHECK(min_budget(pair_of(1, 1)) == doctest::Approx(15.0));
  CHECK(min_budget(pair_of(1000, 100)) == doctest::Approx(0.042));
  CHECK(min_budget(pair_of(1e12, 1e12)) < 1e-10);
}

TEST_CASE("split_budget closed form") {
  const auto [p1, p2] = split_budget(pair_of(1000, 100), 0.1);
  CHECK(p1 == doctest::Approx(0.0175));
  CHECK(p2 == doctest::Approx(0.0825));
  CHECK_THROWS_AS(split_budget(pair_of(1000, 100), 0.041), BudgetTooSmall);
}

TEST_CASE("budget equal to gamma meets both minimum rates exactly") {
  std::mt19937_64 rng(11);
  const double b_c = 5e6 / 3;
  for (int i = 0; i < 100; ++i) {
    auto p = random_pair(rng);
    const double q = min_budget(p);
    const auto [p1, p2] = split_budget(p, q);
    const auto [r1, r2] = pair_rates(p, p1, p2, b_c);
    const double r_min = 2.0 * b_c;
    CHECK(std::abs(r1 - r_min) <= 1e-9 * r_min);
    CHECK(std::abs(r2 - r_min) <= 1e-9 * r_min);
  }
}

TEST_CASE("split_budget matches brute-force grid optimum") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> extra(0.0, 6.0);
  const double b_c = 5e6 / 3;
  for (int i = 0; i < 25; ++i) {
    const auto p = random_pair(rng);
    const double q = min_budget(p) + extra(rng);
    const auto [p1, p2] = split_budget(p, q);
    CHECK(p1 >= 0.0);
    CHECK(p1 <= p2);
    const auto [r1, r2] = pair_rates(p, p1, p2, b_c);
    const auto [grid_best, grid_p1] = testing::grid_best_split(
        {p.gamma1, p.gamma2, p.a1, p.a2}, q, b_c, 100000);
    (void)grid_p1;
    // Closed form is at least as good as every grid point, and the grid gets
    // within its resolution.
    CHECK(r1 + r2 >= grid_best * (1 - 1e-12));
    CHECK(std::abs(r1 + r2 - grid_best) <= 1e-4 * grid_best);
    CHECK(r1 >= 2.0 * b_c * (1 - 1e-9));
    CHECK(r2 >= 2.0 * b_c * (1 - 1e-9));
  }
}

TEST_CASE("pair_rates and rate_general") {
  const auto p = pair_of(3.0, 1.0);
  CHECK(pair_rates(p, 0, 0, 1.0) == std::pair<double, double>{0.0, 0.0});
  const auto [r1, r2] = pair_rates(p, 1.0, 6.0, 1.0);
  CHECK(r1 == doctest::Approx(2.0));
  CHECK(r2 == doctest::Approx(2.0));
  CHECK(pair_rates(p, 1e12, 1.0, 1.0).second < 1e-9);

  const double none[] = {0.0};
  CHECK(rate_general(3.0, std::span<const double>{}, 1.0, 1.0) == doctest::Approx(r1));
  const double one[] = {1.0};
  CHECK(rate_general(1.0, one, 6.0, 1.0) == doctest::Approx(r2));
  CHECK(rate_general(0.0, none, 5.0, 1.0) == 0.0);
}

TEST_CASE("budgets_for_lambda limits and symmetry") {
  const std::vector<ChannelPair> pairs{pair_of(1e5, 1e4), pair_of(3e6, 2e4)};
  const auto clamped = budgets_for_lambda(pairs, 1e30, 1e6);
  CHECK(clamped[0] == min_budget(pairs[0]));
  CHECK(clamped[1] == min_budget(pairs[1]));
  const auto open = budgets_for_lambda(pairs, 1e-12, 1e6);
  CHECK(open[0] > 1e17);
  CHECK(open[1] > 1e17);
  const std::vector<ChannelPair> same{pair_of(1e5, 1e4), pair_of(1e5, 1e4)};
  const auto q = budgets_for_lambda(same, 0.3, 1e6);
  CHECK(q[0] == q[1]);
}

TEST_CASE("solve_budgets examples") {
  SUBCASE("single channel takes everything") {
    const std::vector<ChannelPair> one{pair_of(1e5, 1e3)};
    const auto a = solve_budgets(one, 12.0, 5e6);
    CHECK(a.budgets[0] == doctest::Approx(12.0).epsilon(1e-12));
  }
  SUBCASE("two identical channels split evenly") {
    const std::vector<ChannelPair> two{pair_of(1e5, 1e3), pair_of(1e5, 1e3)};
    const auto a = solve_budgets(two, 12.0, 2.5e6);
    CHECK(a.budgets[0] == doctest::Approx(6.0).epsilon(1e-12));
    CHECK(a.budgets[1] == doctest::Approx(6.0).epsilon(1e-12));
  }
  SUBCASE("budget equal to sum of gammas") {
    const std::vector<ChannelPair> two{pair_of(100, 10), pair_of(50, 20)};
    const double total = min_budget(two[0]) + min_budget(two[1]);
    const auto a = solve_budgets(two, total, 1e6);
    CHECK(a.budgets[0] == doctest::Approx(min_budget(two[0])));
    CHECK(a.budgets[1] == doctest::Approx(min_budget(two[1])));
  }
  SUBCASE("infeasible") {
    const std::vector<ChannelPair> two{pair_of(1, 1), pair_of(1, 1)};
    CHECK_THROWS_AS(solve_budgets(two, 12.0, 1e6), Infeasible);
  }
}

TEST_CASE("waterfilling invariants on random channels") {
  std::mt19937_64 rng(99);
  const double b_c = 5e6 / 3;
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<ChannelPair> pairs;
    for (int k = 0; k < 3; ++k) pairs.push_back(random_pair(rng));
    const auto a = solve_budgets(pairs, 12.0, b_c);
    const double total = std::accumulate(a.budgets.begin(), a.budgets.end(), 0.0);
    CHECK(std::abs(total - 12.0) <= 1e-9 * 12.0);
    double level = -1.0;
    for (std::size_t k = 0; k < pairs.size(); ++k) {
      CHECK(a.budgets[k] >= min_budget(pairs[k]));
      if (a.budgets[k] > min_budget(pairs[k])) {
        const double w = a.budgets[k] + water_offset(pairs[k]);
        if (level < 0) level = w;
        CHECK(std::abs(w - level) <= 1e-6 * level);
        CHECK(w == doctest::Approx(b_c / a.lambda).epsilon(1e-9));
      }
    }
  }
}

TEST_CASE("clamped channels stay at gamma") {
  // A very weak channel with a large offset ends up at its minimum budget.
  const std::vector<ChannelPair> pairs{pair_of(1e7, 1e6), pair_of(2.0, 1.0)};
  const double p_t = min_budget(pairs[1]) + 0.5;
  const auto a = solve_budgets(pairs, p_t, 1e6);
  CHECK(a.budgets[1] == doctest::Approx(min_budget(pairs[1])));
  CHECK(a.budgets[0] + a.budgets[1] == doctest::Approx(p_t).epsilon(1e-12));
}

TEST_CASE("evaluate_assignment") {
  EnvConfig c;
  c.n_users = 4;
  const auto inst = generate_instance(c, 17);

  SUBCASE("malformed assignments") {
    const std::vector<int> three_on_zero{0, 0, 0, 1};
    CHECK_THROWS_AS(evaluate_assignment(inst, three_on_zero, c), MalformedAssignment);
    const std::vector<int> short_one{0, 0, 1};
    CHECK_THROWS_AS(evaluate_assignment(inst, short_one, c), MalformedAssignment);
    const std::vector<int> out_of_range{0, 0, 1, 2};
    CHECK_THROWS_AS(evaluate_assignment(inst, out_of_range, c), MalformedAssignment);
  }

  SUBCASE("constraints hold") {
    const std::vector<int> a{0, 1, 1, 0};
    const auto alloc = evaluate_assignment(inst, a, c);
    const double r_min = c.min_rate_bps();
    double total_q = 0.0;
    double sum = 0.0;
    for (int k = 0; k < 2; ++k) {
      CHECK(alloc.p1[k] >= 0.0);
      CHECK(alloc.p1[k] <= alloc.p2[k]);
      CHECK(std::abs(alloc.p1[k] + alloc.p2[k] - alloc.budgets[k]) <= 1e-9 * alloc.budgets[k]);
      CHECK(alloc.rates[k].first >= r_min * (1 - 1e-6));
      CHECK(alloc.rates[k].second >= r_min * (1 - 1e-6));
      CHECK(alloc.pairs[k].gamma1 >= alloc.pairs[k].gamma2);
      total_q += alloc.budgets[k];
      sum += alloc.rates[k].first + alloc.rates[k].second;
    }
    CHECK(total_q <= c.p_t_w + 1e-9);
    CHECK(alloc.sum_rate == doctest::Approx(sum));
  }

  SUBCASE("single channel is the closed form at q = P_T") {
    EnvConfig c2;
    c2.n_users = 2;
    const auto i2 = generate_instance(c2, 3);
    const std::vector<int> a{0, 0};
    const auto alloc = evaluate_assignment(i2, a, c2);
    const auto pair = make_channel_pair(i2, 0, 0, 1, 4.0, 4.0);
    const auto [p1, p2] = split_budget(pair, c2.p_t_w);
    const auto [r1, r2] = pair_rates(pair, p1, p2, i2.b_c);
    CHECK(alloc.sum_rate == doctest::Approx(r1 + r2).epsilon(1e-12));
  }

  SUBCASE("sum rate is non-decreasing in P_T") {
    const std::vector<int> a{1, 0, 1, 0};
    double previous = 0.0;
    for (double p_t : {0.5, 1.0, 2.0, 4.0, 8.0, 12.0, 20.0}) {
      EnvConfig cp = c;
      cp.p_t_w = p_t;
      const double r = evaluate_assignment(inst, a, cp).sum_rate;
      CHECK(r >= previous);
      previous = r;
    }
  }
}

TEST_CASE("evaluate_assignment matches nested grid search") {
  // Outer grid over the split of P_T between the two channels, inner grid
  // over p1 on each channel. Refined once around the coarse optimum.
  EnvConfig c;
  c.n_users = 4;
  for (std::uint64_t seed : {21u, 22u}) {
    const auto inst = generate_instance(c, seed);
    const std::vector<int> a{0, 1, 0, 1};
    const auto alloc = evaluate_assignment(inst, a, c);

    testing::GridPair gp[2];
    for (int k = 0; k < 2; ++k) {
      const int u = k, v = k + 2;
      double g1 = inst.cnr_at(u, k), g2 = inst.cnr_at(v, k);
      if (g2 > g1) std::swap(g1, g2);
      gp[k] = {g1, g2, 4.0, 4.0};
    }
    auto value = [&](double q0) {
      const auto b0 = testing::grid_best_split(gp[0], q0, inst.b_c, 20000).first;
      const auto b1 = testing::grid_best_split(gp[1], c.p_t_w - q0, inst.b_c, 20000).first;
      return b0 + b1;
    };
    double best = -1, best_q = 0;
    for (int i = 1; i < 200; ++i) {
      const double q0 = c.p_t_w * i / 200.0;
      const double v = value(q0);
      if (v > best) best = v, best_q = q0;
    }
    const double step = c.p_t_w / 200.0;
    for (int i = -50; i <= 50; ++i) {
      const double q0 = best_q + step * i / 50.0;
      if (q0 <= 0 || q0 >= c.p_t_w) continue;
      best = std::max(best, value(q0));
    }
    CHECK(alloc.sum_rate >= best * (1 - 1e-9));
    CHECK(std::abs(alloc.sum_rate - best) <= 1e-5 * best);
  }
}
