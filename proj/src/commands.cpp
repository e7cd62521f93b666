#include "noma/commands.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <ostream>
#include <thread>

#include "noma/csv.hpp"
#include "noma/jra.hpp"
#include "noma/oracle.hpp"
#include "noma/rng.hpp"

namespace noma {

namespace fs = std::filesystem;

namespace {

std::string opt(const std::optional<double>& v) { return v ? csv::format(*v) : ""; }

std::ofstream open_output(const fs::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open " + path.string() + " for writing");
  return out;
}

}  // namespace

std::vector<int> random_assignment(int n_users, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<int> perm(n_users);
  std::iota(perm.begin(), perm.end(), 0);
  for (int i = n_users - 1; i > 0; --i)
    std::swap(perm[i], perm[rng.below(static_cast<std::uint64_t>(i) + 1)]);
  std::vector<int> assignment(n_users);
  for (int i = 0; i < n_users; ++i) assignment[perm[i]] = i / 2;
  return assignment;
}

EvalRow evaluate_seed(const PolicyParameters& params, const EnvConfig& env,
                      std::uint64_t seed, int random_assignments,
                      std::uint64_t oracle_budget) {
  auto instance = std::make_shared<const NetworkInstance>(generate_instance(env, seed));
  EvalRow row;
  row.seed = seed;
  row.n_users = env.n_users;
  row.n_channels = env.n_channels();
  row.p_t = env.p_t_w;

  const Rollout greedy = rollout(params, instance, RolloutMode::greedy, 0);
  row.r_drl = assignment_return(*instance, greedy.assignment, env);

  double total = 0.0;
  int feasible = 0;
  for (int i = 0; i < random_assignments; ++i) {
    const auto a = random_assignment(env.n_users, derive_seed(seed, streams::kRandomAssign, i));
    try {
      total += evaluate_assignment(*instance, a, env).sum_rate;
      ++feasible;
    } catch (const Infeasible&) {
    }
  }
  row.r_random_mean = feasible ? total / feasible : 0.0;

  try {
    const SearchResult s = search(*instance, env, oracle_budget);
    row.r_max = s.r_max;
    row.r_min = s.r_min;
    row.error = error_rate(s.r_max, s.r_min, row.r_drl);
  } catch (const BudgetExceeded&) {
  }
  return row;
}

void write_eval_csv(std::ostream& out, const std::vector<EvalRow>& rows) {
  csv::write_row(out, {"seed", "n", "k", "p_t", "r_drl", "r_random_mean", "r_max",
                       "r_min", "error"});
  for (const auto& r : rows)
    csv::write_row(out, {std::to_string(r.seed), std::to_string(r.n_users),
                         std::to_string(r.n_channels), csv::format(r.p_t),
                         csv::format(r.r_drl), csv::format(r.r_random_mean),
                         opt(r.r_max), opt(r.r_min), opt(r.error)});
}

int cmd_train(const RunConfig& config, std::ostream& log) {
  config.validate();
  const fs::path dir(config.output_dir);
  fs::create_directories(dir);

  log << "training: " << describe(config) << '\n';
  const TrainResult result =
      train(config.env, config.train, config.arch, config.master_seed);

  {
    auto out = open_output(dir / "metrics.csv");
    write_metrics_csv(out, result.metrics);
  }
  {
    auto out = open_output(dir / "validation.csv");
    write_validation_csv(out, result.metrics);
  }
  save_params((dir / "model.bin").string(), result.baseline);

  log << "episodes: " << result.episodes_run
      << (result.converged ? " (converged)" : " (stopping criteria not met)") << '\n';
  if (!result.metrics.validations.empty())
    log << "last validation max error: "
        << result.metrics.validations.back().max_error() << '\n';
  return result.converged ? exit_code::kOk : exit_code::kNotConverged;
}

int cmd_eval(const RunConfig& config, const std::string& model_path,
             const std::vector<std::uint64_t>& seeds, std::ostream& out,
             std::ostream& log) {
  config.validate();
  const PolicyParameters params = load_params(model_path);
  if (params.arch.n_users != config.env.n_users ||
      params.arch.n_features != config.env.n_features) {
    log << "model dimensions do not match the configuration\n";
    return exit_code::kUsage;
  }
  std::vector<EvalRow> rows;
  for (auto s : seeds) {
    rows.push_back(evaluate_seed(params, config.env, s, config.random_assignments,
                                 config.train.oracle_budget));
    if (!rows.back().r_max)
      log << "seed " << s << ": exhaustive search over budget, ES columns omitted\n";
  }
  write_eval_csv(out, rows);
  return exit_code::kOk;
}

int cmd_oracle(const RunConfig& config, const std::vector<std::uint64_t>& seeds,
               std::ostream& out, std::ostream& log) {
  config.validate();
  std::vector<std::vector<std::string>> rows;
  for (auto s : seeds) {
    SearchResult r;
    try {
      r = search(generate_instance(config.env, s), config.env, config.train.oracle_budget);
    } catch (const BudgetExceeded& e) {
      log << "error: " << e.what() << '\n';
      return exit_code::kBudgetExceeded;
    }
    rows.push_back({std::to_string(s), std::to_string(config.env.n_users),
                    std::to_string(config.env.n_channels()), csv::format(config.env.p_t_w),
                    csv::format(r.r_max), csv::format(r.r_min),
                    std::to_string(r.n_evaluated), std::to_string(r.n_infeasible)});
  }
  csv::write_row(out, {"seed", "n", "k", "p_t", "r_max", "r_min", "n_evaluated",
                       "n_infeasible"});
  for (const auto& r : rows) csv::write_row(out, r);
  return exit_code::kOk;
}

int cmd_jra(const RunConfig& config, std::istream& in, std::ostream& out,
            std::ostream& log) {
  auto table = csv::read(in);
  if (table.empty()) {
    log << "error: empty channel-pair table\n";
    return exit_code::kUsage;
  }
  const auto& header = table.front();
  auto column = [&](const std::string& name) -> int {
    const auto it = std::find(header.begin(), header.end(), name);
    return it == header.end() ? -1 : static_cast<int>(it - header.begin());
  };
  const int c1 = column("gamma1");
  const int c2 = column("gamma2");
  const int ca1 = column("a1");
  const int ca2 = column("a2");
  if (c1 < 0 || c2 < 0) {
    log << "error: table needs gamma1 and gamma2 columns\n";
    return exit_code::kUsage;
  }

  std::vector<ChannelPair> pairs;
  const double a_default = config.env.rate_factor();
  try {
    for (std::size_t i = 1; i < table.size(); ++i) {
      const auto& row = table[i];
      if (row.size() == 1 && row[0].empty()) continue;
      auto num = [&](int col, double fallback) {
        if (col < 0) return fallback;
        return std::stod(row.at(col));
      };
      ChannelPair p;
      p.gamma1 = num(c1, 0.0);
      p.gamma2 = num(c2, 0.0);
      p.a1 = num(ca1, a_default);
      p.a2 = num(ca2, a_default);
      if (p.gamma2 > p.gamma1) std::swap(p.gamma1, p.gamma2);
      if (!(p.gamma2 > 0.0) || p.a1 < 2.0 || p.a2 < 2.0) {
        log << "error: row " << i << " needs positive CNRs and rate factors >= 2\n";
        return exit_code::kUsage;
      }
      pairs.push_back(p);
    }
  } catch (const std::exception& e) {
    log << "error: cannot parse channel-pair table: " << e.what() << '\n';
    return exit_code::kUsage;
  }
  if (pairs.empty()) {
    log << "error: no channel rows\n";
    return exit_code::kUsage;
  }

  const double b_c = config.env.b_tot_hz / static_cast<double>(pairs.size());
  PowerAllocation alloc;
  try {
    alloc = solve_budgets(pairs, config.env.p_t_w, b_c);
  } catch (const Error& e) {
    log << "error: " << e.what() << '\n';
    return exit_code::kUsage;
  }
  csv::write_row(out, {"channel", "q", "p1", "p2", "r1", "r2", "sum_rate"});
  double tq = 0, tp1 = 0, tp2 = 0, tr1 = 0, tr2 = 0;
  for (std::size_t k = 0; k < pairs.size(); ++k) {
    const auto [p1, p2] = split_budget(pairs[k], alloc.budgets[k]);
    const auto [r1, r2] = pair_rates(pairs[k], p1, p2, b_c);
    csv::write_row(out, {std::to_string(k), csv::format(alloc.budgets[k]), csv::format(p1),
                         csv::format(p2), csv::format(r1), csv::format(r2),
                         csv::format(r1 + r2)});
    tq += alloc.budgets[k];
    tp1 += p1;
    tp2 += p2;
    tr1 += r1;
    tr2 += r2;
  }
  csv::write_row(out, {"total", csv::format(tq), csv::format(tp1), csv::format(tp2),
                       csv::format(tr1), csv::format(tr2), csv::format(tr1 + tr2)});
  return exit_code::kOk;
}

SweepAxis parse_sweep_axis(std::string_view name) {
  if (name == "learning_rate" || name == "lr") return SweepAxis::learning_rate;
  if (name == "batch_size") return SweepAxis::batch_size;
  if (name == "n_features" || name == "features") return SweepAxis::n_features;
  if (name == "architecture" || name == "arch") return SweepAxis::architecture;
  if (name == "p_t") return SweepAxis::p_t;
  if (name == "n_users") return SweepAxis::n_users;
  if (name == "r_min") return SweepAxis::r_min;
  if (name == "replay_on_off" || name == "replay") return SweepAxis::replay_on_off;
  throw ValidationError("axis", "unknown sweep axis '" + std::string(name) + "'");
}

std::string_view to_string(SweepAxis axis) {
  switch (axis) {
    case SweepAxis::learning_rate: return "learning_rate";
    case SweepAxis::batch_size: return "batch_size";
    case SweepAxis::n_features: return "n_features";
    case SweepAxis::architecture: return "architecture";
    case SweepAxis::p_t: return "p_t";
    case SweepAxis::n_users: return "n_users";
    case SweepAxis::r_min: return "r_min";
    case SweepAxis::replay_on_off: return "replay_on_off";
  }
  return "unknown";
}

void SweepSpec::validate() const {
  if (values.empty()) throw ValidationError("values", "sweep needs at least one value");
  if (repeats < 1) throw ValidationError("repeats", "must be at least 1");
  if (jobs < 1) throw ValidationError("jobs", "must be at least 1");
}

RunConfig sweep_cell(const RunConfig& base, SweepAxis axis, const std::string& value,
                     int repeat) {
  static constexpr std::string_view kKeys[] = {
      "lr", "batch_size", "features", "arch", "p_t_w", "n_users", "r_min_bps_hz", "replay"};
  RunConfig cell = base;
  apply_setting(cell, kKeys[static_cast<int>(axis)], value);
  cell.master_seed = derive_seed(base.master_seed, streams::kSweep, repeat);
  cell.validate();
  return cell;
}

double SweepRow::mean_r_drl() const {
  double s = 0.0;
  for (const auto& e : eval) s += e.r_drl;
  return eval.empty() ? 0.0 : s / eval.size();
}

double SweepRow::mean_r_random() const {
  double s = 0.0;
  for (const auto& e : eval) s += e.r_random_mean;
  return eval.empty() ? 0.0 : s / eval.size();
}

std::optional<double> SweepRow::mean_r_max() const {
  if (eval.empty()) return std::nullopt;
  double s = 0.0;
  for (const auto& e : eval) {
    if (!e.r_max) return std::nullopt;
    s += *e.r_max;
  }
  return s / eval.size();
}

std::optional<double> SweepRow::mean_error() const {
  if (eval.empty()) return std::nullopt;
  double s = 0.0;
  for (const auto& e : eval) {
    if (!e.error) return std::nullopt;
    s += *e.error;
  }
  return s / eval.size();
}

std::optional<double> SweepRow::max_error() const {
  if (eval.empty()) return std::nullopt;
  double m = 0.0;
  for (const auto& e : eval) {
    if (!e.error) return std::nullopt;
    m = std::max(m, *e.error);
  }
  return m;
}

std::vector<SweepRow> run_sweep(const SweepSpec& spec, const RunConfig& base,
                                std::ostream& log) {
  spec.validate();
  struct Cell {
    std::string value;
    int repeat;
  };
  std::vector<Cell> cells;
  for (const auto& v : spec.values)
    for (int r = 0; r < spec.repeats; ++r) cells.push_back({v, r});

  std::vector<SweepRow> rows(cells.size());
  auto run_cell = [&](std::size_t i) {
    SweepRow& row = rows[i];
    row.value = cells[i].value;
    row.repeat = cells[i].repeat;
    try {
      const RunConfig cfg = sweep_cell(base, spec.axis, row.value, row.repeat);
      row.seed = cfg.master_seed;
      const auto start = std::chrono::steady_clock::now();
      const TrainResult result = train(cfg.env, cfg.train, cfg.arch, cfg.master_seed);
      if (cfg.train.record_wall_time)
        row.wall_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
                         .count();
      row.converged = result.converged;
      row.episodes = result.episodes_run;
      for (auto s : held_out_seeds(cfg.n_eval_seeds))
        row.eval.push_back(evaluate_seed(result.baseline, cfg.env, s,
                                         cfg.random_assignments, cfg.train.oracle_budget));
    } catch (const std::exception& e) {
      row.failure = e.what();
    }
  };

  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < cells.size(); i = next++) run_cell(i);
  };
  const int n_threads = std::min<int>(spec.jobs, static_cast<int>(cells.size()));
  if (n_threads <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (int t = 0; t < n_threads; ++t) pool.emplace_back(worker);
  }
  for (const auto& r : rows)
    log << to_string(spec.axis) << '=' << r.value << " repeat " << r.repeat << ": "
        << (r.failure.empty() ? "mean r_drl " + csv::format(r.mean_r_drl())
                              : "failed: " + r.failure)
        << '\n';
  return rows;
}

void write_sweep_csv(std::ostream& out, SweepAxis axis, const std::vector<SweepRow>& rows) {
  csv::write_row(out, {"axis", "value", "repeat", "seed", "converged", "episodes", "wall_s",
                       "mean_r_drl", "mean_r_random", "mean_r_max", "mean_error",
                       "max_error", "failure"});
  for (const auto& r : rows)
    csv::write_row(out, {std::string(to_string(axis)), r.value, std::to_string(r.repeat),
                         std::to_string(r.seed), r.converged ? "1" : "0",
                         std::to_string(r.episodes), csv::format(r.wall_s),
                         csv::format(r.mean_r_drl()), csv::format(r.mean_r_random()),
                         opt(r.mean_r_max()), opt(r.mean_error()), opt(r.max_error()),
                         r.failure});
}

int cmd_sweep(const SweepSpec& spec, const RunConfig& base, std::ostream& log) {
  base.validate();
  const auto rows = run_sweep(spec, base, log);
  const fs::path dir(base.output_dir);
  fs::create_directories(dir);
  auto out = open_output(dir / ("sweep_" + std::string(to_string(spec.axis)) + ".csv"));
  write_sweep_csv(out, spec.axis, rows);
  return exit_code::kOk;
}

}  // namespace noma
