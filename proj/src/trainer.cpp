#include "noma/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <ostream>
#include <string>

#include "noma/errors.hpp"
#include "noma/jra.hpp"
#include "noma/rng.hpp"

namespace noma {

void TrainConfig::validate() const {
  auto fail = [](const std::string& key, const std::string& why) {
    throw InvalidConfig(key + ": " + why);
  };
  if (!(learning_rate > 0.0)) fail("lr", "must be positive");
  if (batch_size < 1) fail("batch_size", "must be at least 1");
  if (replay_capacity < batch_size) fail("replay_capacity", "must be >= batch_size");
  if (max_episodes < 0) fail("max_episodes", "must be non-negative");
  if (val_every < 1) fail("val_every", "must be at least 1");
  if (!(val_threshold >= 0.0)) fail("val_threshold", "must be non-negative");
  if (!(loss_threshold >= 0.0)) fail("loss_threshold", "must be non-negative");
  if (!(reward_scale > 0.0)) fail("reward_scale", "must be positive");
  if (!(adam_beta1 >= 0.0 && adam_beta1 < 1.0)) fail("adam_beta1", "must be in [0, 1)");
  if (!(adam_beta2 >= 0.0 && adam_beta2 < 1.0)) fail("adam_beta2", "must be in [0, 1)");
  if (!(adam_epsilon > 0.0)) fail("adam_epsilon", "must be positive");
}

std::vector<std::uint64_t> validation_seeds(int count) {
  std::vector<std::uint64_t> out;
  for (int i = 0; i < count; ++i) out.push_back(derive_seed(0, streams::kValidation, i));
  return out;
}

std::vector<std::uint64_t> held_out_seeds(int count) {
  std::vector<std::uint64_t> out;
  for (int i = 0; i < count; ++i) out.push_back(derive_seed(0, streams::kHeldOut, i));
  return out;
}

std::uint64_t episode_seed(std::uint64_t master_seed, int episode) {
  return derive_seed(master_seed, streams::kEpisode, static_cast<std::uint64_t>(episode));
}

ReplayMemory::ReplayMemory(int capacity) : capacity_(capacity) {
  if (capacity < 1) throw InvalidConfig("replay_capacity: must be at least 1");
}

void ReplayMemory::push(Trajectory trajectory) {
  while (size() >= capacity_) entries_.pop_front();
  entries_.push_back(std::move(trajectory));
}

std::vector<Trajectory> replay_sample(const ReplayMemory& memory, int batch_size,
                                      std::uint64_t rng_seed) {
  if (memory.size() == 0) throw EmptyMemory("replay memory is empty");
  Rng rng(rng_seed);
  const auto& entries = memory.entries();
  const auto n = static_cast<std::uint64_t>(memory.size());
  std::vector<Trajectory> out;
  out.reserve(batch_size);
  if (memory.size() < batch_size) {
    for (int i = 0; i < batch_size; ++i) out.push_back(entries[rng.below(n)]);
    return out;
  }
  // Partial Fisher-Yates over indices.
  std::vector<std::uint64_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  for (int i = 0; i < batch_size; ++i) {
    const auto j = i + rng.below(n - i);
    std::swap(idx[i], idx[j]);
    out.push_back(entries[idx[i]]);
  }
  return out;
}

void adam_ascent(PolicyParameters& params, const PolicyParameters& grad,
                 AdamState& state, double lr) {
  const Eigen::VectorXd g = grad.flatten();
  if (state.m.size() != g.size()) {
    state.m = Eigen::VectorXd::Zero(g.size());
    state.v = Eigen::VectorXd::Zero(g.size());
    state.step = 0;
  }
  ++state.step;
  state.m = state.beta1 * state.m + (1.0 - state.beta1) * g;
  state.v = state.beta2 * state.v + (1.0 - state.beta2) * g.cwiseProduct(g);
  const double c1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
  const double c2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));
  const Eigen::VectorXd m_hat = state.m / c1;
  const Eigen::VectorXd v_hat = state.v / c2;
  Eigen::VectorXd theta = params.flatten();
  theta.array() += lr * m_hat.array() / (v_hat.array().sqrt() + state.epsilon);
  params.assign(theta);
}

double assignment_return(const NetworkInstance& instance,
                         std::span<const int> assignment, const EnvConfig& config) {
  try {
    return evaluate_assignment(instance, assignment, config).sum_rate;
  } catch (const Infeasible&) {
    return 0.0;
  }
}

Trajectory run_episode(const PolicyParameters& online,
                       const PolicyParameters& baseline, const EnvConfig& config,
                       std::uint64_t instance_seed, std::uint64_t rollout_seed) {
  auto instance =
      std::make_shared<const NetworkInstance>(generate_instance(config, instance_seed));
  const Rollout sampled = rollout(online, instance, RolloutMode::sample, rollout_seed);
  const Rollout greedy = rollout(baseline, instance, RolloutMode::greedy, rollout_seed);

  Trajectory t;
  t.instance_seed = instance_seed;
  t.actions = sampled.actions;
  t.return_online = assignment_return(*instance, sampled.assignment, config);
  t.return_baseline = assignment_return(*instance, greedy.assignment, config);
  return t;
}

UpdateResult update_step(PolicyParameters& online, std::span<const Trajectory> batch,
                         const EnvConfig& config, AdamState& adam, double lr,
                         double reward_scale) {
  if (batch.empty()) throw InvalidConfig("update batch is empty");
  std::vector<WeightedTrajectory> weighted;
  weighted.reserve(batch.size());
  for (const auto& t : batch) {
    auto instance =
        std::make_shared<const NetworkInstance>(generate_instance(config, t.instance_seed));
    weighted.push_back({t.actions, std::move(instance),
                        (t.return_online - t.return_baseline) / reward_scale});
  }
  GradientResult g = grad_weighted_log_prob(online, weighted);

  UpdateResult result;
  double acc = 0.0;
  for (std::size_t i = 0; i < weighted.size(); ++i)
    acc += weighted[i].advantage * g.log_probs[i];
  result.loss = -acc / static_cast<double>(weighted.size());
  result.log_probs = std::move(g.log_probs);
  adam_ascent(online, g.gradient, adam, lr);
  return result;
}

bool sync_baseline(const PolicyParameters& online, PolicyParameters& baseline,
                   const Trajectory& trajectory) {
  if (trajectory.return_online > trajectory.return_baseline) {
    baseline = online;
    return true;
  }
  return false;
}

double ValidationReport::max_error() const {
  double m = 0.0;
  for (const auto& e : entries) m = std::max(m, e.error);
  return m;
}

double ValidationReport::mean_error() const {
  if (entries.empty()) return 0.0;
  double s = 0.0;
  for (const auto& e : entries) s += e.error;
  return s / static_cast<double>(entries.size());
}

double error_rate(double r_max, double r_min, double r_bl) {
  if (!(r_max > r_min)) return 0.0;
  return (r_max - r_bl) / (r_max - r_min);
}

ValidationReport validate(const PolicyParameters& baseline, const EnvConfig& config,
                          std::span<const std::uint64_t> seeds,
                          std::span<const SearchResult> oracle, double threshold) {
  if (seeds.size() != oracle.size())
    throw InvalidConfig("validation seeds and oracle results differ in length");
  ValidationReport report;
  report.passed = true;
  for (std::size_t i = 0; i < seeds.size(); ++i) {
    auto instance =
        std::make_shared<const NetworkInstance>(generate_instance(config, seeds[i]));
    const Rollout r = rollout(baseline, instance, RolloutMode::greedy, 0);
    ValidationEntry e;
    e.seed = seeds[i];
    e.r_max = oracle[i].r_max;
    e.r_min = oracle[i].r_min;
    e.r_bl = assignment_return(*instance, r.assignment, config);
    e.error = error_rate(e.r_max, e.r_min, e.r_bl);
    report.passed = report.passed && e.error <= threshold;
    report.entries.push_back(e);
  }
  return report;
}

TrainResult train(const EnvConfig& env, const TrainConfig& config,
                  const Architecture& arch, std::uint64_t master_seed) {
  env.validate();
  config.validate();
  if (arch.n_users != env.n_users || arch.n_channels != env.n_channels() ||
      arch.n_features != env.n_features)
    throw InvalidConfig("arch: dimensions do not match the environment");

  const auto start = std::chrono::steady_clock::now();
  const auto elapsed = [&] {
    if (!config.record_wall_time) return 0.0;
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  };

  PolicyParameters online = init_params(arch, derive_seed(master_seed, streams::kInit));
  TrainResult result;
  result.baseline = online;

  // Validation extrema are computed once, up front. Instances too large for the
  // oracle budget skip validation entirely.
  std::vector<std::uint64_t> val_seeds = config.val_seeds;
  std::vector<SearchResult> oracle;
  bool can_validate = !val_seeds.empty();
  if (can_validate) {
    try {
      if (assignment_count(env.n_users) > config.oracle_budget) can_validate = false;
    } catch (const Overflow&) {
      can_validate = false;
    }
  }
  if (can_validate)
    for (auto s : val_seeds)
      oracle.push_back(search(generate_instance(env, s), env, config.oracle_budget));

  ReplayMemory memory(config.effective_capacity());
  AdamState adam{config.adam_beta1, config.adam_beta2, config.adam_epsilon, 0, {}, {}};
  bool validation_passed = false;

  for (int e = 0; e < config.max_episodes; ++e) {
    const std::uint64_t seed = episode_seed(master_seed, e);
    Trajectory traj = run_episode(online, result.baseline, env, seed,
                                  derive_seed(master_seed, streams::kRollout, e));
    memory.push(traj);
    const auto batch = replay_sample(memory, config.batch_size,
                                     derive_seed(master_seed, streams::kReplay, e));
    const UpdateResult upd = update_step(online, batch, env, adam,
                                         config.learning_rate, config.reward_scale);
    const bool synced = sync_baseline(online, result.baseline, traj);

    result.metrics.episodes.push_back(
        {e, upd.loss, traj.return_online, traj.return_baseline, synced, elapsed()});
    result.episodes_run = e + 1;

    if (can_validate && (e + 1) % config.val_every == 0) {
      ValidationReport report =
          validate(result.baseline, env, val_seeds, oracle, config.val_threshold);
      report.episode = e;
      validation_passed = report.passed;
      result.metrics.validations.push_back(std::move(report));
      if (validation_passed && !result.first_validation_pass)
        result.first_validation_pass = e;
    }
    if (validation_passed && std::abs(upd.loss) < config.loss_threshold) {
      result.converged = true;
      break;
    }
  }
  return result;
}

void write_metrics_csv(std::ostream& out, const TrainMetrics& metrics) {
  const auto old = out.precision(17);
  out << "episode,loss,r_online,r_baseline,synced,elapsed_s\n";
  for (const auto& r : metrics.episodes)
    out << r.episode << ',' << r.loss << ',' << r.r_online << ',' << r.r_baseline
        << ',' << (r.synced ? 1 : 0) << ',' << r.elapsed_s << '\n';
  out.precision(old);
}

void write_validation_csv(std::ostream& out, const TrainMetrics& metrics) {
  const auto old = out.precision(17);
  out << "episode,seed,r_max,r_min,r_bl,error\n";
  for (const auto& v : metrics.validations)
    for (const auto& e : v.entries)
      out << v.episode << ',' << e.seed << ',' << e.r_max << ',' << e.r_min << ','
          << e.r_bl << ',' << e.error << '\n';
  out.precision(old);
}

}  // namespace noma
