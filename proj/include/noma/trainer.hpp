#pragma once

#include <cstdint>
#include <deque>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "noma/env.hpp"
#include "noma/oracle.hpp"
#include "noma/policy.hpp"

namespace noma {

struct TrainConfig {
  double learning_rate = 5e-4;
  int batch_size = 40;
  int replay_capacity = 10'000;
  // When false the memory holds only the newest batch_size trajectories,
  // which turns the update into plain REINFORCE with a baseline.
  bool replay_enabled = true;
  int max_episodes = 5000;
  int val_every = 200;
  std::vector<std::uint64_t> val_seeds;
  double val_threshold = 0.05;
  double loss_threshold = 0.01;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_epsilon = 1e-8;
  // Advantages enter the gradient and the monitored loss in units of
  // reward_scale bit/s.
  double reward_scale = 1e6;
  std::uint64_t oracle_budget = kDefaultSearchBudget;
  bool record_wall_time = false;

  int effective_capacity() const {
    return replay_enabled ? replay_capacity : batch_size;
  }
  void validate() const;
};

// Fixed validation / evaluation sets, independent of the training seed.
std::vector<std::uint64_t> validation_seeds(int count);
std::vector<std::uint64_t> held_out_seeds(int count);

// Seed of the instance used by training episode `episode`.
std::uint64_t episode_seed(std::uint64_t master_seed, int episode);

class ReplayMemory {
 public:
  explicit ReplayMemory(int capacity);

  void push(Trajectory trajectory);
  int size() const { return static_cast<int>(entries_.size()); }
  int capacity() const { return capacity_; }
  const std::deque<Trajectory>& entries() const { return entries_; }

 private:
  int capacity_;
  std::deque<Trajectory> entries_;
};

// Uniform sample; with replacement only when the memory is smaller than the
// batch. Throws EmptyMemory.
std::vector<Trajectory> replay_sample(const ReplayMemory& memory, int batch_size,
                                      std::uint64_t rng_seed);

struct AdamState {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  long step = 0;
  Eigen::VectorXd m;
  Eigen::VectorXd v;
};

// theta <- theta + lr * m_hat / (sqrt(v_hat) + eps), i.e. ascent on `grad`.
void adam_ascent(PolicyParameters& params, const PolicyParameters& grad,
                 AdamState& state, double lr);

// Sum rate of an assignment; an infeasible power problem counts as zero.
double assignment_return(const NetworkInstance& instance,
                         std::span<const int> assignment,
                         const EnvConfig& config);

Trajectory run_episode(const PolicyParameters& online,
                       const PolicyParameters& baseline, const EnvConfig& config,
                       std::uint64_t instance_seed, std::uint64_t rollout_seed);

struct UpdateResult {
  double loss = 0.0;  // -mean(advantage * log_prob), before the step
  std::vector<double> log_probs;
};

UpdateResult update_step(PolicyParameters& online,
                         std::span<const Trajectory> batch,
                         const EnvConfig& config, AdamState& adam, double lr,
                         double reward_scale = 1.0);

// Copies online into baseline iff the trajectory's online return is strictly
// larger. Returns whether a copy happened.
bool sync_baseline(const PolicyParameters& online, PolicyParameters& baseline,
                   const Trajectory& trajectory);

struct ValidationEntry {
  std::uint64_t seed = 0;
  double r_max = 0.0;
  double r_min = 0.0;
  double r_bl = 0.0;
  double error = 0.0;
};

struct ValidationReport {
  int episode = 0;
  std::vector<ValidationEntry> entries;
  bool passed = false;

  double max_error() const;
  double mean_error() const;
};

// (r_max - r_bl) / (r_max - r_min); 0 when the extrema coincide.
double error_rate(double r_max, double r_min, double r_bl);

ValidationReport validate(const PolicyParameters& baseline,
                          const EnvConfig& config,
                          std::span<const std::uint64_t> seeds,
                          std::span<const SearchResult> oracle, double threshold);

struct EpisodeRow {
  int episode = 0;
  double loss = 0.0;
  double r_online = 0.0;
  double r_baseline = 0.0;
  bool synced = false;
  double elapsed_s = 0.0;
};

struct TrainMetrics {
  std::vector<EpisodeRow> episodes;
  std::vector<ValidationReport> validations;
};

struct TrainResult {
  PolicyParameters baseline;
  TrainMetrics metrics;
  bool converged = false;
  int episodes_run = 0;
  // First episode at which a validation round passed, if any.
  std::optional<int> first_validation_pass;
};

TrainResult train(const EnvConfig& env, const TrainConfig& config,
                  const Architecture& arch, std::uint64_t master_seed);

// episode,loss,r_online,r_baseline,synced,elapsed_s
void write_metrics_csv(std::ostream& out, const TrainMetrics& metrics);
// episode,seed,r_max,r_min,r_bl,error
void write_validation_csv(std::ostream& out, const TrainMetrics& metrics);

}  // namespace noma
