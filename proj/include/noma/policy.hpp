#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "noma/env.hpp"

namespace noma {

enum class ArchKind { fully_connected, convolutional, attention };

std::string_view to_string(ArchKind kind);
ArchKind parse_arch_kind(std::string_view name);

struct Architecture {
  ArchKind kind = ArchKind::fully_connected;
  std::vector<int> hidden_sizes{128, 128};
  int n_users = 6;
  int n_channels = 3;
  int n_features = 3;

  int input_size() const { return n_users * n_channels * n_features; }
  int output_size() const { return n_users * n_channels; }
  void validate() const;
};

struct DenseLayer {
  Eigen::MatrixXd weight;  // out x in
  Eigen::VectorXd bias;    // out
};

// Weights of one policy network. Gradients use the same type.
struct PolicyParameters {
  Architecture arch;
  std::vector<DenseLayer> layers;

  std::size_t param_count() const;
  Eigen::VectorXd flatten() const;
  void assign(const Eigen::VectorXd& flat);
  PolicyParameters zeros_like() const;

  friend bool operator==(const PolicyParameters& a, const PolicyParameters& b);
};

// Action sequence of one episode plus the returns of the online and baseline
// rollouts on the same instance.
struct Trajectory {
  std::uint64_t instance_seed = 0;
  std::vector<Action> actions;
  double return_online = 0.0;
  double return_baseline = 0.0;
};

enum class RolloutMode { sample, greedy };

struct Rollout {
  std::vector<Action> actions;
  double log_prob = 0.0;
  std::vector<int> assignment;
};

// Glorot-uniform weights, zero biases. Only fully_connected is implemented.
PolicyParameters init_params(const Architecture& arch, std::uint64_t seed);

Eigen::VectorXd logits(const PolicyParameters& params, const StateTensor& state);

// Masked softmax over N*K actions. Masked entries are exactly 0.
// Throws DegenerateMask when no entry is legal.
Eigen::VectorXd masked_softmax(const Eigen::VectorXd& logits,
                               const ActionMask& mask);

Eigen::VectorXd forward(const PolicyParameters& params, const StateTensor& state,
                        const ActionMask& mask);

Rollout rollout(const PolicyParameters& params,
                std::shared_ptr<const NetworkInstance> instance,
                RolloutMode mode, std::uint64_t rng_seed);

double log_prob(const PolicyParameters& params, std::span<const Action> actions,
                std::shared_ptr<const NetworkInstance> instance);

struct WeightedTrajectory {
  std::span<const Action> actions;
  std::shared_ptr<const NetworkInstance> instance;
  double advantage = 0.0;
};

struct GradientResult {
  PolicyParameters gradient;
  std::vector<double> log_probs;  // per batch element, under params
};

// (1/|batch|) * sum_i advantage_i * grad log p(actions_i). All steps of the
// batch go through the network as one matrix.
GradientResult grad_weighted_log_prob(const PolicyParameters& params,
                                      std::span<const WeightedTrajectory> batch);

// Header line "arch,<kind>,N,K,F,<h1;h2;...>" then the little-endian float64
// parameters, layer by layer, weight (row-major) before bias.
void save_params(std::ostream& out, const PolicyParameters& params);
PolicyParameters load_params(std::istream& in);
void save_params(const std::string& path, const PolicyParameters& params);
PolicyParameters load_params(const std::string& path);

}  // namespace noma
