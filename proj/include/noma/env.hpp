#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <ostream>
#include <vector>

namespace noma {

// Scenario parameters. Defaults reproduce the reference simulation setting:
// 5 MHz, -170 dBm/Hz, path-loss exponent 2, users between 50 m and 300 m,
// 2 bit/s/Hz minimum rate and 12 W at the base station.
struct EnvConfig {
  int n_users = 6;
  double b_tot_hz = 5e6;
  double n0_dbm_hz = -170.0;
  double alpha = 2.0;
  double d_min_m = 50.0;
  double d_max_m = 300.0;
  double r_min_bps_hz = 2.0;
  double p_t_w = 12.0;
  int n_features = 3;

  int n_channels() const { return n_users / 2; }
  // B_c = B_tot / K.
  double channel_bandwidth() const { return b_tot_hz / n_channels(); }
  // sigma^2 = N_0 (W/Hz) * B_c.
  double noise_power() const;
  // A = 2^(R_min / B_c) with R_min expressed per Hz.
  double rate_factor() const;
  // Minimum rate per user in bit/s.
  double min_rate_bps() const { return r_min_bps_hz * channel_bandwidth(); }

  // Throws InvalidConfig naming the first violated invariant.
  void validate() const;
};

struct NetworkInstance {
  std::uint64_t seed = 0;
  int n_users = 0;
  int n_channels = 0;
  double b_c = 0.0;
  std::vector<double> distances;  // per user, meters
  std::vector<double> fading;     // n_users x n_channels, row-major
  std::vector<double> cnr;        // n_users x n_channels, row-major, 1/W
  double d_max = 0.0;             // normalizer for the distance feature

  double fading_at(int n, int k) const { return fading[n * n_channels + k]; }
  double cnr_at(int n, int k) const { return cnr[n * n_channels + k]; }
};

struct Action {
  int user = 0;
  int channel = 0;

  friend bool operator==(const Action&, const Action&) = default;
};

class EpisodeState {
 public:
  EpisodeState() = default;
  explicit EpisodeState(std::shared_ptr<const NetworkInstance> instance);

  const NetworkInstance& instance() const { return *instance_; }
  std::shared_ptr<const NetworkInstance> instance_ptr() const { return instance_; }
  int n_users() const { return instance_->n_users; }
  int n_channels() const { return instance_->n_channels; }

  const std::vector<std::optional<int>>& assigned_channel() const { return assigned_; }
  const std::vector<int>& channel_count() const { return channel_count_; }
  int step() const { return step_; }
  bool terminal() const { return step_ == n_users(); }

  bool is_legal(const Action& a) const;

  // Per-user channel index. Only meaningful once terminal.
  std::vector<int> assignment() const;

 private:
  friend EpisodeState apply_action(const EpisodeState&, const Action&);

  std::shared_ptr<const NetworkInstance> instance_;
  std::vector<std::optional<int>> assigned_;
  std::vector<int> channel_count_;
  int step_ = 0;
};

// N x K x F grid, index ((n * K) + k) * F + f.
struct StateTensor {
  int n_users = 0;
  int n_channels = 0;
  int n_features = 0;
  std::vector<double> values;

  double at(int n, int k, int f) const {
    return values[(static_cast<std::size_t>(n) * n_channels + k) * n_features + f];
  }
};

// Row-major N x K mask; entry n * K + k.
using ActionMask = std::vector<bool>;

inline int flat_index(const Action& a, int n_channels) {
  return a.user * n_channels + a.channel;
}
inline Action from_flat(int index, int n_channels) {
  return {index / n_channels, index % n_channels};
}

struct PowerAllocation;

NetworkInstance generate_instance(const EnvConfig& config, std::uint64_t seed);

// Builds the CNRs from explicit distances and fading amplitudes.
NetworkInstance make_instance(const EnvConfig& config, std::uint64_t seed,
                              std::vector<double> distances,
                              std::vector<double> fading);

EpisodeState reset(const NetworkInstance& instance);
EpisodeState reset(std::shared_ptr<const NetworkInstance> instance);

ActionMask legal_mask(const EpisodeState& state);

// Throws IllegalAction when the action is masked out.
EpisodeState apply_action(const EpisodeState& state, const Action& action);

StateTensor build_state(const EpisodeState& state, int n_features);

// Rate credited to an action: the channel's first-slot rate (R_1) when the
// action opens the channel, the second-slot rate (R_2) otherwise.
double step_reward(const EpisodeState& state, const Action& action,
                   const PowerAllocation& powers);

// Debug dump: seed,user,channel,distance_m,fading,cnr
void write_instance_csv(std::ostream& out, const NetworkInstance& instance,
                        bool header = true);

}  // namespace noma
