#include "noma/env.hpp"

#include <cmath>
#include <iomanip>
#include <string>

#include "noma/errors.hpp"
#include "noma/jra.hpp"
#include "noma/rng.hpp"

namespace noma {

double EnvConfig::noise_power() const {
  // dBm/Hz -> W/Hz
  const double n0_w_hz = std::pow(10.0, (n0_dbm_hz - 30.0) / 10.0);
  return n0_w_hz * channel_bandwidth();
}

double EnvConfig::rate_factor() const { return std::exp2(r_min_bps_hz); }

void EnvConfig::validate() const {
  auto fail = [](const std::string& key, const std::string& why) {
    throw InvalidConfig(key + ": " + why);
  };
  if (n_users < 2) fail("n_users", "must be at least 2");
  if (n_users % 2 != 0) fail("n_users", "must be even (two users per channel)");
  if (!(b_tot_hz > 0.0)) fail("b_tot_hz", "must be positive");
  if (!std::isfinite(n0_dbm_hz)) fail("n0_dbm_hz", "must be finite");
  if (!(alpha > 0.0)) fail("alpha", "must be positive");
  if (!(d_min_m > 0.0)) fail("d_min_m", "must be positive");
  if (!(d_min_m < d_max_m)) fail("d_max_m", "must exceed d_min_m");
  if (!(r_min_bps_hz > 0.0)) fail("r_min_bps_hz", "must be positive");
  // The closed-form split needs A = 2^r_min >= 2.
  if (r_min_bps_hz < 1.0) fail("r_min_bps_hz", "must be >= 1 so that 2^r_min >= 2");
  if (!(p_t_w > 0.0)) fail("p_t_w", "must be positive");
  if (n_features < 1 || n_features > 3) fail("features", "must be 1, 2 or 3");
}

NetworkInstance make_instance(const EnvConfig& config, std::uint64_t seed,
                              std::vector<double> distances,
                              std::vector<double> fading) {
  const int n = config.n_users;
  const int k = config.n_channels();
  NetworkInstance inst;
  inst.seed = seed;
  inst.n_users = n;
  inst.n_channels = k;
  inst.b_c = config.channel_bandwidth();
  inst.d_max = config.d_max_m;
  inst.distances = std::move(distances);
  inst.fading = std::move(fading);
  inst.cnr.resize(static_cast<std::size_t>(n) * k);

  const double sigma2 = config.noise_power();
  for (int u = 0; u < n; ++u) {
    const double path = std::pow(inst.distances[u], -config.alpha);
    for (int c = 0; c < k; ++c) {
      const double h = inst.fading_at(u, c) * path;
      inst.cnr[u * k + c] = h * h / sigma2;
    }
  }
  return inst;
}

NetworkInstance generate_instance(const EnvConfig& config, std::uint64_t seed) {
  const int n = config.n_users;
  const int k = config.n_channels();
  Rng rng(seed);
  std::vector<double> distances(n);
  for (auto& d : distances) d = rng.uniform(config.d_min_m, config.d_max_m);
  std::vector<double> fading(static_cast<std::size_t>(n) * k);
  for (auto& g : fading) {
    g = rng.rayleigh_unit_power();
    // A zero draw would give a zero CNR; the probability is 2^-53 per draw.
    while (!(g > 0.0)) g = rng.rayleigh_unit_power();
  }
  return make_instance(config, seed, std::move(distances), std::move(fading));
}

EpisodeState::EpisodeState(std::shared_ptr<const NetworkInstance> instance)
    : instance_(std::move(instance)),
      assigned_(instance_->n_users),
      channel_count_(instance_->n_channels, 0) {}

bool EpisodeState::is_legal(const Action& a) const {
  if (a.user < 0 || a.user >= n_users() || a.channel < 0 ||
      a.channel >= n_channels())
    return false;
  return !assigned_[a.user].has_value() && channel_count_[a.channel] < 2;
}

std::vector<int> EpisodeState::assignment() const {
  std::vector<int> out(assigned_.size(), -1);
  for (std::size_t i = 0; i < assigned_.size(); ++i)
    if (assigned_[i]) out[i] = *assigned_[i];
  return out;
}

EpisodeState reset(std::shared_ptr<const NetworkInstance> instance) {
  return EpisodeState(std::move(instance));
}

EpisodeState reset(const NetworkInstance& instance) {
  return EpisodeState(std::make_shared<const NetworkInstance>(instance));
}

ActionMask legal_mask(const EpisodeState& state) {
  const int n = state.n_users();
  const int k = state.n_channels();
  ActionMask mask(static_cast<std::size_t>(n) * k, false);
  for (int u = 0; u < n; ++u) {
    if (state.assigned_channel()[u]) continue;
    for (int c = 0; c < k; ++c) mask[u * k + c] = state.channel_count()[c] < 2;
  }
  return mask;
}

EpisodeState apply_action(const EpisodeState& state, const Action& action) {
  if (!state.is_legal(action)) {
    throw IllegalAction("action (user " + std::to_string(action.user) +
                        ", channel " + std::to_string(action.channel) +
                        ") is not legal at step " + std::to_string(state.step()));
  }
  EpisodeState next = state;
  next.assigned_[action.user] = action.channel;
  ++next.channel_count_[action.channel];
  ++next.step_;
  return next;
}

StateTensor build_state(const EpisodeState& state, int n_features) {
  if (n_features < 1 || n_features > 3)
    throw InvalidConfig("features: must be 1, 2 or 3");
  const auto& inst = state.instance();
  StateTensor t;
  t.n_users = inst.n_users;
  t.n_channels = inst.n_channels;
  t.n_features = n_features;
  t.values.resize(static_cast<std::size_t>(t.n_users) * t.n_channels * n_features);

  std::size_t i = 0;
  for (int u = 0; u < t.n_users; ++u) {
    for (int c = 0; c < t.n_channels; ++c) {
      t.values[i++] = std::log10(inst.cnr_at(u, c)) / 10.0;
      if (n_features >= 2) t.values[i++] = inst.distances[u] / inst.d_max;
      if (n_features >= 3) t.values[i++] = state.channel_count()[c] / 2.0;
    }
  }
  return t;
}

double step_reward(const EpisodeState& state, const Action& action,
                   const PowerAllocation& powers) {
  const auto& r = powers.rates.at(action.channel);
  return state.channel_count().at(action.channel) == 0 ? r.first : r.second;
}

void write_instance_csv(std::ostream& out, const NetworkInstance& instance,
                        bool header) {
  if (header) out << "seed,user,channel,distance_m,fading,cnr\n";
  const auto old = out.precision(17);
  for (int u = 0; u < instance.n_users; ++u)
    for (int c = 0; c < instance.n_channels; ++c)
      out << instance.seed << ',' << u << ',' << c << ','
          << instance.distances[u] << ',' << instance.fading_at(u, c) << ','
          << instance.cnr_at(u, c) << '\n';
  out.precision(old);
}

}  // namespace noma
