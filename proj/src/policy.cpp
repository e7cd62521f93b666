#include "noma/policy.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>

#include "noma/errors.hpp"
#include "noma/rng.hpp"

namespace noma {

std::string_view to_string(ArchKind kind) {
  switch (kind) {
    case ArchKind::fully_connected: return "fully_connected";
    case ArchKind::convolutional: return "convolutional";
    case ArchKind::attention: return "attention";
  }
  return "unknown";
}

ArchKind parse_arch_kind(std::string_view name) {
  if (name == "fully_connected" || name == "fcnn" || name == "fc")
    return ArchKind::fully_connected;
  if (name == "convolutional" || name == "cnn") return ArchKind::convolutional;
  if (name == "attention" || name == "ann") return ArchKind::attention;
  throw InvalidConfig("arch: unknown architecture '" + std::string(name) + "'");
}

void Architecture::validate() const {
  if (kind != ArchKind::fully_connected)
    throw InvalidConfig("arch: only fully_connected is available in this build");
  if (hidden_sizes.empty())
    throw InvalidConfig("hidden_sizes: fully_connected needs at least one layer");
  for (int h : hidden_sizes)
    if (h < 1) throw InvalidConfig("hidden_sizes: layer widths must be positive");
  if (n_users < 2 || n_channels < 1 || n_features < 1 || n_features > 3)
    throw InvalidConfig("arch: bad input dimensions");
}

std::size_t PolicyParameters::param_count() const {
  std::size_t n = 0;
  for (const auto& l : layers) n += l.weight.size() + l.bias.size();
  return n;
}

Eigen::VectorXd PolicyParameters::flatten() const {
  Eigen::VectorXd out(param_count());
  Eigen::Index i = 0;
  for (const auto& l : layers) {
    for (Eigen::Index r = 0; r < l.weight.rows(); ++r)
      for (Eigen::Index c = 0; c < l.weight.cols(); ++c) out[i++] = l.weight(r, c);
    out.segment(i, l.bias.size()) = l.bias;
    i += l.bias.size();
  }
  return out;
}

void PolicyParameters::assign(const Eigen::VectorXd& flat) {
  if (static_cast<std::size_t>(flat.size()) != param_count())
    throw InvalidConfig("parameter vector has the wrong length");
  Eigen::Index i = 0;
  for (auto& l : layers) {
    for (Eigen::Index r = 0; r < l.weight.rows(); ++r)
      for (Eigen::Index c = 0; c < l.weight.cols(); ++c) l.weight(r, c) = flat[i++];
    l.bias = flat.segment(i, l.bias.size());
    i += l.bias.size();
  }
}

PolicyParameters PolicyParameters::zeros_like() const {
  PolicyParameters out;
  out.arch = arch;
  for (const auto& l : layers)
    out.layers.push_back({Eigen::MatrixXd::Zero(l.weight.rows(), l.weight.cols()),
                          Eigen::VectorXd::Zero(l.bias.size())});
  return out;
}

bool operator==(const PolicyParameters& a, const PolicyParameters& b) {
  if (a.arch.kind != b.arch.kind || a.arch.hidden_sizes != b.arch.hidden_sizes ||
      a.arch.n_users != b.arch.n_users || a.arch.n_channels != b.arch.n_channels ||
      a.arch.n_features != b.arch.n_features || a.layers.size() != b.layers.size())
    return false;
  for (std::size_t i = 0; i < a.layers.size(); ++i) {
    const auto& x = a.layers[i];
    const auto& y = b.layers[i];
    if (x.weight.rows() != y.weight.rows() || x.weight.cols() != y.weight.cols() ||
        x.bias.size() != y.bias.size())
      return false;
    if (std::memcmp(x.weight.data(), y.weight.data(),
                    sizeof(double) * x.weight.size()) != 0 ||
        std::memcmp(x.bias.data(), y.bias.data(), sizeof(double) * x.bias.size()) != 0)
      return false;
  }
  return true;
}

PolicyParameters init_params(const Architecture& arch, std::uint64_t seed) {
  arch.validate();
  PolicyParameters params;
  params.arch = arch;
  Rng rng(seed);
  int fan_in = arch.input_size();
  std::vector<int> widths = arch.hidden_sizes;
  widths.push_back(arch.output_size());
  for (int fan_out : widths) {
    const double limit = std::sqrt(6.0 / (fan_in + fan_out));
    DenseLayer layer{Eigen::MatrixXd(fan_out, fan_in), Eigen::VectorXd::Zero(fan_out)};
    for (int r = 0; r < fan_out; ++r)
      for (int c = 0; c < fan_in; ++c) layer.weight(r, c) = rng.uniform(-limit, limit);
    params.layers.push_back(std::move(layer));
    fan_in = fan_out;
  }
  return params;
}

namespace {

void check_input(const PolicyParameters& params, const StateTensor& state) {
  const auto& a = params.arch;
  if (state.n_users != a.n_users || state.n_channels != a.n_channels ||
      state.n_features != a.n_features)
    throw InvalidConfig("state tensor shape does not match the policy architecture");
}

// Columns of `input` are samples. Keeps pre-activations for backprop.
struct ForwardCache {
  std::vector<Eigen::MatrixXd> activations;  // inputs to each layer
  std::vector<Eigen::MatrixXd> pre;          // pre-activations of hidden layers
  Eigen::MatrixXd output;
};

ForwardCache forward_batch(const PolicyParameters& params, Eigen::MatrixXd input) {
  ForwardCache cache;
  cache.activations.push_back(std::move(input));
  const std::size_t last = params.layers.size() - 1;
  for (std::size_t l = 0; l < params.layers.size(); ++l) {
    const auto& layer = params.layers[l];
    Eigen::MatrixXd z = layer.weight * cache.activations.back();
    z.colwise() += layer.bias;
    if (l == last) {
      cache.output = std::move(z);
    } else {
      cache.activations.push_back(z.cwiseMax(0.0));
      cache.pre.push_back(std::move(z));
    }
  }
  return cache;
}

// log p(index) under the masked softmax of `z`.
double masked_log_softmax_at(const Eigen::Ref<const Eigen::VectorXd>& z,
                             const ActionMask& mask, int index) {
  double max = -std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < z.size(); ++i)
    if (mask[i]) max = std::max(max, z[i]);
  double sum = 0.0;
  for (Eigen::Index i = 0; i < z.size(); ++i)
    if (mask[i]) sum += std::exp(z[i] - max);
  return z[index] - max - std::log(sum);
}

Eigen::Map<const Eigen::VectorXd> as_vector(const StateTensor& state) {
  return {state.values.data(), static_cast<Eigen::Index>(state.values.size())};
}

}  // namespace

Eigen::VectorXd logits(const PolicyParameters& params, const StateTensor& state) {
  check_input(params, state);
  Eigen::VectorXd h = as_vector(state);
  const std::size_t last = params.layers.size() - 1;
  for (std::size_t l = 0; l < params.layers.size(); ++l) {
    Eigen::VectorXd z = params.layers[l].weight * h + params.layers[l].bias;
    h = l == last ? std::move(z) : Eigen::VectorXd(z.cwiseMax(0.0));
  }
  return h;
}

Eigen::VectorXd masked_softmax(const Eigen::VectorXd& z, const ActionMask& mask) {
  if (static_cast<Eigen::Index>(mask.size()) != z.size())
    throw InvalidConfig("mask size does not match the number of actions");
  double max = -std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < z.size(); ++i)
    if (mask[i]) max = std::max(max, z[i]);
  if (max == -std::numeric_limits<double>::infinity())
    throw DegenerateMask("no legal action in mask");
  Eigen::VectorXd p = Eigen::VectorXd::Zero(z.size());
  double sum = 0.0;
  for (Eigen::Index i = 0; i < z.size(); ++i) {
    if (!mask[i]) continue;
    p[i] = std::exp(z[i] - max);
    sum += p[i];
  }
  return p / sum;
}

Eigen::VectorXd forward(const PolicyParameters& params, const StateTensor& state,
                        const ActionMask& mask) {
  return masked_softmax(logits(params, state), mask);
}

Rollout rollout(const PolicyParameters& params,
                std::shared_ptr<const NetworkInstance> instance, RolloutMode mode,
                std::uint64_t rng_seed) {
  Rng rng(rng_seed);
  Rollout out;
  EpisodeState state = reset(std::move(instance));
  const int k = state.n_channels();
  while (!state.terminal()) {
    const StateTensor tensor = build_state(state, params.arch.n_features);
    const ActionMask mask = legal_mask(state);
    const Eigen::VectorXd z = logits(params, tensor);
    const Eigen::VectorXd p = masked_softmax(z, mask);

    int chosen = -1;
    if (mode == RolloutMode::greedy) {
      for (Eigen::Index i = 0; i < p.size(); ++i)
        if (mask[i] && (chosen < 0 || p[i] > p[chosen])) chosen = static_cast<int>(i);
    } else {
      const double u = rng.uniform();
      double cumulative = 0.0;
      for (Eigen::Index i = 0; i < p.size(); ++i) {
        if (!mask[i]) continue;
        chosen = static_cast<int>(i);
        cumulative += p[i];
        if (u < cumulative) break;
      }
    }
    out.log_prob += masked_log_softmax_at(z, mask, chosen);
    const Action action = from_flat(chosen, k);
    out.actions.push_back(action);
    state = apply_action(state, action);
  }
  out.assignment = state.assignment();
  return out;
}

double log_prob(const PolicyParameters& params, std::span<const Action> actions,
                std::shared_ptr<const NetworkInstance> instance) {
  EpisodeState state = reset(std::move(instance));
  double total = 0.0;
  for (const auto& a : actions) {
    if (!state.is_legal(a)) throw IllegalTrajectory("trajectory action is masked out");
    const StateTensor tensor = build_state(state, params.arch.n_features);
    total += masked_log_softmax_at(logits(params, tensor), legal_mask(state),
                                   flat_index(a, state.n_channels()));
    state = apply_action(state, a);
  }
  return total;
}

GradientResult grad_weighted_log_prob(const PolicyParameters& params,
                                      std::span<const WeightedTrajectory> batch) {
  if (batch.empty()) throw InvalidConfig("gradient batch is empty");
  const auto& arch = params.arch;
  const int n_actions = arch.output_size();

  Eigen::Index rows = 0;
  for (const auto& item : batch) rows += static_cast<Eigen::Index>(item.actions.size());

  Eigen::MatrixXd input(arch.input_size(), rows);
  std::vector<ActionMask> masks;
  std::vector<int> chosen;
  std::vector<std::size_t> owner;
  masks.reserve(rows);
  chosen.reserve(rows);
  owner.reserve(rows);

  Eigen::Index col = 0;
  for (std::size_t b = 0; b < batch.size(); ++b) {
    EpisodeState state = reset(batch[b].instance);
    for (const auto& a : batch[b].actions) {
      if (!state.is_legal(a))
        throw IllegalTrajectory("trajectory action is masked out during replay");
      const StateTensor tensor = build_state(state, arch.n_features);
      check_input(params, tensor);
      input.col(col++) = as_vector(tensor);
      masks.push_back(legal_mask(state));
      chosen.push_back(flat_index(a, state.n_channels()));
      owner.push_back(b);
      state = apply_action(state, a);
    }
  }

  ForwardCache cache = forward_batch(params, std::move(input));

  GradientResult result;
  result.log_probs.assign(batch.size(), 0.0);
  const double inv_batch = 1.0 / static_cast<double>(batch.size());
  Eigen::MatrixXd delta = Eigen::MatrixXd::Zero(n_actions, rows);
  for (Eigen::Index r = 0; r < rows; ++r) {
    const auto z = cache.output.col(r);
    const ActionMask& mask = masks[r];
    const Eigen::VectorXd p = masked_softmax(z, mask);
    result.log_probs[owner[r]] += masked_log_softmax_at(z, mask, chosen[r]);
    const double w = batch[owner[r]].advantage * inv_batch;
    if (w == 0.0) continue;
    // d log p_a / d z = onehot(a) - p on legal entries, 0 elsewhere.
    for (int i = 0; i < n_actions; ++i)
      if (mask[i]) delta(i, r) = -w * p[i];
    delta(chosen[r], r) += w;
  }

  result.gradient = params.zeros_like();
  for (std::size_t l = params.layers.size(); l-- > 0;) {
    result.gradient.layers[l].weight.noalias() = delta * cache.activations[l].transpose();
    result.gradient.layers[l].bias = delta.rowwise().sum();
    if (l == 0) break;
    Eigen::MatrixXd back = params.layers[l].weight.transpose() * delta;
    delta = (cache.pre[l - 1].array() > 0.0).select(back, 0.0);
  }
  return result;
}

namespace {

void write_le(std::ostream& out, double value) {
  const auto bits = std::bit_cast<std::uint64_t>(value);
  char bytes[8];
  for (int i = 0; i < 8; ++i) bytes[i] = static_cast<char>((bits >> (8 * i)) & 0xff);
  out.write(bytes, 8);
}

double read_le(std::istream& in) {
  unsigned char bytes[8];
  if (!in.read(reinterpret_cast<char*>(bytes), 8))
    throw ModelFormatError("model file is truncated");
  std::uint64_t bits = 0;
  for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(bytes[i]) << (8 * i);
  return std::bit_cast<double>(bits);
}

}  // namespace

void save_params(std::ostream& out, const PolicyParameters& params) {
  const auto& a = params.arch;
  out << "arch," << to_string(a.kind) << ',' << a.n_users << ',' << a.n_channels
      << ',' << a.n_features << ',';
  for (std::size_t i = 0; i < a.hidden_sizes.size(); ++i)
    out << (i ? ";" : "") << a.hidden_sizes[i];
  out << '\n';
  for (const auto& l : params.layers) {
    for (Eigen::Index r = 0; r < l.weight.rows(); ++r)
      for (Eigen::Index c = 0; c < l.weight.cols(); ++c) write_le(out, l.weight(r, c));
    for (Eigen::Index i = 0; i < l.bias.size(); ++i) write_le(out, l.bias[i]);
  }
}

PolicyParameters load_params(std::istream& in) {
  std::string header;
  if (!std::getline(in, header)) throw ModelFormatError("missing model header");
  std::vector<std::string> fields;
  std::stringstream ss(header);
  for (std::string f; std::getline(ss, f, ',');) fields.push_back(f);
  if (fields.size() != 6 || fields[0] != "arch")
    throw ModelFormatError("bad model header: " + header);

  Architecture arch;
  try {
    arch.kind = parse_arch_kind(fields[1]);
    arch.n_users = std::stoi(fields[2]);
    arch.n_channels = std::stoi(fields[3]);
    arch.n_features = std::stoi(fields[4]);
    arch.hidden_sizes.clear();
    std::stringstream hs(fields[5]);
    for (std::string h; std::getline(hs, h, ';');) arch.hidden_sizes.push_back(std::stoi(h));
    arch.validate();
  } catch (const std::exception& e) {
    throw ModelFormatError(std::string("bad model header: ") + e.what());
  }

  PolicyParameters params = init_params(arch, 0).zeros_like();
  for (auto& l : params.layers) {
    for (Eigen::Index r = 0; r < l.weight.rows(); ++r)
      for (Eigen::Index c = 0; c < l.weight.cols(); ++c) l.weight(r, c) = read_le(in);
    for (Eigen::Index i = 0; i < l.bias.size(); ++i) l.bias[i] = read_le(in);
  }
  if (in.peek() != std::char_traits<char>::eof())
    throw ModelFormatError("trailing bytes after the parameter blob");
  return params;
}

void save_params(const std::string& path, const PolicyParameters& params) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open " + path + " for writing");
  save_params(out, params);
  if (!out) throw Error("failed writing " + path);
}

PolicyParameters load_params(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ModelFormatError("cannot open " + path);
  return load_params(in);
}

}  // namespace noma
