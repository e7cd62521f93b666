#include "noma/config.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

namespace noma {

namespace {

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

template <typename T>
T parse_number(std::string_view key, std::string_view value) {
  T out{};
  const auto* end = value.data() + value.size();
  const auto res = std::from_chars(value.data(), end, out);
  if (res.ec != std::errc() || res.ptr != end)
    throw ValidationError(std::string(key), "cannot parse '" + std::string(value) + "'");
  return out;
}

bool parse_bool(std::string_view key, std::string_view value) {
  if (value == "1" || value == "true" || value == "on" || value == "yes") return true;
  if (value == "0" || value == "false" || value == "off" || value == "no") return false;
  throw ValidationError(std::string(key), "expected a boolean, got '" + std::string(value) + "'");
}

std::vector<int> parse_int_list(std::string_view key, std::string_view value) {
  std::vector<int> out;
  std::size_t pos = 0;
  while (pos <= value.size()) {
    auto next = value.find_first_of(",;", pos);
    if (next == std::string_view::npos) next = value.size();
    out.push_back(parse_number<int>(key, trim(value.substr(pos, next - pos))));
    pos = next + 1;
  }
  return out;
}

}  // namespace

RunConfig::RunConfig() { finalize(); }

void RunConfig::finalize() {
  arch.n_users = env.n_users;
  arch.n_channels = env.n_channels();
  arch.n_features = env.n_features;
  train.val_seeds = validation_seeds(n_val_seeds);
}

void RunConfig::validate() const {
  try {
    env.validate();
    train.validate();
    arch.validate();
  } catch (const InvalidConfig& e) {
    const std::string msg = e.what();
    const auto colon = msg.find(':');
    throw ValidationError(msg.substr(0, colon),
                          colon == std::string::npos ? msg : msg.substr(colon + 2));
  }
  if (n_val_seeds < 0) throw ValidationError("val_seeds", "must be non-negative");
  if (n_eval_seeds < 1) throw ValidationError("eval_seeds", "must be at least 1");
  if (random_assignments < 1)
    throw ValidationError("random_assignments", "must be at least 1");
}

void apply_setting(RunConfig& c, std::string_view key, std::string_view value) {
  const std::string k(key);
  if (key == "n_users") c.env.n_users = parse_number<int>(key, value);
  else if (key == "b_tot_hz") c.env.b_tot_hz = parse_number<double>(key, value);
  else if (key == "n0_dbm_hz") c.env.n0_dbm_hz = parse_number<double>(key, value);
  else if (key == "alpha") c.env.alpha = parse_number<double>(key, value);
  else if (key == "d_min_m") c.env.d_min_m = parse_number<double>(key, value);
  else if (key == "d_max_m") c.env.d_max_m = parse_number<double>(key, value);
  else if (key == "r_min_bps_hz") c.env.r_min_bps_hz = parse_number<double>(key, value);
  else if (key == "p_t_w") c.env.p_t_w = parse_number<double>(key, value);
  else if (key == "features") c.env.n_features = parse_number<int>(key, value);
  else if (key == "lr") c.train.learning_rate = parse_number<double>(key, value);
  else if (key == "batch_size") c.train.batch_size = parse_number<int>(key, value);
  else if (key == "replay_capacity") c.train.replay_capacity = parse_number<int>(key, value);
  else if (key == "replay") c.train.replay_enabled = parse_bool(key, value);
  else if (key == "val_every") c.train.val_every = parse_number<int>(key, value);
  else if (key == "val_seeds") c.n_val_seeds = parse_number<int>(key, value);
  else if (key == "val_threshold") c.train.val_threshold = parse_number<double>(key, value);
  else if (key == "loss_threshold") c.train.loss_threshold = parse_number<double>(key, value);
  else if (key == "max_episodes") c.train.max_episodes = parse_number<int>(key, value);
  else if (key == "reward_scale") c.train.reward_scale = parse_number<double>(key, value);
  else if (key == "oracle_budget")
    c.train.oracle_budget = parse_number<std::uint64_t>(key, value);
  else if (key == "record_wall_time") c.train.record_wall_time = parse_bool(key, value);
  else if (key == "seed") c.master_seed = parse_number<std::uint64_t>(key, value);
  else if (key == "eval_seeds") c.n_eval_seeds = parse_number<int>(key, value);
  else if (key == "random_assignments") c.random_assignments = parse_number<int>(key, value);
  else if (key == "hidden_sizes") c.arch.hidden_sizes = parse_int_list(key, value);
  else if (key == "arch") {
    try {
      c.arch.kind = parse_arch_kind(value);
    } catch (const InvalidConfig& e) {
      throw ValidationError(k, "unknown architecture '" + std::string(value) + "'");
    }
  } else {
    throw ValidationError(k, "unknown key");
  }
  c.finalize();
}

RunConfig parse_config(std::string_view text) {
  RunConfig config;
  int line_no = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    auto eol = text.find('\n', pos);
    if (eol == std::string_view::npos) eol = text.size();
    std::string_view line = text.substr(pos, eol - pos);
    pos = eol + 1;
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos)
      line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos)
      throw ParseError(line_no, "expected key=value, got '" + std::string(line) + "'");
    const auto key = trim(line.substr(0, eq));
    const auto value = trim(line.substr(eq + 1));
    if (key.empty()) throw ParseError(line_no, "empty key");
    if (value.empty()) throw ParseError(line_no, "empty value for '" + std::string(key) + "'");
    apply_setting(config, key, value);
  }
  config.validate();
  return config;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open config file " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::string describe(const RunConfig& c) {
  std::ostringstream out;
  out << "N=" << c.env.n_users << " K=" << c.env.n_channels() << " F=" << c.env.n_features
      << " P_T=" << c.env.p_t_w << "W lr=" << c.train.learning_rate
      << " batch=" << c.train.batch_size << " arch=" << to_string(c.arch.kind)
      << " replay=" << (c.train.replay_enabled ? "on" : "off")
      << " seed=" << c.master_seed;
  return out.str();
}

}  // namespace noma
