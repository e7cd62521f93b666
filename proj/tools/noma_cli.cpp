// Command-line front end: train, eval, oracle, jra, sweep.

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "noma/commands.hpp"
#include "noma/config.hpp"

namespace {

std::vector<std::uint64_t> parse_seed_list(const std::string& text) {
  std::vector<std::uint64_t> out;
  std::stringstream ss(text);
  for (std::string item; std::getline(ss, item, ',');)
    if (!item.empty()) out.push_back(std::stoull(item));
  return out;
}

std::vector<std::string> split_values(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  for (std::string item; std::getline(ss, item, ',');)
    if (!item.empty()) out.push_back(item);
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Downlink NOMA channel assignment: JRA power allocation, exhaustive "
               "search and a policy-gradient trainer with replay memory"};
  app.require_subcommand(1);

  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out_dir;
  std::vector<std::string> overrides;
  app.add_option("--config", config_path, "key=value configuration file");
  app.add_option("--seed", seed, "master seed (train/sweep) or instance seed (oracle)");
  app.add_option("--out", out_dir, "output directory");
  app.add_option("--set", overrides, "override a config entry, key=value (repeatable)");
  app.fallthrough();

  auto* train = app.add_subcommand("train", "run the training loop");

  auto* eval = app.add_subcommand("eval", "compare a trained model against ES and random channels");
  std::string model_path;
  std::string eval_seeds;
  eval->add_option("--model", model_path, "model checkpoint")->required();
  eval->add_option("--seeds", eval_seeds, "comma-separated instance seeds (default: held-out set)");

  auto* oracle = app.add_subcommand("oracle", "exhaustive search on generated instances");
  std::string oracle_seeds;
  oracle->add_option("--seeds", oracle_seeds, "comma-separated instance seeds");

  auto* jra = app.add_subcommand("jra", "solve power allocation for a channel-pair table");
  std::string pairs_path = "-";
  jra->add_option("--pairs", pairs_path, "CSV with gamma1,gamma2[,a1,a2]; '-' for stdin");

  auto* sweep = app.add_subcommand("sweep", "hyperparameter / scenario sweep");
  std::string axis;
  std::string values;
  int repeats = 1;
  int jobs = 1;
  sweep->add_option("--axis", axis, "learning_rate, batch_size, n_features, architecture, "
                                    "p_t, n_users, r_min, replay_on_off")
      ->required();
  sweep->add_option("--values", values, "comma-separated axis values")->required();
  sweep->add_option("--repeats", repeats, "runs per value");
  sweep->add_option("--jobs", jobs, "worker threads");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return noma::exit_code::kUsage;
  }

  try {
    noma::RunConfig config = config_path.empty() ? noma::RunConfig{}
                                                 : noma::load_config(config_path);
    for (const auto& entry : overrides) {
      const auto eq = entry.find('=');
      if (eq == std::string::npos) throw noma::ValidationError(entry, "expected key=value");
      noma::apply_setting(config, entry.substr(0, eq), entry.substr(eq + 1));
    }
    if (out_dir) config.output_dir = *out_dir;
    if (seed && !oracle->parsed()) config.master_seed = *seed;
    config.validate();

    if (train->parsed()) return noma::cmd_train(config, std::cerr);

    if (eval->parsed()) {
      const auto seeds = eval_seeds.empty() ? noma::held_out_seeds(config.n_eval_seeds)
                                            : parse_seed_list(eval_seeds);
      return noma::cmd_eval(config, model_path, seeds, std::cout, std::cerr);
    }

    if (oracle->parsed()) {
      std::vector<std::uint64_t> seeds = parse_seed_list(oracle_seeds);
      if (seed) seeds.push_back(*seed);
      if (seeds.empty()) seeds = noma::held_out_seeds(config.n_eval_seeds);
      return noma::cmd_oracle(config, seeds, std::cout, std::cerr);
    }

    if (jra->parsed()) {
      if (pairs_path == "-") return noma::cmd_jra(config, std::cin, std::cout, std::cerr);
      std::ifstream in(pairs_path);
      if (!in) {
        std::cerr << "error: cannot open " << pairs_path << '\n';
        return noma::exit_code::kUsage;
      }
      return noma::cmd_jra(config, in, std::cout, std::cerr);
    }

    if (sweep->parsed()) {
      noma::SweepSpec spec;
      spec.axis = noma::parse_sweep_axis(axis);
      spec.values = split_values(values);
      spec.repeats = repeats;
      spec.jobs = jobs;
      return noma::cmd_sweep(spec, config, std::cerr);
    }
  } catch (const noma::BudgetExceeded& e) {
    std::cerr << "error: " << e.what() << '\n';
    return noma::exit_code::kBudgetExceeded;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return noma::exit_code::kUsage;
  }
  return noma::exit_code::kUsage;
}
