#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "noma/config.hpp"

namespace noma {

namespace exit_code {
inline constexpr int kOk = 0;
inline constexpr int kUsage = 1;
inline constexpr int kNotConverged = 2;
inline constexpr int kBudgetExceeded = 3;
}  // namespace exit_code

// Greedy policy vs. random channels vs. exhaustive search on one instance.
struct EvalRow {
  std::uint64_t seed = 0;
  int n_users = 0;
  int n_channels = 0;
  double p_t = 0.0;
  double r_drl = 0.0;
  double r_random_mean = 0.0;
  std::optional<double> r_max;
  std::optional<double> r_min;
  std::optional<double> error;
};

EvalRow evaluate_seed(const PolicyParameters& params, const EnvConfig& env,
                      std::uint64_t seed, int random_assignments,
                      std::uint64_t oracle_budget);

// Uniformly random complete assignment (every labeled assignment equally
// likely).
std::vector<int> random_assignment(int n_users, std::uint64_t seed);

// seed,n,k,p_t,r_drl,r_random_mean,r_max,r_min,error
void write_eval_csv(std::ostream& out, const std::vector<EvalRow>& rows);

// Writes metrics.csv, validation.csv and model.bin into config.output_dir.
// Returns 0 when the stopping criteria were met, 2 otherwise.
int cmd_train(const RunConfig& config, std::ostream& log);

int cmd_eval(const RunConfig& config, const std::string& model_path,
             const std::vector<std::uint64_t>& seeds, std::ostream& out,
             std::ostream& log);

// seed,n,k,p_t,r_max,r_min,n_evaluated,n_infeasible
int cmd_oracle(const RunConfig& config, const std::vector<std::uint64_t>& seeds,
               std::ostream& out, std::ostream& log);

// Reads a gamma1,gamma2[,a1,a2] table, one row per channel, and prints
// channel,q,p1,p2,r1,r2,sum_rate with a final "total" row.
int cmd_jra(const RunConfig& config, std::istream& pairs, std::ostream& out,
            std::ostream& log);

enum class SweepAxis {
  learning_rate,
  batch_size,
  n_features,
  architecture,
  p_t,
  n_users,
  r_min,
  replay_on_off
};

SweepAxis parse_sweep_axis(std::string_view name);
std::string_view to_string(SweepAxis axis);

struct SweepSpec {
  SweepAxis axis = SweepAxis::learning_rate;
  std::vector<std::string> values;
  int repeats = 1;
  int jobs = 1;  // worker threads; results are ordered regardless

  void validate() const;
};

// Returns the run config for one (value, repeat) cell of a sweep.
RunConfig sweep_cell(const RunConfig& base, SweepAxis axis, const std::string& value,
                     int repeat);

struct SweepRow {
  std::string value;
  int repeat = 0;
  std::uint64_t seed = 0;
  bool converged = false;
  int episodes = 0;
  double wall_s = 0.0;
  std::string failure;
  std::vector<EvalRow> eval;

  double mean_r_drl() const;
  double mean_r_random() const;
  std::optional<double> mean_r_max() const;
  std::optional<double> mean_error() const;
  std::optional<double> max_error() const;
};

std::vector<SweepRow> run_sweep(const SweepSpec& spec, const RunConfig& base,
                                std::ostream& log);

// axis,value,repeat,seed,converged,episodes,wall_s,mean_r_drl,mean_r_random,
// mean_r_max,mean_error,max_error,failure
void write_sweep_csv(std::ostream& out, SweepAxis axis,
                     const std::vector<SweepRow>& rows);

// Writes sweep_<axis>.csv into base.output_dir.
int cmd_sweep(const SweepSpec& spec, const RunConfig& base, std::ostream& log);

}  // namespace noma
