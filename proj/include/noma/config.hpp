#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <utility>

#include "noma/env.hpp"
#include "noma/errors.hpp"
#include "noma/policy.hpp"
#include "noma/trainer.hpp"

namespace noma {

class ParseError : public Error {
 public:
  ParseError(int line, const std::string& what)
      : Error("line " + std::to_string(line) + ": " + what), line_(line) {}
  int line() const { return line_; }

 private:
  int line_;
};

// Raised for a well-formed entry whose value is out of range; names the key.
class ValidationError : public Error {
 public:
  ValidationError(std::string key, const std::string& what)
      : Error(key + ": " + what), key_(std::move(key)) {}
  const std::string& key() const { return key_; }

 private:
  std::string key_;
};

struct RunConfig {
  EnvConfig env;
  TrainConfig train;
  Architecture arch;
  std::uint64_t master_seed = 1;
  std::string output_dir = ".";
  int n_val_seeds = 10;
  int n_eval_seeds = 4;
  int random_assignments = 100;

  RunConfig();

  // Propagates env dimensions into arch and regenerates validation seeds.
  void finalize();
  // Throws ValidationError naming the offending key.
  void validate() const;
};

// Applies one key=value entry. Throws ValidationError for unknown keys or
// values that do not parse.
void apply_setting(RunConfig& config, std::string_view key, std::string_view value);

// Flat key=value text; '#' starts a comment. Missing keys keep their defaults.
RunConfig parse_config(std::string_view text);
RunConfig load_config(const std::string& path);

std::string describe(const RunConfig& config);

}  // namespace noma
