#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>

#include "mdepth/augment.hpp"
#include "mdepth/eval.hpp"
#include "mdepth/gradcheck.hpp"
#include "mdepth/io.hpp"
#include "mdepth/optimizer.hpp"
#include "mdepth/synthetic.hpp"

namespace mdepth {

/// Malformed or invalid configuration document.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Everything a command can be configured with. The JSON document has the
/// sections optimizer, loss, augment, eval, synthetic and gradcheck plus the
/// top-level seed and jobs; unknown keys are rejected.
struct AppConfig {
  std::uint64_t seed = 0;
  int jobs = 0;  // 0: hardware concurrency
  OptimizerConfig optimizer;
  OffsetMode offset_mode = OffsetMode::fixed;
  int offset_min = 1;
  int offset_max = 3;
  AugmentPolicy augment;
  EvalConfig eval;
  SyntheticSpec synthetic;
  GradcheckOptions gradcheck;

  /// Throws ConfigError naming the offending setting.
  void validate() const;
  int effective_jobs() const;
};

AppConfig parse_config(const Json& j);
AppConfig load_config(const std::filesystem::path& path);
/// Complete effective configuration; parse_config(to_json(c)) == c.
Json to_json(const AppConfig& config);

}  // namespace mdepth
