#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "flowmm/errors.hpp"

namespace flowmm::cli {

enum ExitCode : int { kOk = 0, kUsage = 1, kConfig = 2, kRuntime = 3 };

class UsageError : public Error {
 public:
  using Error::Error;
};

struct RunConfig {
  std::string command;
  std::filesystem::path config_path;
  std::uint64_t seed = 0;
  std::filesystem::path out_dir = ".";
  std::vector<std::string> overrides;
  std::vector<std::string> positional;  ///< inspect targets
  std::optional<std::size_t> workers;
};

inline const std::vector<std::string>& command_names() {
  static const std::vector<std::string> names{"simulate", "gen-data",      "train",    "finetune", "backtest",
                                              "regime-suite", "scaling-study", "ablation", "inspect"};
  return names;
}

/// Parses process arguments (without argv[0]). Throws UsageError naming the
/// offending token. `--config` is required for every command except inspect.
RunConfig parse_and_validate(const std::vector<std::string>& args);

/// Runs one command and returns its exit code. Errors are reported on `err`.
int dispatch(const RunConfig& run, std::ostream& out, std::ostream& err);

/// parse_and_validate + dispatch, mapping every error to an exit code.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace flowmm::cli
