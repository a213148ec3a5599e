#pragma once

#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "svpfp/config.hpp"

namespace svpfp {

struct CommandOptions {
  std::string config_path;
  std::vector<std::string> overrides;
  std::optional<std::string> output_dir;
  std::optional<std::uint64_t> seed;
  int threads = 0;  // 0 = default
};

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitNumeric = 3;

int cmd_run(const RunConfig& config, std::ostream& out, std::ostream& err);
int cmd_ensemble(const RunConfig& config, std::ostream& out, std::ostream& err);
int cmd_picard(const RunConfig& config, std::ostream& out, std::ostream& err);
int cmd_hypo(const RunConfig& config, std::ostream& out, std::ostream& err);
int cmd_convergence(const RunConfig& config, std::ostream& out, std::ostream& err);

/// Loads the config (with --seed and --output-dir folded into the overrides),
/// dispatches and maps errors to exit codes: 2 for configuration problems,
/// 3 for numeric aborts.
int run_command(const std::string& name, const CommandOptions& options, std::ostream& out, std::ostream& err);

std::vector<std::string> command_names();

}  // namespace svpfp
