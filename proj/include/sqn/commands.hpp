#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "sqn/io.hpp"

namespace sqn::cli {

struct Options {
  std::filesystem::path out_dir = ".";
  bool svg = false;
  unsigned threads = 1;
  /// Input file for fit-notch / fit-dips; falls back to fit.data in the config.
  std::optional<std::filesystem::path> data;
};

/// Files written by one subcommand, in creation order.
struct Bundle {
  std::vector<std::filesystem::path> files;
};

Bundle cmd_steady(const io::json& config, const Options& opts);
Bundle cmd_dip_sweep(const io::json& config, const Options& opts);
Bundle cmd_phase_diagram(const io::json& config, const Options& opts);
Bundle cmd_hysteresis(const io::json& config, const Options& opts);
Bundle cmd_dynamics(const io::json& config, const Options& opts);
Bundle cmd_fit_notch(const io::json& config, const Options& opts);
Bundle cmd_fit_dips(const io::json& config, const Options& opts);

const std::vector<std::string>& command_names();

enum ExitCode { kOk = 0, kUsage = 1, kConfigError = 2, kNumericFailure = 3 };

/// Dispatches by name and maps failures to exit codes, writing a one-line
/// diagnostic to `err`.
int run(const std::string& command, const io::json& config, const Options& opts, std::ostream& err);

}  // namespace sqn::cli
