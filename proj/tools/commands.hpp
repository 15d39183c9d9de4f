#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace ega::cli {

enum ExitCode : int { kOk = 0, kFailure = 1, kConfig = 2, kNumerical = 3, kSchema = 4 };

struct Options {
  std::string config;
  std::optional<std::string> out;
  std::optional<std::uint64_t> seed;
  std::optional<int> threads;
};

const std::vector<std::string>& command_names();

/// Runs one subcommand and maps library errors onto exit codes.
int run(const std::string& command, const Options& opts);

}  // namespace ega::cli
