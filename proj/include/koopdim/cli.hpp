#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "koopdim/config.hpp"

namespace koopdim {

inline constexpr int kExitPass = 0;
inline constexpr int kExitError = 1;
inline constexpr int kExitViolation = 2;

struct RunOutcome {
  int exit_code = kExitPass;
  std::vector<std::string> files;
  std::vector<std::string> warnings;
  std::string summary;  // one line, for suite tables
};

// Runs one experiment, writing its CSVs and manifest.json into out_dir.
// Library errors propagate; cli_main maps them to exit 1.
RunOutcome run(const RunConfig& config, const std::filesystem::path& out_dir, std::ostream& log);

// Without a suite file: the built-in acceptance criteria. With one: every section is an experiment.
RunOutcome reproduce_all(const std::optional<std::string>& suite, const std::filesystem::path& out_dir,
                         std::optional<std::uint64_t> seed, std::ostream& log);

// --out flag, then KOOPDIM_OUT, then the config's out field, then "koopdim-out".
std::filesystem::path resolve_out_dir(const std::optional<std::string>& flag, const std::string& config_value);

int cli_main(int argc, char** argv, std::ostream& out, std::ostream& err);

}  // namespace koopdim
