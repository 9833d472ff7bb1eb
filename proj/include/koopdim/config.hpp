#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace koopdim {

// "key = value" lines, '#' comments, "[name]" section headers; values may be double-quoted.
struct ConfigSection {
  std::string name;  // empty for keys before the first header
  int line = 0;
  std::map<std::string, std::string> values;

  std::optional<std::string> get(const std::string& key) const;
  std::string require(const std::string& key) const;
  bool has(const std::string& key) const { return values.count(key) > 0; }
};

struct ConfigFile {
  std::string source;
  std::vector<ConfigSection> sections;

  // Top-level keys overlaid with the named section (if present).
  ConfigSection merged(const std::string& section) const;
};

ConfigFile parse_config(std::istream& in, const std::string& source = "<config>");
ConfigFile load_config(const std::string& path);

enum class Experiment { Entropy, DmdBound, Apr, Delay, Spectral, Continuity };

std::string to_string(Experiment e);
Experiment parse_experiment(const std::string& name);

struct RunConfig {
  Experiment experiment = Experiment::Entropy;
  std::string name;
  std::string system = "doubling";
  std::string partition = "dyadic:1";
  std::string dictionary;
  double eps = 0.1;
  std::optional<double> delta;
  std::int64_t horizon = 8;
  std::int64_t n_max = 12;
  std::int64_t n = 0;
  std::vector<std::int64_t> orbit_n;
  bool monte_carlo = false;
  std::size_t samples = 100000;
  std::optional<std::uint64_t> seed;
  std::int64_t k_max = 512;
  std::size_t grid = 256;
  std::vector<double> coefficients;  // spectral: x = sum coefficients[b] psi_b
  double p = 2.0;
  std::size_t kappa = 4;
  std::size_t trials = 20;
  std::size_t budget = 1'000'000;
  bool bits = false;
  std::string out_dir;
  std::map<std::string, std::string> echo;  // keys as read, for the manifest
};

// Validates ranges and seed requirements; throws ConfigParse naming the offending key.
RunConfig make_run_config(const ConfigSection& section, std::optional<Experiment> experiment = std::nullopt,
                          std::optional<std::uint64_t> seed_override = std::nullopt);

}  // namespace koopdim
