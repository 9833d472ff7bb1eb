#include "koopdim/config.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include "koopdim/error.hpp"

namespace koopdim {

namespace {

std::string trim(const std::string& s) {
  auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

[[noreturn]] void bad(const std::string& key, const std::string& value, const std::string& why) {
  throw Error(ErrorCode::ConfigParse, "field '" + key + "' = '" + value + "': " + why);
}

double parse_double(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    double x = std::stod(v, &used);
    if (used != v.size()) bad(key, v, "not a number");
    return x;
  } catch (const std::logic_error&) {
    bad(key, v, "not a number");
  }
}

std::int64_t parse_int(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    long long x = std::stoll(v, &used);
    if (used != v.size()) bad(key, v, "not an integer");
    return x;
  } catch (const std::logic_error&) {
    bad(key, v, "not an integer");
  }
}

std::uint64_t parse_uint(const std::string& key, const std::string& v) {
  if (v.empty() || v[0] == '-') bad(key, v, "not a non-negative integer");
  try {
    std::size_t used = 0;
    unsigned long long x = std::stoull(v, &used);
    if (used != v.size()) bad(key, v, "not an integer");
    return x;
  } catch (const std::logic_error&) {
    bad(key, v, "not an integer");
  }
}

template <typename T, typename F>
std::vector<T> parse_list(const std::string& key, const std::string& v, F item) {
  std::vector<T> out;
  std::stringstream ss(v);
  std::string part;
  while (std::getline(ss, part, ',')) out.push_back(item(key, trim(part)));
  if (out.empty()) bad(key, v, "empty list");
  return out;
}

const std::set<std::string> kKnownKeys = {
    "experiment", "name",  "system",  "partition", "dictionary", "eps",     "delta",   "horizon",
    "n_max",      "n",     "orbit_n", "mode",      "samples",    "seed",    "k_max",   "grid",
    "p",          "kappa", "trials",  "budget",    "bits",       "out",     "coefficients"};

}  // namespace

std::optional<std::string> ConfigSection::get(const std::string& key) const {
  auto it = values.find(key);
  if (it == values.end()) return std::nullopt;
  return it->second;
}

std::string ConfigSection::require(const std::string& key) const {
  auto v = get(key);
  if (!v) throw Error(ErrorCode::ConfigParse, "missing field '" + key + "'");
  return *v;
}

ConfigSection ConfigFile::merged(const std::string& section) const {
  ConfigSection out;
  out.name = section;
  for (const auto& s : sections)
    if (s.name.empty())
      for (const auto& [k, v] : s.values) out.values[k] = v;
  for (const auto& s : sections)
    if (!section.empty() && s.name == section)
      for (const auto& [k, v] : s.values) out.values[k] = v;
  return out;
}

ConfigFile parse_config(std::istream& in, const std::string& source) {
  ConfigFile file;
  file.source = source;
  std::string raw;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    std::string line = raw;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
      if (line[i] == '"') quoted = !quoted;
      if (line[i] == '#' && !quoted) {
        line.resize(i);
        break;
      }
    }
    line = trim(line);
    if (line.empty()) continue;
    const std::string where = source + ":" + std::to_string(line_no);
    if (line.front() == '[') {
      if (line.back() != ']' || line.size() < 3) {
        throw Error(ErrorCode::ConfigParse, where + ": malformed section header '" + line + "'");
      }
      file.sections.push_back(ConfigSection{trim(line.substr(1, line.size() - 2)), line_no, {}});
      continue;
    }
    auto eq = line.find('=');
    if (eq == std::string::npos) throw Error(ErrorCode::ConfigParse, where + ": expected key = value");
    std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    if (key.empty()) throw Error(ErrorCode::ConfigParse, where + ": empty key");
    if (value.size() >= 2 && value.front() == '"' && value.back() == '"') value = value.substr(1, value.size() - 2);
    if (file.sections.empty()) file.sections.push_back(ConfigSection{"", 0, {}});
    auto& section = file.sections.back();
    if (!section.values.emplace(key, value).second) {
      throw Error(ErrorCode::ConfigParse, where + ": duplicate field '" + key + "'");
    }
  }
  return file;
}

ConfigFile load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::ConfigParse, "cannot open config '" + path + "'");
  return parse_config(in, path);
}

std::string to_string(Experiment e) {
  switch (e) {
    case Experiment::Entropy: return "entropy";
    case Experiment::DmdBound: return "dmd-bound";
    case Experiment::Apr: return "apr";
    case Experiment::Delay: return "delay";
    case Experiment::Spectral: return "spectral";
    case Experiment::Continuity: return "lemma-2-2";
  }
  return "?";
}

Experiment parse_experiment(const std::string& name) {
  for (auto e : {Experiment::Entropy, Experiment::DmdBound, Experiment::Apr, Experiment::Delay, Experiment::Spectral,
                 Experiment::Continuity}) {
    if (to_string(e) == name) return e;
  }
  bad("experiment", name, "unknown experiment");
}

RunConfig make_run_config(const ConfigSection& section, std::optional<Experiment> experiment,
                          std::optional<std::uint64_t> seed_override) {
  for (const auto& [k, v] : section.values) {
    if (!kKnownKeys.count(k)) bad(k, v, "unknown field");
  }
  RunConfig rc;
  rc.echo = section.values;
  rc.name = section.name;
  if (experiment) rc.experiment = *experiment;
  else rc.experiment = parse_experiment(section.require("experiment"));

  auto str = [&](const char* key, std::string& dst) {
    if (auto v = section.get(key)) dst = *v;
  };
  auto positive_double = [&](const char* key, double& dst) {
    if (auto v = section.get(key)) {
      dst = parse_double(key, *v);
      if (!(dst > 0.0)) bad(key, *v, "must be positive");
    }
  };
  auto positive_int = [&](const char* key, auto& dst) {
    if (auto v = section.get(key)) {
      auto x = parse_int(key, *v);
      if (x <= 0) bad(key, *v, "must be positive");
      dst = static_cast<std::remove_reference_t<decltype(dst)>>(x);
    }
  };

  str("system", rc.system);
  str("partition", rc.partition);
  str("dictionary", rc.dictionary);
  str("out", rc.out_dir);
  positive_double("eps", rc.eps);
  if (auto v = section.get("delta")) {
    double d = parse_double("delta", *v);
    if (!(d > 0.0)) bad("delta", *v, "must be positive");
    rc.delta = d;
  }
  positive_int("horizon", rc.horizon);
  positive_int("n_max", rc.n_max);
  if (auto v = section.get("n")) {
    rc.n = parse_int("n", *v);
    if (rc.n < 0) bad("n", *v, "must be non-negative");
  }
  if (auto v = section.get("orbit_n")) {
    rc.orbit_n = parse_list<std::int64_t>("orbit_n", *v, parse_int);
    for (auto x : rc.orbit_n)
      if (x <= 0) bad("orbit_n", *v, "entries must be positive");
  }
  if (auto v = section.get("mode")) {
    if (*v == "exact") rc.monte_carlo = false;
    else if (*v == "monte-carlo") rc.monte_carlo = true;
    else bad("mode", *v, "expected exact or monte-carlo");
  }
  positive_int("samples", rc.samples);
  if (auto v = section.get("seed")) rc.seed = parse_uint("seed", *v);
  if (seed_override) rc.seed = seed_override;
  positive_int("k_max", rc.k_max);
  positive_int("grid", rc.grid);
  if (auto v = section.get("p")) {
    rc.p = parse_double("p", *v);
    if (!(rc.p >= 1.0)) bad("p", *v, "must be >= 1");
  }
  positive_int("kappa", rc.kappa);
  positive_int("trials", rc.trials);
  positive_int("budget", rc.budget);
  if (auto v = section.get("bits")) {
    if (*v == "true" || *v == "1") rc.bits = true;
    else if (*v == "false" || *v == "0") rc.bits = false;
    else bad("bits", *v, "expected true or false");
  }
  if (auto v = section.get("coefficients")) rc.coefficients = parse_list<double>("coefficients", *v, parse_double);

  const bool needs_seed = rc.monte_carlo || rc.experiment == Experiment::Continuity;
  if (needs_seed && !rc.seed) {
    throw Error(ErrorCode::ConfigParse, "field 'seed' is mandatory when Monte Carlo sampling is enabled");
  }
  if (rc.experiment == Experiment::Continuity && rc.kappa < 2) bad("kappa", std::to_string(rc.kappa), "must be >= 2");
  return rc;
}

}  // namespace koopdim
