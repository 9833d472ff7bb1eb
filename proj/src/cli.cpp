#include "koopdim/cli.hpp"

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "koopdim/acceptance.hpp"
#include "koopdim/apr.hpp"
#include "koopdim/dmd.hpp"
#include "koopdim/error.hpp"
#include "koopdim/report.hpp"
#include "koopdim/spectral.hpp"

namespace koopdim {

namespace fs = std::filesystem;

namespace {

using I = std::int64_t;

struct Context {
  const RunConfig& cfg;
  fs::path out;
  std::ostream& log;
  Manifest manifest;
  RunOutcome outcome;

  void write(const std::string& file, const CsvTable& table) {
    write_file_atomic(out / file, table.render());
    outcome.files.push_back(file);
  }
  void warn(const std::string& w) {
    log << "warning: " << w << "\n";
    outcome.warnings.push_back(w);
  }
  void violate(const std::string& what) {
    log << "violation: " << what << "\n";
    outcome.exit_code = kExitViolation;
  }
};

std::string exactness(bool mc) { return mc ? "monte-carlo" : "exact"; }

void run_entropy(Context& ctx) {
  const auto& cfg = ctx.cfg;
  System system = parse_system(cfg.system);
  Partition alpha = make_partition(system, cfg.partition, cfg.budget);
  std::vector<EntropyEstimate> rates;
  if (cfg.monte_carlo) {
    auto pool = sample_measure(system, cfg.samples, *cfg.seed);
    for (I n = 1; n <= cfg.n_max; ++n) rates.push_back(monte_carlo_entropy(system, alpha, static_cast<std::size_t>(n), pool));
  } else {
    rates = entropy_rate(system, alpha, static_cast<std::size_t>(cfg.n_max), cfg.budget);
  }
  std::vector<std::string> header = {"n", "rate", "joint_entropy", "increment", "stderr", "cells", "combinatorial_cells"};
  if (cfg.bits) header.push_back("rate_bits");
  CsvTable table(header);
  double previous = 0.0;
  for (const auto& e : rates) {
    // H(alpha^n) - H(alpha^{n-1}) = H(alpha | phi^{-1} alpha^{n-1}) converges to the same limit as the rate
    std::vector<CsvTable::Value> row = {static_cast<I>(e.n_used), e.value, e.joint_entropy, e.joint_entropy - previous,
                                        e.stderr_nats,
                                        static_cast<I>(e.cells), static_cast<I>(e.combinatorial_cells)};
    if (cfg.bits) row.emplace_back(e.value / std::log(2.0));
    table.add_row(std::move(row));
    previous = e.joint_entropy;
    if (e.value < 0.0 || e.joint_entropy > std::log(static_cast<double>(e.cells)) + 1e-12) {
      ctx.violate("entropy bounds at n=" + std::to_string(e.n_used));
    }
  }
  if (!cfg.monte_carlo) {
    for (std::size_t a = 1; a <= rates.size(); ++a)
      for (std::size_t b = 1; a + b <= rates.size(); ++b)
        if (rates[a + b - 1].joint_entropy > rates[a - 1].joint_entropy + rates[b - 1].joint_entropy + 1e-10) {
          ctx.violate("subadditivity at n=" + std::to_string(a) + ", m=" + std::to_string(b));
        }
  }
  ctx.write("entropy.csv", table);
  ctx.manifest.exactness["rate"] = exactness(cfg.monte_carlo);
  ctx.manifest.exactness["joint_entropy"] = exactness(cfg.monte_carlo);
  ctx.outcome.summary = "rate(n=" + std::to_string(rates.back().n_used) + ") = " + format_number(rates.back().value);
}

void run_dmd_bound(Context& ctx) {
  const auto& cfg = ctx.cfg;
  System system = parse_system(cfg.system);
  if (std::holds_alternative<BilateralShift>(system)) {
    throw Error(ErrorCode::UnsupportedOperation, "dmd-bound needs a point system with a partition");
  }
  auto alpha = std::make_shared<const Partition>(make_partition(system, cfg.partition, cfg.budget));
  HorizonOptions opt;
  opt.eps = cfg.eps;
  opt.delta = cfg.delta;
  opt.horizon = cfg.horizon;
  opt.budget = cfg.budget;
  HorizonReport r = verify_theorem_1_1(system, alpha, opt);
  for (const auto& w : r.warnings) ctx.warn(w);

  std::string verdict = !r.holds ? "violated" : r.entropy_zero ? "entropy-zero regime" : r.vacuous ? "vacuous" : "holds";
  CsvTable table({"k", "delta_k", "K_max", "h_est", "log_card_alpha", "rhs", "verdict"});
  for (std::size_t k = 0; k < r.delta_k.size(); ++k) {
    table.add_row({static_cast<I>(k), r.delta_k[k], r.k_max, r.h_est, r.log_card, r.rhs, verdict});
  }
  ctx.write("dmd_bound.csv", table);
  if (!r.holds) ctx.violate("log|alpha| = " + format_number(r.log_card) + " < K_max (h_est - eps) = " + format_number(r.rhs));
  for (std::size_t k = 1; k < r.delta_k.size(); ++k) {
    if (r.delta_k[k] > static_cast<double>(k) * r.delta_k[1] + 1e-9) {
      ctx.violate("linear error growth at k=" + std::to_string(k));
    }
  }

  if (r.delta_constructed && r.combinatorial_cells >= 2) {
    DeltaConstants ld = delta_K0_constants(r.combinatorial_cells, 2.0, cfg.eps / 2.0);
    CsvTable trace({"step", "delta", "g"});
    for (std::size_t i = 0; i < ld.trace.size(); ++i)
      trace.add_row({static_cast<I>(i), ld.trace[i].first, ld.trace[i].second});
    ctx.write("delta_construction.csv", trace);
  }
  CsvTable rates({"n", "rate"});
  for (std::size_t n = 0; n < r.rates.size(); ++n) rates.add_row({static_cast<I>(n + 1), r.rates[n]});
  ctx.write("entropy_rates.csv", rates);

  ctx.manifest.exactness["delta_k"] = "exact";
  ctx.manifest.exactness["h_est"] = "exact";
  ctx.manifest.config["K0_rule"] = "first n with |rate_n - h_est| < eps/2, h_est = rate at the deepest exact depth";
  ctx.manifest.config["K0"] = r.k0 ? std::to_string(*r.k0) : "none";
  ctx.manifest.config["delta_used"] = format_number(r.delta);
  ctx.outcome.summary = "K_max=" + std::to_string(r.k_max) + " h_est=" + format_number(r.h_est) + " verdict=" + verdict;
}

std::unique_ptr<KoopmanBackend> backend_for(const RunConfig& cfg, const System& system) {
  const std::string& dict = cfg.dictionary.empty() ? cfg.partition : cfg.dictionary;
  return make_backend(system, dict, cfg.budget);
}

void run_apr(Context& ctx) {
  const auto& cfg = ctx.cfg;
  System system = parse_system(cfg.system);
  auto backend = backend_for(cfg, system);
  const double delta = cfg.delta.value_or(0.5);
  auto c = orthonormalize(correlations(*backend, cfg.n_max - 1));
  std::vector<I> ns = cfg.orbit_n;
  if (ns.empty())
    for (I n = 1; n <= cfg.n_max; ++n) ns.push_back(n);
  OrbitGrowth g = orbit_growth(c, delta, ns);
  CsvTable table({"n", "d_lo", "d_hi", "delta", "slope_lo", "slope_hi"});
  double running_hi = INFINITY;
  for (std::size_t i = 0; i < g.n.size(); ++i) {
    const auto& b = g.brackets[i];
    double n = static_cast<double>(g.n[i]);
    running_hi = std::min(running_hi, static_cast<double>(b.d_hi) / n);
    table.add_row({g.n[i], static_cast<I>(b.d_lo), static_cast<I>(b.d_hi), delta, static_cast<double>(b.d_lo) / n, running_hi});
    if (b.d_lo > b.d_hi) ctx.violate("bracket inverted at n=" + std::to_string(g.n[i]));
    VectorSet vs = VectorSet::from_gram(orbit_gram(c, g.n[i]));
    for (double res : witness_residuals(vs, b))
      if (!(res < delta)) {
        ctx.violate("witness residual " + format_number(res) + " >= delta at n=" + std::to_string(g.n[i]));
        break;
      }
  }
  ctx.write("apr.csv", table);
  if (g.invariant_span) ctx.warn("orbit span is T-invariant: approximation entropy is 0");
  ctx.manifest.exactness["d_lo"] = "exact";
  ctx.manifest.exactness["d_hi"] = "exact";
  ctx.outcome.summary = "slope in [" + format_number(g.slope_lo) + ", " + format_number(g.slope_hi) + "]";
}

void run_delay(Context& ctx) {
  const auto& cfg = ctx.cfg;
  System system = parse_system(cfg.system);
  if (!is_invertible(system)) ctx.warn(describe(system) + " is not invertible; its Koopman operator is an isometry, not unitary");
  auto backend = backend_for(cfg, system);
  DelayBoundOptions opt;
  opt.eps = cfg.eps;
  opt.delta = cfg.delta.value_or(0.5);
  opt.n = cfg.n;
  opt.horizon = cfg.horizon;
  opt.orbit_n = cfg.orbit_n;
  if (opt.orbit_n.empty())
    for (I n = 1; n <= cfg.n_max; ++n) opt.orbit_n.push_back(n);
  DelayBoundReport r = verify_theorem_3_1(*backend, opt);
  for (const auto& w : r.warnings) ctx.warn(w);
  std::string verdict = !r.holds ? "violated" : r.entropy_zero ? "entropy-zero regime" : "holds";
  CsvTable table({"n", "dim_F", "dim_Fn", "generators", "K_max", "h_lo", "rhs", "F_slope_lo", "F_slope_hi",
                  "Fn_slope_lo", "Fn_slope_hi", "brackets_overlap", "verdict"});
  table.add_row({r.n, static_cast<I>(r.dim_f), static_cast<I>(r.dim_fn), static_cast<I>(r.generators), r.k_max, r.h_lo,
                 r.rhs, r.f_growth.slope_lo, r.f_growth.slope_hi, r.fn_growth.slope_lo, r.fn_growth.slope_hi,
                 std::string(r.brackets_overlap ? "true" : "false"), verdict});
  ctx.write("delay.csv", table);
  CsvTable errs({"k", "delta_k"});
  for (std::size_t k = 0; k < r.delta_k.size(); ++k) errs.add_row({static_cast<I>(k), r.delta_k[k]});
  ctx.write("delay_errors.csv", errs);
  if (!r.holds) ctx.violate("dim F_n = " + std::to_string(r.dim_fn) + " < K_max (h_lo - eps) = " + format_number(r.rhs));
  if (!r.brackets_overlap) ctx.violate("slope brackets of F and F_n do not overlap");
  if (!r.dimension_sanity) ctx.violate("h_lo exceeds dim F");
  if (r.dim_fn > r.generators) ctx.violate("dim F_n exceeds (n+1) dim F");
  ctx.manifest.exactness["dim_Fn"] = "exact";
  ctx.manifest.exactness["delta_k"] = "exact";
  ctx.outcome.summary = "dim F_n=" + std::to_string(r.dim_fn) + " K_max=" + std::to_string(r.k_max) + " verdict=" + verdict;
}

void run_spectral(Context& ctx) {
  const auto& cfg = ctx.cfg;
  System system = parse_system(cfg.system);
  auto backend = backend_for(cfg, system);
  Eigen::VectorXcd coef;
  if (!cfg.coefficients.empty()) {
    if (static_cast<Eigen::Index>(cfg.coefficients.size()) != backend->dimension()) {
      throw Error(ErrorCode::ConfigParse, "field 'coefficients': expected " + std::to_string(backend->dimension()) + " values");
    }
    coef = Eigen::Map<const Eigen::VectorXd>(cfg.coefficients.data(), backend->dimension()).cast<cplx>();
  } else if (backend->dimension() == 1) {
    coef = Eigen::VectorXcd::Ones(1);
  } else {
    throw Error(ErrorCode::ConfigParse, "field 'coefficients' is required for a multi-vector dictionary");
  }
  SpectralDiagnostics d = spectral_diagnostics(*backend, coef, cfg.k_max, cfg.grid);
  LebesgueCertificate cert = lebesgue_orbit_certificate(*backend, coef, cfg.k_max / 2);

  CsvTable ac({"k", "re_c_k", "im_c_k"});
  for (I k = -d.ac.k_max(); k <= d.ac.k_max(); ++k) ac.add_row({k, d.ac.at(k).real(), d.ac.at(k).imag()});
  CsvTable w({"n", "W_n"});
  for (std::size_t n = 0; n < d.wiener.size(); ++n) w.add_row({static_cast<I>(n + 1), d.wiener[n]});
  CsvTable dens({"theta", "density"});
  for (std::size_t i = 0; i < d.density.size(); ++i)
    dens.add_row({static_cast<double>(i) / static_cast<double>(d.density.size()), d.density[i]});
  std::string atoms;
  for (const auto& a : d.atoms) atoms += (atoms.empty() ? "" : ";") + format_number(a.theta) + ":" + format_number(a.mass);
  CsvTable summary({"c_0", "atom_mass_estimate", "trending", "verdict", "toeplitz_min_eigenvalue", "lebesgue_certified",
                    "lebesgue_deviation", "atoms"});
  summary.add_row({d.ac.c[0].real(), d.atom_mass.value, std::string(d.atom_mass.trending ? "true" : "false"), d.verdict,
                   d.toeplitz_min, std::string(cert.certified ? "true" : "false"), cert.max_deviation, atoms});
  ctx.write("autocorrelation.csv", ac);
  ctx.write("wiener.csv", w);
  ctx.write("density.csv", dens);
  ctx.write("spectral_summary.csv", summary);
  const double c0 = d.ac.c[0].real();
  if (d.toeplitz_min < -1e-9) ctx.violate("Toeplitz matrix not positive semidefinite: " + format_number(d.toeplitz_min));
  for (double x : d.wiener)
    if (x > c0 * c0 + 1e-12) {
      ctx.violate("Wiener statistic exceeds c_0^2");
      break;
    }
  if (d.atom_mass.trending) ctx.warn("Wiener statistic still trending at n = " + std::to_string(d.wiener.size()));
  ctx.manifest.config["report_header"] = "discrete/continuous split via the Wiener statistic; sc and ac are not separated";
  ctx.manifest.exactness["c_k"] = backend->exact() ? "exact" : "monte-carlo";
  ctx.manifest.exactness["density"] = "exact";
  ctx.outcome.summary = "verdict=" + d.verdict + " W=" + format_number(d.atom_mass.value);
}

void run_continuity(Context& ctx) {
  const auto& cfg = ctx.cfg;
  auto trials = lemma_2_2_trials(cfg.kappa, cfg.p, cfg.eps, cfg.trials, *cfg.seed);
  CsvTable table({"trial", "kappa", "delta", "flips", "split", "sup_error", "conditional_entropy", "hypothesis", "conclusion"});
  std::size_t met = 0;
  for (const auto& t : trials) {
    table.add_row({static_cast<I>(t.trial), static_cast<I>(t.kappa), t.delta, static_cast<I>(t.flips),
                   std::string(t.split ? "true" : "false"), t.sup_error, t.conditional_entropy,
                   std::string(t.hypothesis ? "true" : "false"), std::string(t.conclusion ? "true" : "false")});
    if (t.hypothesis) ++met;
    if (t.hypothesis && !t.conclusion) ctx.violate("trial " + std::to_string(t.trial) + ": hypothesis holds, H(alpha|beta) >= eps");
  }
  if (met == 0) ctx.warn("no trial met the hypothesis; the implication was not exercised");
  ctx.write("lemma_2_2.csv", table);
  ctx.manifest.exactness["sup_error"] = "exact";
  ctx.manifest.exactness["conditional_entropy"] = "exact";
  ctx.outcome.summary = std::to_string(met) + "/" + std::to_string(trials.size()) + " trials met the hypothesis";
}

}  // namespace

RunOutcome run(const RunConfig& config, const fs::path& out_dir, std::ostream& log) {
  auto start = std::chrono::steady_clock::now();
  fs::create_directories(out_dir);
  Context ctx{config, out_dir, log, {}, {}};
  ctx.manifest.experiment = to_string(config.experiment);
  ctx.manifest.started_at = utc_timestamp();
  ctx.manifest.config = config.echo;
  ctx.manifest.config["experiment"] = to_string(config.experiment);
  if (config.seed) ctx.manifest.config["seed"] = std::to_string(*config.seed);
  switch (config.experiment) {
    case Experiment::Entropy: run_entropy(ctx); break;
    case Experiment::DmdBound: run_dmd_bound(ctx); break;
    case Experiment::Apr: run_apr(ctx); break;
    case Experiment::Delay: run_delay(ctx); break;
    case Experiment::Spectral: run_spectral(ctx); break;
    case Experiment::Continuity: run_continuity(ctx); break;
  }
  ctx.manifest.files = ctx.outcome.files;
  ctx.manifest.warnings = ctx.outcome.warnings;
  ctx.manifest.exit_code = ctx.outcome.exit_code;
  ctx.manifest.wall_time_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  write_file_atomic(out_dir / "manifest.json", ctx.manifest.to_json());
  ctx.outcome.files.push_back("manifest.json");
  return ctx.outcome;
}

RunOutcome reproduce_all(const std::optional<std::string>& suite, const fs::path& out_dir,
                         std::optional<std::uint64_t> seed, std::ostream& log) {
  RunOutcome outcome;
  fs::create_directories(out_dir);
  if (!suite) {
    AcceptanceOptions opt;
    if (seed) opt.seed = *seed;
    auto results = run_acceptance(opt, &log);
    CsvTable table({"criterion", "name", "pass", "measured", "seconds", "budget_seconds"});
    std::size_t passed = 0;
    for (const auto& r : results) {
      table.add_row({static_cast<I>(r.id), r.name, std::string(r.pass ? "pass" : "fail"), r.measured, r.seconds, r.budget_seconds});
      if (r.pass) ++passed;
      else outcome.exit_code = kExitViolation;
    }
    write_file_atomic(out_dir / "summary.csv", table.render());
    outcome.files.push_back("summary.csv");
    outcome.summary = std::to_string(passed) + "/" + std::to_string(results.size()) + " criteria pass";
    log << outcome.summary << "\n";
    return outcome;
  }

  ConfigFile file = load_config(*suite);
  // Named sections are the suite items and inherit the top-level keys; a file with only
  // top-level keys is a single item.
  std::vector<std::pair<std::string, ConfigSection>> items;
  for (const auto& section : file.sections)
    if (!section.name.empty()) items.emplace_back(section.name, file.merged(section.name));
  if (items.empty() && !file.sections.empty() && file.sections.front().has("experiment")) {
    items.emplace_back("item-0", file.sections.front());
  }
  CsvTable table({"item", "experiment", "exit_code", "summary", "warnings"});
  bool any_error = false, any_violation = false;
  for (const auto& [item, section] : items) {
    int code = kExitPass;
    std::string summary;
    std::string warnings;
    try {
      RunConfig rc = make_run_config(section, std::nullopt, seed);
      RunOutcome r = run(rc, out_dir / item, log);
      code = r.exit_code;
      summary = r.summary;
      for (const auto& w : r.warnings) warnings += (warnings.empty() ? "" : "; ") + w;
    } catch (const std::exception& e) {
      code = kExitError;
      summary = std::string("error: ") + e.what();
    }
    log << item << ": exit " << code << " " << summary << "\n";
    table.add_row({item, section.get("experiment").value_or("?"), static_cast<I>(code), summary, warnings});
    any_error = any_error || code == kExitError;
    any_violation = any_violation || code == kExitViolation;
  }
  outcome.exit_code = any_error ? kExitError : any_violation ? kExitViolation : kExitPass;
  write_file_atomic(out_dir / "summary.csv", table.render());
  outcome.files.push_back("summary.csv");
  outcome.summary = std::to_string(table.rows()) + " items";
  return outcome;
}

fs::path resolve_out_dir(const std::optional<std::string>& flag, const std::string& config_value) {
  if (flag) return *flag;
  if (const char* env = std::getenv("KOOPDIM_OUT"); env && *env) return env;
  if (!config_value.empty()) return config_value;
  return "koopdim-out";
}

int cli_main(int argc, char** argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Entropy lower bounds for Koopman/DMD dictionaries on exactly computable systems"};
  app.require_subcommand(1);
  std::optional<std::string> config_path;
  std::optional<std::string> out_flag;
  std::optional<std::uint64_t> seed;

  struct Sub {
    std::string name;
    std::optional<Experiment> experiment;
    std::string help;
  };
  const std::vector<Sub> subs = {
      {"entropy", Experiment::Entropy, "entropy rates of a partition"},
      {"dmd-bound", Experiment::DmdBound, "prediction horizon versus partition size"},
      {"apr", Experiment::Apr, "approximation-entropy brackets along an orbit"},
      {"delay", Experiment::Delay, "delay-subspace dimension bound"},
      {"spectral", Experiment::Spectral, "autocorrelation, Wiener statistic and Fejer density"},
      {"lemma-2-2", Experiment::Continuity, "conditional-expectation continuity diagnostic"},
      {"reproduce-all", std::nullopt, "run the acceptance suite or a suite file"},
  };
  std::vector<CLI::App*> handles;
  for (const auto& s : subs) {
    CLI::App* sub = app.add_subcommand(s.name, s.help);
    sub->add_option("--config", config_path, s.experiment ? "config file" : "suite file");
    sub->add_option("--out", out_flag, "output directory");
    sub->add_option("--seed", seed, "seed (overrides the config)");
    handles.push_back(sub);
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    std::ostringstream o, er;
    int code = app.exit(e, o, er);
    out << o.str();
    err << er.str();
    return code == 0 ? kExitPass : kExitError;
  }

  try {
    for (std::size_t i = 0; i < subs.size(); ++i) {
      if (!handles[i]->parsed()) continue;
      if (!subs[i].experiment) {
        auto dir = resolve_out_dir(out_flag, "");
        RunOutcome r = reproduce_all(config_path, dir, seed, out);
        return r.exit_code;
      }
      ConfigSection section;
      if (config_path) section = load_config(*config_path).merged(subs[i].name);
      section.values.erase("experiment");
      RunConfig rc = make_run_config(section, subs[i].experiment, seed);
      auto dir = resolve_out_dir(out_flag, rc.out_dir);
      RunOutcome r = run(rc, dir, out);
      out << subs[i].name << ": " << r.summary << " (exit " << r.exit_code << ", output in " << dir.string() << ")\n";
      return r.exit_code;
    }
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kExitError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitError;
  }
  return kExitError;
}

}  // namespace koopdim
