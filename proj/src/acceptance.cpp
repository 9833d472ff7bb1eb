#include "koopdim/acceptance.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <ostream>
#include <random>
#include <sstream>

#include <unistd.h>

#include "koopdim/apr.hpp"
#include "koopdim/cli.hpp"
#include "koopdim/dmd.hpp"
#include "koopdim/report.hpp"
#include "koopdim/spectral.hpp"

namespace koopdim {

namespace {

using I = std::int64_t;
using Check = std::pair<bool, std::string>;

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

std::vector<std::uint32_t> random_labels(std::size_t atoms, std::uint32_t k, std::mt19937_64& rng) {
  std::uniform_int_distribution<std::uint32_t> pick(0, k - 1);
  std::vector<std::uint32_t> labels(atoms);
  for (auto& l : labels) l = pick(rng);
  return labels;
}

Check exact_entropy_rate(const AcceptanceOptions&) {
  double worst = 0.0;
  for (const char* spec : {"doubling", "bernoulli:0.3,0.7"}) {
    System system = parse_system(spec);
    Partition alpha = make_partition(system, std::holds_alternative<DoublingMap>(system) ? "dyadic:1" : "cylinder:1");
    const double h = std::holds_alternative<DoublingMap>(system) ? std::log(2.0)
                                                                 : -0.3 * std::log(0.3) - 0.7 * std::log(0.7);
    for (const auto& e : entropy_rate(system, alpha, 12)) worst = std::max(worst, std::abs(e.value - h));
  }
  return {worst <= 1e-12, "max |rate - h| = " + fmt(worst)};
}

Check l1_identity(const AcceptanceOptions& opt) {
  std::mt19937_64 rng(opt.seed);
  System system = DoublingMap{};
  auto pool = sample_measure(system, 100000, opt.seed ^ 0x9e3779b97f4a7c15ULL);
  double worst_exact = 0.0;
  double worst_sigma = 0.0;
  std::uniform_int_distribution<int> level(1, 7);
  std::uniform_int_distribution<std::uint32_t> cells(2, 6);
  for (int t = 0; t < 50; ++t) {
    auto ca = dyadic_chart(static_cast<std::uint8_t>(level(rng)));
    auto cb = dyadic_chart(static_cast<std::uint8_t>(level(rng)));
    std::uint32_t ka = cells(rng), kb = cells(rng);
    Partition alpha(ca, random_labels(ca->size(), ka, rng), ka);
    Partition beta(cb, random_labels(cb->size(), kb, rng), kb);
    std::size_t a = std::uniform_int_distribution<std::size_t>(0, alpha.size() - 1)(rng);
    auto ex = l1_projection_error(alpha, a, beta);
    worst_exact = std::max(worst_exact, std::abs(ex.direct - ex.closed_form));
    auto mc = l1_projection_error_mc(alpha, a, beta, pool);
    double z = std::abs(mc.estimate - mc.closed_form) / std::max(mc.stderr_value, 1e-300);
    if (std::abs(mc.estimate - mc.closed_form) <= 1e-12) z = 0.0;
    worst_sigma = std::max(worst_sigma, z);
  }
  return {worst_exact < 1e-12 && worst_sigma <= 3.0,
          "exact max diff " + fmt(worst_exact) + ", MC max " + fmt(worst_sigma) + " sigma"};
}

Check projection_equivalence(const AcceptanceOptions& opt) {
  std::mt19937_64 rng(opt.seed + 3);
  std::normal_distribution<double> gauss;
  std::uniform_int_distribution<int> lvl(1, 5);
  std::uniform_int_distribution<std::uint32_t> cells(2, 8);
  double worst = 0.0;
  for (int t = 0; t < 50; ++t) {
    std::shared_ptr<const AtomChart> ca, cb;
    switch (t % 3) {
      case 0:
        ca = dyadic_chart(static_cast<std::uint8_t>(lvl(rng)));
        cb = dyadic_chart(static_cast<std::uint8_t>(lvl(rng)));
        break;
      case 1:
        ca = dyadic_grid_chart(static_cast<std::uint8_t>(lvl(rng)), static_cast<std::uint8_t>(lvl(rng)));
        cb = dyadic_grid_chart(static_cast<std::uint8_t>(lvl(rng)), static_cast<std::uint8_t>(lvl(rng)));
        break;
      default: {
        BernoulliShift shift({0.3, 0.7});
        ca = cylinder_chart(shift, -2, static_cast<std::size_t>(lvl(rng)));
        cb = cylinder_chart(shift, 0, static_cast<std::size_t>(lvl(rng)));
      }
    }
    std::uint32_t ka = cells(rng), kb = cells(rng);
    auto alpha = std::make_shared<const Partition>(ca, random_labels(ca->size(), ka, rng), ka);
    auto beta = std::make_shared<const Partition>(cb, random_labels(cb->size(), kb, rng), kb);
    CellFunction f{alpha, Eigen::VectorXcd(static_cast<Eigen::Index>(alpha->size()))};
    for (Eigen::Index i = 0; i < f.coeffs.size(); ++i) f.coeffs[i] = cplx(gauss(rng), gauss(rng));

    // Dictionary: random invertible mixtures of the beta indicators.
    const auto d = static_cast<Eigen::Index>(beta->size());
    Eigen::MatrixXcd mix(d, d);
    for (Eigen::Index i = 0; i < d; ++i)
      for (Eigen::Index j = 0; j < d; ++j) mix(i, j) = cplx(gauss(rng), gauss(rng));
    std::vector<CellFunction> dict;
    for (Eigen::Index j = 0; j < d; ++j) dict.push_back(CellFunction{beta, mix.col(j)});
    Projection proj = orthogonal_project(f, dict);
    CellFunction projected{beta, mix * proj.coeffs};
    CellFunction expect = conditional_expectation(f, beta);
    worst = std::max(worst, CellFunction{beta, projected.coeffs - expect.coeffs}.norm());
  }
  return {worst < 1e-10, "max L2 diff " + fmt(worst)};
}

Check horizon_bound(const AcceptanceOptions&) {
  auto dir = std::filesystem::temp_directory_path() / ("koopdim-acceptance-" + std::to_string(::getpid()));
  std::ostringstream sink;
  std::string measured;
  bool ok = true;
  for (int m = 1; m <= 8; ++m) {
    RunConfig rc;
    rc.experiment = Experiment::DmdBound;
    rc.system = "doubling";
    rc.partition = "dyadic:" + std::to_string(m);
    rc.eps = 0.1;
    RunOutcome r = run(rc, dir / ("m" + std::to_string(m)), sink);
    ok = ok && r.exit_code == kExitPass;
    measured += (measured.empty() ? "" : ", ") + std::string("m=") + std::to_string(m) + " exit " +
                std::to_string(r.exit_code);
  }
  std::error_code ec;
  std::filesystem::remove_all(dir, ec);
  return {ok, measured};
}

Check linear_growth(const AcceptanceOptions&) {
  const std::vector<std::pair<std::string, std::string>> models = {
      {"doubling", "dyadic:1"}, {"doubling", "dyadic:2"}, {"doubling", "dyadic:3"}, {"doubling", "dyadic:4"},
      {"doubling", "dyadic:5"}, {"doubling", "dyadic:6"}, {"doubling", "dyadic:7"}, {"doubling", "dyadic:8"},
      {"baker", "grid:1,1"},    {"baker", "grid:2,2"},    {"baker", "grid:2,1"},    {"bernoulli:0.3,0.7", "cylinder:1"},
      {"bernoulli:0.3,0.7", "cylinder:2"}, {"bernoulli:0.2,0.3,0.5", "cylinder:1"}, {"rotation:golden", "arcs:2"},
      {"rotation:golden", "arcs:3"}, {"rotation:1/4", "arcs:4"}, {"skew:golden", "arcs:3"}};
  double worst = -INFINITY;
  bool ok = true;
  for (const auto& [sys, part] : models) {
    System system = parse_system(sys);
    CellBackend backend(system, std::make_shared<const Partition>(make_partition(system, part)));
    DmdModel model = analytic_dmd(backend, 8);
    auto d = prediction_errors(model);
    ok = ok && std::abs(d[0]) <= 1e-9;
    for (std::size_t k = 1; k < d.size(); ++k) {
      double excess = d[k] - static_cast<double>(k) * d[1];
      worst = std::max(worst, excess);
      ok = ok && excess <= 1e-9 && d[k] <= 2.0 + 1e-12;
    }
  }
  return {ok, std::to_string(models.size()) + " models, max (delta_k - k delta_1) = " + fmt(worst)};
}

Check shift_orthonormal(const AcceptanceOptions&) {
  ShiftBackend backend({ShiftVector::unit(0)});
  bool ok = true;
  std::string measured;
  for (double delta : {0.3, 0.5, 0.7}) {
    OrbitGrowth g = orbit_growth(backend, delta, 64);
    const double r = 1.0 - delta * delta;
    for (std::size_t i = 0; i < g.n.size(); ++i) {
      const double n = static_cast<double>(g.n[i]);
      ok = ok && static_cast<double>(g.brackets[i].d_lo) >= std::ceil(n * r - 1e-9) && g.brackets[i].d_hi <= g.n[i];
    }
    ok = ok && g.slope_lo >= r - 1e-12 && g.slope_hi <= 1.0 + 1e-12 && g.slope_lo <= g.slope_hi;
    measured += (measured.empty() ? "" : "; ") + std::string("delta=") + fmt(delta) + " slope [" + fmt(g.slope_lo) +
                ", " + fmt(g.slope_hi) + "]";
  }
  return {ok, measured};
}

Check delay_bound(const AcceptanceOptions&) {
  ShiftBackend backend({ShiftVector::unit(0)});
  bool ok = true;
  std::string measured;
  for (I n : {0, 4, 16}) {
    DelayBoundOptions opt;
    opt.eps = 0.1;
    opt.delta = 0.5;
    opt.n = n;
    opt.orbit_n = {1, 2, 4, 8, 16, 32, 64};
    DelayBoundReport r = verify_theorem_3_1(backend, opt);
    ok = ok && r.dim_fn == n + 1 && r.holds && r.brackets_overlap;
    measured += (measured.empty() ? "" : "; ") + std::string("n=") + std::to_string(n) + " dim " +
                std::to_string(r.dim_fn) + " >= " + fmt(r.rhs);
  }
  return {ok, measured};
}

Check baker_divergence(const AcceptanceOptions&) {
  System system = BakerMap{};
  std::vector<double> slopes;
  for (int m = 1; m <= 5; ++m) {
    auto alpha = std::make_shared<const Partition>(
        make_partition(system, "grid:" + std::to_string(m) + "," + std::to_string(m)));
    CellBackend backend(system, alpha);
    slopes.push_back(orbit_growth(backend, 0.5, 2).slope_lo);
  }
  bool ok = true;
  std::string measured = "slope_lo";
  for (std::size_t i = 0; i < slopes.size(); ++i) {
    if (i > 0) ok = ok && slopes[i] > slopes[i - 1];
    measured += " " + fmt(slopes[i]);
  }
  return {ok, measured};
}

Check skew_certificate(const AcceptanceOptions&) {
  System skew = parse_system("skew:golden");
  const CharacterFunction f = CharacterFunction::character(0, 1);
  std::vector<CharacterFunction> orbit;
  for (I k = -32; k <= 32; ++k) orbit.push_back(apply_koopman(skew, f, k));
  double dev = 0.0;
  for (std::size_t j = 0; j < orbit.size(); ++j)
    for (std::size_t k = 0; k < orbit.size(); ++k)
      dev = std::max(dev, std::abs(inner_product(orbit[j], orbit[k]) - cplx(j == k ? 1.0 : 0.0)));

  CharacterBackend sb(skew, {f});
  auto ws = wiener_statistic(autocorrelation(sb, 64));
  double skew_dev = 0.0;
  for (std::size_t n = 0; n < ws.size(); ++n) skew_dev = std::max(skew_dev, std::abs(ws[n] - 1.0 / static_cast<double>(n + 1)));

  CharacterBackend rb(parse_system("rotation:golden"), {CharacterFunction::character(1)});
  auto wr = wiener_statistic(autocorrelation(rb, 64));
  double rot_dev = 0.0;
  for (double w : wr) rot_dev = std::max(rot_dev, std::abs(w - 1.0));
  return {dev < 1e-10 && skew_dev < 1e-12 && rot_dev < 1e-12,
          "Gram dev " + fmt(dev) + ", |W_n - 1/n| " + fmt(skew_dev) + ", |W_n - 1| " + fmt(rot_dev)};
}

Check edmd_convergence(const AcceptanceOptions& opt) {
  System system = DoublingMap{};
  auto alpha = std::make_shared<const Partition>(make_partition(system, "dyadic:2"));
  const Eigen::MatrixXcd exact = analytic_dmd(CellBackend(system, alpha), 1).m;
  SnapshotDictionary dict = SnapshotDictionary::indicators(alpha);
  std::vector<double> xs, ys;
  for (int i = 0; i <= 6; ++i) {
    const auto n = static_cast<std::size_t>(std::llround(std::pow(10.0, 3.0 + 0.5 * i)));
    double acc = 0.0;
    for (std::uint64_t rep = 0; rep < 5; ++rep) {
      DmdModel m = edmd_iid(system, dict, n, opt.seed + 1000 * static_cast<std::uint64_t>(i) + rep);
      acc += std::log((m.m - exact).norm());
    }
    xs.push_back(std::log(static_cast<double>(n)));
    ys.push_back(acc / 5.0);
  }
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) mx += xs[i], my += ys[i];
  mx /= static_cast<double>(xs.size());
  my /= static_cast<double>(ys.size());
  double sxy = 0, sxx = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) sxy += (xs[i] - mx) * (ys[i] - my), sxx += (xs[i] - mx) * (xs[i] - mx);
  const double slope = sxy / sxx;
  return {std::isfinite(slope) && slope >= -0.65 && slope <= -0.35, "slope " + fmt(slope)};
}

}  // namespace

const std::vector<Criterion>& acceptance_criteria() {
  static const std::vector<Criterion> criteria = {
      {1, "exact entropy rate", 1.0, exact_entropy_rate},
      {2, "L1 projection identity", 5.0, l1_identity},
      {3, "projection equals conditional expectation", 1.0, projection_equivalence},
      {4, "horizon bound, doubling dyadic:1..8", 30.0, horizon_bound},
      {5, "linear error growth", 30.0, linear_growth},
      {6, "finite orthonormal system, shift", 20.0, shift_orthonormal},
      {7, "delay dimension bound, shift", 60.0, delay_bound},
      {8, "baker divergence evidence", 120.0, baker_divergence},
      {9, "skew rotation orbit certificate", 5.0, skew_certificate},
      {10, "eDMD convergence rate", 60.0, edmd_convergence},
  };
  return criteria;
}

CriterionResult run_criterion(const Criterion& c, const AcceptanceOptions& options) {
  CriterionResult r;
  r.id = c.id;
  r.name = c.name;
  r.budget_seconds = c.budget_seconds;
  auto start = std::chrono::steady_clock::now();
  try {
    auto [pass, measured] = c.check(options);
    r.pass = pass;
    r.measured = measured;
  } catch (const std::exception& e) {
    r.pass = false;
    r.measured = std::string("error: ") + e.what();
  }
  r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  if (r.seconds >= r.budget_seconds) {
    r.pass = false;
    r.measured += " (over time budget)";
  }
  return r;
}

std::vector<CriterionResult> run_acceptance(const AcceptanceOptions& options, std::ostream* progress) {
  std::vector<CriterionResult> out;
  for (const auto& c : acceptance_criteria()) {
    out.push_back(run_criterion(c, options));
    if (progress) *progress << format_criterion_line(out.back()) << std::endl;
  }
  return out;
}

std::string format_criterion_line(const CriterionResult& r) {
  char buf[64];
  std::snprintf(buf, sizeof buf, " (%.2f s / %.0f s)", r.seconds, r.budget_seconds);
  return std::string(r.pass ? "PASS" : "FAIL") + " [" + std::to_string(r.id) + "] " + r.name + ": " + r.measured + buf;
}

}  // namespace koopdim
