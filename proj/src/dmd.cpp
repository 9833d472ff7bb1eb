#include "koopdim/dmd.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

#include "koopdim/error.hpp"

namespace koopdim {

namespace {

Eigen::MatrixXcd hermitian_part(const Eigen::MatrixXcd& a) { return 0.5 * (a + a.adjoint()); }

DmdModel fit(Eigen::MatrixXcd g, Eigen::MatrixXcd a1) {
  DmdModel model;
  PseudoInverse pinv = pseudo_inverse(g);
  model.m = pinv.matrix * a1;
  model.rank = pinv.rank;
  model.cross = {g, std::move(a1)};
  model.gram = std::move(g);
  return model;
}

}  // namespace

DmdModel dmd_from_correlations(std::vector<Eigen::MatrixXcd> c, std::string dictionary) {
  if (c.size() < 2) throw Error(ErrorCode::InvalidArgument, "analytic DMD needs C_0 and C_1");
  DmdModel model = fit(c[0], c[1]);
  model.cross = std::move(c);
  model.provenance = DmdProvenance::Analytic;
  model.dictionary = std::move(dictionary);
  return model;
}

DmdModel analytic_dmd(const KoopmanBackend& backend, std::int64_t horizon) {
  if (horizon < 1) throw Error(ErrorCode::InvalidArgument, "horizon must be >= 1");
  return dmd_from_correlations(correlations(backend, horizon), backend.describe());
}

SnapshotDictionary SnapshotDictionary::indicators(std::shared_ptr<const Partition> partition) {
  auto n = static_cast<Eigen::Index>(partition->size());
  return SnapshotDictionary{std::move(partition), Eigen::MatrixXcd::Identity(n, n)};
}

DmdModel edmd_weighted(std::span<const std::pair<Point, Point>> pairs, std::span<const double> weights,
                       const SnapshotDictionary& dictionary) {
  if (weights.size() != pairs.size()) throw Error(ErrorCode::InvalidArgument, "one weight per snapshot pair");
  const Eigen::Index d = dictionary.dimension();
  if (static_cast<Eigen::Index>(pairs.size()) < d) {
    throw Error(ErrorCode::TooFewSnapshots,
                std::to_string(pairs.size()) + " pairs for a " + std::to_string(d) + "-dimensional dictionary");
  }
  // Accumulate weighted label co-occurrences, then contract with the coefficient matrix.
  const auto cells = static_cast<Eigen::Index>(dictionary.partition->size());
  Eigen::MatrixXd xx = Eigen::MatrixXd::Zero(cells, cells);
  Eigen::MatrixXd xy = Eigen::MatrixXd::Zero(cells, cells);
  double total = 0.0;
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    double w = weights[i];
    if (w < 0.0) throw Error(ErrorCode::NegativeWeight, "snapshot weight " + std::to_string(w));
    auto a = static_cast<Eigen::Index>(dictionary.partition->label(pairs[i].first));
    auto b = static_cast<Eigen::Index>(dictionary.partition->label(pairs[i].second));
    xx(a, a) += w;
    xy(a, b) += w;
    total += w;
  }
  if (total <= 0.0) throw Error(ErrorCode::TooFewSnapshots, "total snapshot weight is zero");
  const Eigen::MatrixXcd& coef = dictionary.coef;
  Eigen::MatrixXcd g = coef.adjoint() * (xx / total).cast<cplx>() * coef;
  Eigen::MatrixXcd a = coef.adjoint() * (xy / total).cast<cplx>() * coef;
  DmdModel model = fit(std::move(g), std::move(a));
  model.provenance = DmdProvenance::Edmd;
  model.samples = pairs.size();
  model.dictionary = dictionary.partition->chart().describe();
  return model;
}

DmdModel edmd_from_snapshots(std::span<const std::pair<Point, Point>> pairs, const SnapshotDictionary& dictionary) {
  std::vector<double> ones(pairs.size(), 1.0);
  return edmd_weighted(pairs, ones, dictionary);
}

std::vector<std::pair<Point, Point>> iid_snapshots(const System& system, std::size_t n, std::uint64_t seed) {
  auto xs = sample_measure(system, n, seed);
  std::vector<std::pair<Point, Point>> out;
  out.reserve(n);
  for (auto& x : xs) {
    Point y = apply(system, x, 1);
    out.emplace_back(std::move(x), std::move(y));
  }
  return out;
}

std::vector<std::pair<Point, Point>> orbit_snapshots(const System& system, std::size_t n, std::uint64_t seed) {
  if (std::holds_alternative<DoublingMap>(system) || std::holds_alternative<BakerMap>(system)) {
    throw Error(ErrorCode::UnsupportedOperation, "exact dyadic orbits reach 0 in finitely many steps; use iid");
  }
  auto start = sample_measure(system, 1, seed);
  std::vector<std::pair<Point, Point>> out;
  out.reserve(n);
  Point x = start.front();
  for (std::size_t i = 0; i < n; ++i) {
    Point y = apply(system, x, 1);
    out.emplace_back(x, y);
    x = std::move(y);
  }
  return out;
}

DmdModel edmd_iid(const System& system, const SnapshotDictionary& dictionary, std::size_t n, std::uint64_t seed,
                  std::size_t chunk) {
  const Eigen::Index d = dictionary.dimension();
  if (static_cast<Eigen::Index>(n) < d) {
    throw Error(ErrorCode::TooFewSnapshots, std::to_string(n) + " pairs for a " + std::to_string(d) + "-dimensional dictionary");
  }
  if (chunk == 0) throw Error(ErrorCode::InvalidArgument, "chunk must be positive");
  const auto cells = static_cast<Eigen::Index>(dictionary.partition->size());
  Eigen::MatrixXd xx = Eigen::MatrixXd::Zero(cells, cells);
  Eigen::MatrixXd xy = Eigen::MatrixXd::Zero(cells, cells);
  std::seed_seq base{seed, static_cast<std::uint64_t>(n)};
  std::mt19937_64 seeds(base);
  for (std::size_t done = 0; done < n; done += chunk) {
    std::size_t m = std::min(chunk, n - done);
    for (const auto& x : sample_measure(system, m, seeds())) {
      auto a = static_cast<Eigen::Index>(dictionary.partition->label(x));
      auto b = static_cast<Eigen::Index>(dictionary.partition->label(apply(system, x, 1)));
      xx(a, a) += 1.0;
      xy(a, b) += 1.0;
    }
  }
  const double total = static_cast<double>(n);
  const Eigen::MatrixXcd& coef = dictionary.coef;
  DmdModel model = fit(coef.adjoint() * (xx / total).cast<cplx>() * coef, coef.adjoint() * (xy / total).cast<cplx>() * coef);
  model.provenance = DmdProvenance::Edmd;
  model.samples = n;
  model.dictionary = dictionary.partition->chart().describe();
  return model;
}

double prediction_error_norm(const DmdModel& model, std::int64_t k) {
  if (k < 0 || k > model.horizon()) {
    throw Error(ErrorCode::InvalidArgument, "k = " + std::to_string(k) + " outside the model horizon");
  }
  if (k == 0) return 0.0;
  const Eigen::MatrixXcd& g = model.gram;
  const Eigen::MatrixXcd& ak = model.cross[static_cast<std::size_t>(k)];
  Eigen::MatrixXcd mk = Eigen::MatrixXcd::Identity(g.rows(), g.cols());
  for (std::int64_t i = 0; i < k; ++i) mk = mk * model.m;
  Eigen::MatrixXcd s = mk.adjoint() * g * mk - mk.adjoint() * ak - ak.adjoint() * mk + g;
  Eigen::MatrixXcd w = range_whitener(g);
  if (w.cols() == 0) return 0.0;
  Eigen::MatrixXcd h = hermitian_part(w.adjoint() * s * w);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(h, Eigen::EigenvaluesOnly);
  double lam = es.eigenvalues().maxCoeff();
  return std::sqrt(std::clamp(lam, 0.0, 4.0));
}

std::vector<double> prediction_errors(const DmdModel& model) {
  std::vector<double> out;
  for (std::int64_t k = 0; k <= model.horizon(); ++k) out.push_back(prediction_error_norm(model, k));
  return out;
}

double continuity_g(std::size_t kappa, double c, double delta) {
  const double kc = static_cast<double>(kappa) * c * delta;
  if (delta <= 0.0) return 0.0;
  return -kc * std::log(c * delta) - (1.0 - kc) * std::log1p(-kc);
}

DeltaConstants delta_K0_constants(std::size_t kappa, double p, double eps) {
  if (kappa < 2) throw Error(ErrorCode::InvalidArgument, "kappa must be >= 2");
  if (!(p >= 1.0) || std::isinf(p)) throw Error(ErrorCode::InvalidArgument, "p must lie in [1, inf)");
  if (!(eps >= 1e-12)) throw Error(ErrorCode::EpsilonTooSmall, "eps = " + std::to_string(eps) + " below 1e-12");
  DeltaConstants out;
  out.c = 1.0;  // ||1||_q on a probability space
  const double kk = static_cast<double>(kappa);
  out.cap = std::nextafter(1.0 / (4.0 * out.c * kk), 0.0);
  const double target = eps - 1e-9;
  double g_cap = continuity_g(kappa, out.c, out.cap);
  out.trace.emplace_back(out.cap, g_cap);
  if (g_cap <= target) {
    out.delta = out.cap;
    return out;
  }
  double lo = 0.0;
  double hi = out.cap;
  for (int it = 0; it < 200 && hi - lo > std::numeric_limits<double>::min(); ++it) {
    double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    double g = continuity_g(kappa, out.c, mid);
    out.trace.emplace_back(mid, g);
    if (g <= target) lo = mid;
    else hi = mid;
  }
  out.delta = lo;
  return out;
}

std::vector<ContinuityTrial> lemma_2_2_trials(std::size_t kappa, double p, double eps, std::size_t trials,
                                           std::uint64_t seed, std::uint8_t fine_level) {
  DeltaConstants ld = delta_K0_constants(kappa, p, eps);
  std::mt19937_64 rng(seed);
  std::uint8_t coarse = 1;
  while ((std::size_t{1} << coarse) < 2 * kappa) ++coarse;
  if (fine_level <= coarse) throw Error(ErrorCode::InvalidArgument, "fine level must exceed the coarse level");
  auto coarse_chart = dyadic_chart(coarse);
  auto fine_chart = dyadic_chart(fine_level);
  const std::size_t fine_atoms = fine_chart->size();
  std::vector<ContinuityTrial> out;
  for (std::size_t t = 0; t < trials; ++t) {
    ContinuityTrial tr;
    tr.trial = t;
    tr.kappa = kappa;
    tr.delta = ld.delta;

    std::vector<std::uint32_t> labels(coarse_chart->size());
    std::vector<std::size_t> order(labels.size());
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), rng);
    std::uniform_int_distribution<std::uint32_t> pick(0, static_cast<std::uint32_t>(kappa - 1));
    for (std::size_t i = 0; i < order.size(); ++i)
      labels[order[i]] = i < kappa ? static_cast<std::uint32_t>(i) : pick(rng);
    auto alpha = std::make_shared<const Partition>(coarse_chart, labels, kappa);

    // Flip a fraction of the fine mass around delta^p, log-uniform over four decades.
    std::uniform_real_distribution<double> logu(-2.0, 2.0);
    double fraction = std::pow(ld.delta, p) * std::pow(10.0, logu(rng));
    tr.flips = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(fine_atoms)));
    tr.split = std::bernoulli_distribution(0.5)(rng);
    std::vector<std::uint32_t> fine = alpha->lift(fine_chart).atom_labels();
    std::uniform_int_distribution<std::size_t> atom(0, fine_atoms - 1);
    for (std::size_t f = 0; f < tr.flips; ++f) fine[atom(rng)] = pick(rng);
    if (tr.split) {
      for (std::size_t a = 0; a < fine_atoms; ++a) fine[a] = 2 * fine[a] + static_cast<std::uint32_t>((a >> (fine_level - coarse - 1)) & 1U);
    }
    Partition beta(fine_chart, std::move(fine), tr.split ? 2 * kappa : kappa);

    for (std::size_t cell = 0; cell < alpha->size(); ++cell)
      tr.sup_error = std::max(tr.sup_error, lp_projection_error(*alpha, cell, beta, p));
    tr.conditional_entropy = conditional_entropy(*alpha, beta);
    tr.hypothesis = tr.sup_error < ld.delta;
    tr.conclusion = tr.conditional_entropy < eps;
    out.push_back(tr);
  }
  return out;
}

HorizonReport verify_theorem_1_1(const System& system, std::shared_ptr<const Partition> alpha,
                                 const HorizonOptions& options) {
  if (!(options.eps > 0.0)) throw Error(ErrorCode::InvalidArgument, "eps must be positive");
  if (options.delta && !(*options.delta > 0.0)) throw Error(ErrorCode::DeltaNonPositive, "delta must be positive");
  HorizonReport r;
  r.cells = alpha->size();
  r.combinatorial_cells = alpha->combinatorial_count();
  r.log_card = std::log(static_cast<double>(r.cells));
  r.entropy_zero = known_entropy(system) == 0.0;

  if (options.delta) {
    r.delta = *options.delta;
    r.delta_constructed = false;
  } else if (r.combinatorial_cells < 2) {
    r.delta = 1.0;
    r.warnings.push_back("trivial partition: no constructed delta, every horizon admissible");
  } else {
    r.delta = delta_K0_constants(r.combinatorial_cells, 2.0, options.eps / 2.0).delta;
  }
  if (r.delta < 1e-8) {
    r.warnings.push_back("delta = " + std::to_string(r.delta) + " is at the numeric floor of delta_k");
  }

  std::int64_t horizon = options.horizon;
  const double max_depth = static_cast<double>(options.budget);
  while (horizon > 1 && alpha->chart().deepened_size(static_cast<std::size_t>(horizon) + 1) > max_depth) --horizon;
  if (horizon < options.horizon) {
    r.warnings.push_back("horizon reduced to " + std::to_string(horizon) + " by the cell budget");
  }
  CellBackend backend(system, alpha, options.budget);
  DmdModel model = analytic_dmd(backend, horizon);
  r.delta_k = prediction_errors(model);
  r.k_max = 0;
  while (r.k_max <= horizon && r.delta_k[static_cast<std::size_t>(r.k_max)] <= r.delta) ++r.k_max;
  r.horizon_limited = r.k_max > horizon;
  if (r.horizon_limited) r.warnings.push_back("K_max reached the computed horizon; reported value is a lower bound");

  r.h_depth = deepest_exact_depth(*alpha, options.entropy_depth_cap, options.budget);
  for (const auto& e : entropy_rate(system, *alpha, r.h_depth, options.budget)) r.rates.push_back(e.value);
  r.h_est = r.rates.back();
  for (std::size_t n = 0; n < r.rates.size(); ++n) {
    if (std::abs(r.rates[n] - r.h_est) < options.eps / 2.0) {
      r.k0 = static_cast<std::int64_t>(n) + 1;
      break;
    }
  }
  if (r.entropy_zero) r.warnings.push_back("entropy-zero regime");
  r.rhs = static_cast<double>(r.k_max) * (r.h_est - options.eps);
  r.vacuous = !r.k0 || r.k_max < *r.k0;
  if (r.vacuous) r.warnings.push_back("K_max below K0: inequality not asserted");
  r.holds = r.vacuous || r.log_card >= r.rhs - 1e-12;
  return r;
}

}  // namespace koopdim
