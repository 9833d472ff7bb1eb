#include "koopdim/apr.hpp"

#include <algorithm>
#include <cmath>

#include "koopdim/error.hpp"

namespace koopdim {

namespace {

template <typename Scalar>
using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

double re(double x) { return x; }
double re(const cplx& x) { return x.real(); }

// Lower bound from an orthonormal subset of size r: any admissible F has dim F > r (1 - delta^2).
Eigen::Index orthonormal_bound(Eigen::Index r, double delta) {
  double b = static_cast<double>(r) * (1.0 - delta * delta);
  if (b < 0.0) return 0;
  double nearest = std::round(b);
  if (std::abs(b - nearest) < 1e-9) return static_cast<Eigen::Index>(nearest);
  return static_cast<Eigen::Index>(std::floor(b)) + 1;
}

template <typename Scalar>
AprBracket bracket_impl(const Mat<Scalar>& g_full, double delta) {
  AprBracket out;
  out.delta = delta;
  const Eigen::Index n_all = g_full.rows();

  for (Eigen::Index i = 0; i < n_all; ++i) {
    bool repeated = false;
    for (Eigen::Index j : out.kept) {
      double dist2 = re(g_full(i, i)) + re(g_full(j, j)) - 2.0 * re(g_full(i, j));
      if (dist2 <= 1e-12 * std::max(1.0, re(g_full(i, i)))) {
        repeated = true;
        break;
      }
    }
    if (!repeated) out.kept.push_back(i);
  }
  const auto n = static_cast<Eigen::Index>(out.kept.size());
  out.distinct = n;
  Mat<Scalar> g(n, n);
  for (Eigen::Index a = 0; a < n; ++a)
    for (Eigen::Index b = 0; b < n; ++b) g(a, b) = g_full(out.kept[static_cast<std::size_t>(a)], out.kept[static_cast<std::size_t>(b)]);
  if (n == 0) {
    out.witness = Eigen::MatrixXcd(0, 0);
    out.witness_source = "svd";
    return out;
  }

  std::vector<Eigen::Index> ortho;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (std::abs(g(i, i) - Scalar(1.0)) >= kOrthonormalTol) continue;
    bool ok = true;
    for (Eigen::Index j : ortho)
      if (std::abs(g(i, j)) >= kOrthonormalTol) {
        ok = false;
        break;
      }
    if (ok) ortho.push_back(i);
  }
  out.orthonormal_subset = static_cast<Eigen::Index>(ortho.size());

  Eigen::SelfAdjointEigenSolver<Mat<Scalar>> es(g);
  Eigen::VectorXd lam = es.eigenvalues().reverse().cwiseMax(0.0);
  Mat<Scalar> v = es.eigenvectors().rowwise().reverse();
  const double top = lam[0];
  out.rank = (lam.array() > kPinvRelTol * top).count();
  if (top <= 0.0) out.rank = 0;

  // Eckart-Young: a rank-d projection leaves at least the spectral tail in Frobenius norm.
  const double threshold = static_cast<double>(n) * delta * delta;
  const double guard = 1e-12 * std::max(1.0, lam.sum());
  Eigen::Index d_frob = n;
  double tail = lam.sum();
  for (Eigen::Index d = 0; d <= n; ++d) {
    if (d > 0) tail -= lam[d - 1];
    if (tail < threshold + guard) {
      d_frob = d;
      break;
    }
  }
  out.d_lo = std::min(n, std::max(d_frob, orthonormal_bound(out.orthonormal_subset, delta)));

  const double limit = delta - kStrictGuard;
  Eigen::VectorXd res(n);
  for (Eigen::Index j = 0; j < n; ++j) res[j] = re(g(j, j));
  Eigen::Index d_svd = n;
  for (Eigen::Index d = 0; d <= n; ++d) {
    if (d > 0) {
      for (Eigen::Index j = 0; j < n; ++j) res[j] -= lam[d - 1] * std::norm(v(j, d - 1));
    }
    if (std::sqrt(std::max(0.0, res.maxCoeff())) < limit) {
      d_svd = d;
      break;
    }
  }

  // Greedy: pivoted Cholesky, always adding the worst column's residual direction.
  Eigen::VectorXd diag(n);
  for (Eigen::Index j = 0; j < n; ++j) diag[j] = re(g(j, j));
  Mat<Scalar> l = Mat<Scalar>::Zero(n, std::min<Eigen::Index>(n, std::max<Eigen::Index>(d_svd, 1)));
  std::vector<Eigen::Index> pivots;
  Eigen::Index d_greedy = n;
  for (Eigen::Index t = 0; t <= n; ++t) {
    Eigen::Index p = 0;
    double worst = diag.maxCoeff(&p);
    if (std::sqrt(std::max(0.0, worst)) < limit) {
      d_greedy = t;
      break;
    }
    if (t == n || t >= d_svd || worst <= 0.0) break;  // greedy cannot beat the SVD count any more
    Mat<Scalar> col = g.col(p);
    if (t > 0) col -= l.leftCols(t) * l.row(p).leftCols(t).adjoint();
    l.col(t) = col / std::sqrt(worst);
    for (Eigen::Index j = 0; j < n; ++j) diag[j] -= std::norm(l(j, t));
    diag[p] = 0.0;
    pivots.push_back(p);
  }

  if (d_greedy < d_svd) {
    out.d_hi = d_greedy;
    out.witness_source = "greedy";
    const auto d = static_cast<Eigen::Index>(pivots.size());
    Mat<Scalar> gs(d, d);
    for (Eigen::Index a = 0; a < d; ++a)
      for (Eigen::Index b = 0; b < d; ++b) gs(a, b) = g(pivots[static_cast<std::size_t>(a)], pivots[static_cast<std::size_t>(b)]);
    Eigen::LLT<Mat<Scalar>> llt(gs);
    Mat<Scalar> r_inv = Mat<Scalar>(llt.matrixU()).template triangularView<Eigen::Upper>().solve(Mat<Scalar>::Identity(d, d));
    out.witness = Eigen::MatrixXcd::Zero(n, d);
    for (Eigen::Index a = 0; a < d; ++a)
      out.witness.row(pivots[static_cast<std::size_t>(a)]) = r_inv.row(a).template cast<cplx>();
  } else {
    out.d_hi = d_svd;
    out.witness_source = "svd";
    out.witness = Eigen::MatrixXcd(n, d_svd);
    for (Eigen::Index i = 0; i < d_svd; ++i) out.witness.col(i) = v.col(i).template cast<cplx>() / std::sqrt(lam[i]);
  }
  return out;
}

bool is_real(const Eigen::MatrixXcd& g) {
  double scale = g.cwiseAbs().maxCoeff();
  return g.imag().cwiseAbs().maxCoeff() <= 1e-15 * std::max(1.0, scale);
}

}  // namespace

VectorSet VectorSet::from_columns(const Eigen::MatrixXcd& columns, std::string chart) {
  return VectorSet{std::move(chart), columns.adjoint() * columns};
}

VectorSet VectorSet::from_gram(Eigen::MatrixXcd gram, std::string chart) {
  if (gram.rows() != gram.cols()) throw Error(ErrorCode::InvalidArgument, "gram must be square");
  return VectorSet{std::move(chart), std::move(gram)};
}

AprBracket h_apr_point(const VectorSet& vs, double delta) {
  if (!(delta > 0.0)) throw Error(ErrorCode::DeltaNonPositive, "delta = " + std::to_string(delta));
  Eigen::MatrixXcd g = 0.5 * (vs.gram + vs.gram.adjoint());
  if (is_real(g)) return bracket_impl<double>(g.real(), delta);
  return bracket_impl<cplx>(g, delta);
}

std::vector<double> witness_residuals(const VectorSet& vs, const AprBracket& bracket) {
  const Eigen::Index n = vs.size();
  std::vector<double> out(static_cast<std::size_t>(n));
  if (bracket.witness.cols() == 0) {
    for (Eigen::Index j = 0; j < n; ++j) out[static_cast<std::size_t>(j)] = std::sqrt(std::max(0.0, vs.gram(j, j).real()));
    return out;
  }
  Eigen::MatrixXcd rows(static_cast<Eigen::Index>(bracket.kept.size()), n);
  for (std::size_t l = 0; l < bracket.kept.size(); ++l) rows.row(static_cast<Eigen::Index>(l)) = vs.gram.row(bracket.kept[l]);
  Eigen::MatrixXcd p = bracket.witness.adjoint() * rows;
  for (Eigen::Index j = 0; j < n; ++j) {
    double r2 = vs.gram(j, j).real() - p.col(j).squaredNorm();
    out[static_cast<std::size_t>(j)] = std::sqrt(std::max(0.0, r2));
  }
  return out;
}

std::vector<Eigen::MatrixXcd> orthonormalize(const std::vector<Eigen::MatrixXcd>& c) {
  if (c.empty()) throw Error(ErrorCode::InvalidArgument, "no correlations");
  Eigen::MatrixXcd w = range_whitener(c[0]);
  std::vector<Eigen::MatrixXcd> out;
  out.reserve(c.size());
  for (const auto& ck : c) out.push_back(w.adjoint() * ck * w);
  return out;
}

OrbitGrowth orbit_growth(const std::vector<Eigen::MatrixXcd>& c, double delta, std::span<const std::int64_t> n_values) {
  if (n_values.empty()) throw Error(ErrorCode::InvalidArgument, "no orbit lengths requested");
  OrbitGrowth out;
  out.slope_hi = INFINITY;
  for (auto n : n_values) {
    if (n < 1) throw Error(ErrorCode::InvalidArgument, "orbit length must be >= 1");
    if (static_cast<std::size_t>(n) > c.size()) {
      throw Error(ErrorCode::ChartOverflow, "orbit length " + std::to_string(n) + " needs more correlation lags");
    }
    AprBracket b = h_apr_point(VectorSet::from_gram(orbit_gram(c, n), "orbit"), delta);
    out.slope_hi = std::min(out.slope_hi, static_cast<double>(b.d_hi) / static_cast<double>(n));
    out.n.push_back(n);
    out.brackets.push_back(std::move(b));
  }
  out.slope_lo = static_cast<double>(out.brackets.back().d_lo) / static_cast<double>(out.n.back());
  out.invariant_span = out.brackets.size() >= 2 &&
                       out.brackets.back().rank == out.brackets[out.brackets.size() - 2].rank;
  return out;
}

OrbitGrowth orbit_growth(const KoopmanBackend& backend, double delta, std::int64_t n_max, bool orthonormalize_first) {
  if (n_max < 1) throw Error(ErrorCode::InvalidArgument, "n_max must be >= 1");
  auto c = correlations(backend, n_max - 1);
  if (orthonormalize_first) c = orthonormalize(c);
  std::vector<std::int64_t> ns(static_cast<std::size_t>(n_max));
  for (std::int64_t i = 0; i < n_max; ++i) ns[static_cast<std::size_t>(i)] = i + 1;
  return orbit_growth(c, delta, ns);
}

DelayDictionary delay_dictionary(const std::vector<Eigen::MatrixXcd>& c, std::int64_t n, std::int64_t max_lag) {
  if (n < 0 || max_lag < 0) throw Error(ErrorCode::InvalidArgument, "delay order and lag must be >= 0");
  if (c.empty()) throw Error(ErrorCode::InvalidArgument, "no correlations");
  if (static_cast<std::int64_t>(c.size()) < n + max_lag + 1) {
    throw Error(ErrorCode::ChartOverflow, "delay dictionary needs lags up to " + std::to_string(n + max_lag));
  }
  const Eigen::Index d = c[0].rows();
  DelayDictionary out;
  out.n = n;
  out.generators = (n + 1) * d;
  for (std::int64_t m = 0; m <= max_lag; ++m) {
    Eigen::MatrixXcd cm(out.generators, out.generators);
    for (std::int64_t i = 0; i <= n; ++i)
      for (std::int64_t j = 0; j <= n; ++j) cm.block(i * d, j * d, d, d) = signed_correlation(c, m + j - i);
    out.correlations.push_back(std::move(cm));
  }
  out.rank = range_whitener(out.correlations[0]).cols();
  return out;
}

DelayBoundReport verify_theorem_3_1(const KoopmanBackend& backend, const DelayBoundOptions& options) {
  if (!(options.delta > 0.0)) throw Error(ErrorCode::DeltaNonPositive, "delta must be positive");
  if (!(options.eps > 0.0)) throw Error(ErrorCode::InvalidArgument, "eps must be positive");
  if (options.n < 0 || options.horizon < 1) throw Error(ErrorCode::InvalidArgument, "need n >= 0, horizon >= 1");
  std::vector<std::int64_t> ns = options.orbit_n;
  if (ns.empty())
    for (std::int64_t i = 1; i <= 16; ++i) ns.push_back(i);
  std::sort(ns.begin(), ns.end());
  const std::int64_t longest = ns.back();
  const std::int64_t lag = std::max(longest - 1, options.horizon);

  DelayBoundReport r;
  r.n = options.n;
  auto c = correlations(backend, options.n + lag);
  r.dim_f = range_whitener(c[0]).cols();
  std::vector<Eigen::MatrixXcd> cf(c.begin(), c.begin() + longest);
  r.f_growth = orbit_growth(orthonormalize(cf), options.delta, ns);

  DelayDictionary delay = delay_dictionary(c, options.n, lag);
  r.dim_fn = delay.rank;
  r.generators = delay.generators;
  auto cfn = orthonormalize(delay.correlations);
  std::vector<Eigen::MatrixXcd> cfn_orbit(cfn.begin(), cfn.begin() + longest);
  r.fn_growth = orbit_growth(cfn_orbit, options.delta, ns);

  std::vector<Eigen::MatrixXcd> cfn_dmd(cfn.begin(), cfn.begin() + options.horizon + 1);
  DmdModel model = dmd_from_correlations(std::move(cfn_dmd), backend.describe() + "/delay");
  r.delta_k = prediction_errors(model);
  while (r.k_max <= options.horizon && r.delta_k[static_cast<std::size_t>(r.k_max)] <= options.delta) ++r.k_max;
  r.horizon_limited = r.k_max > options.horizon;
  if (r.horizon_limited) r.warnings.push_back("K_max reached the computed horizon; reported value is a lower bound");

  r.entropy_zero = r.f_growth.invariant_span;
  r.h_lo = r.entropy_zero ? 0.0 : r.f_growth.slope_lo;
  if (r.entropy_zero) r.warnings.push_back("entropy-zero regime: the orbit span of F is invariant");
  r.rhs = static_cast<double>(r.k_max) * (r.h_lo - options.eps);
  r.holds = static_cast<double>(r.dim_fn) >= r.rhs - 1e-12;
  r.dimension_sanity = r.h_lo <= static_cast<double>(r.dim_f) + 1e-12;
  r.brackets_overlap = std::max(r.f_growth.slope_lo, r.fn_growth.slope_lo) <=
                       std::min(r.f_growth.slope_hi, r.fn_growth.slope_hi) + 1e-12;
  if (r.dim_fn > r.generators) r.warnings.push_back("dim F_n exceeds (n+1) dim F");
  return r;
}

}  // namespace koopdim
