#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "koopdim/dmd.hpp"
#include "koopdim/koopman.hpp"

namespace koopdim {

// Finite vector set omega, held through its Gram matrix gram(i, j) = <x_j, x_i>.
// Chart coordinates (if given) are an orthonormal coordinate system containing omega.
struct VectorSet {
  std::string chart;
  Eigen::MatrixXcd gram;

  static VectorSet from_columns(const Eigen::MatrixXcd& columns, std::string chart = "coordinates");
  static VectorSet from_gram(Eigen::MatrixXcd gram, std::string chart = "gram");
  Eigen::Index size() const { return gram.rows(); }
};

// Bracket d_lo <= H_apr(omega, delta) <= d_hi. The witness u_i = sum_l witness(l, i) x_{kept[l]}
// is an orthonormal basis achieving every column residual < delta.
struct AprBracket {
  Eigen::Index d_lo = 0;
  Eigen::Index d_hi = 0;
  double delta = 0.0;
  Eigen::Index distinct = 0;             // |omega| after removing repeated vectors
  Eigen::Index orthonormal_subset = 0;   // size of the detected orthonormal subset
  Eigen::Index rank = 0;                 // dimension of span(omega)
  std::vector<Eigen::Index> kept;
  Eigen::MatrixXcd witness;
  std::string witness_source;            // "svd" or "greedy"
};

inline constexpr double kStrictGuard = 1e-12;
inline constexpr double kOrthonormalTol = 1e-10;

AprBracket h_apr_point(const VectorSet& vs, double delta);
// Column residuals ||x_j - P x_j|| for the witness subspace, from the Gram directly.
std::vector<double> witness_residuals(const VectorSet& vs, const AprBracket& bracket);

struct OrbitGrowth {
  std::vector<std::int64_t> n;
  std::vector<AprBracket> brackets;
  double slope_lo = 0.0;  // d_lo / n at the largest n
  double slope_hi = 0.0;  // min over n of d_hi / n
  // Span rank stopped growing between the last two n: span(omega_n) is T-invariant and
  // the approximation entropy is exactly 0.
  bool invariant_span = false;
};

// Brackets for omega_n = union_{k<n} T^k omega with omega described by its correlations C_k.
OrbitGrowth orbit_growth(const std::vector<Eigen::MatrixXcd>& c, double delta, std::span<const std::int64_t> n_values);
OrbitGrowth orbit_growth(const KoopmanBackend& backend, double delta, std::int64_t n_max, bool orthonormalize_first = true);

// C_k -> W^* C_k W where W whitens C_0 on its range, giving an orthonormal basis of span(omega).
std::vector<Eigen::MatrixXcd> orthonormalize(const std::vector<Eigen::MatrixXcd>& c);

// Generators {T^k psi_b : k <= n} of the delay subspace F_n with their correlations up to lag max_lag.
struct DelayDictionary {
  std::int64_t n = 0;
  Eigen::Index generators = 0;
  Eigen::Index rank = 0;  // dim F_n
  std::vector<Eigen::MatrixXcd> correlations;
};

// c must hold lags 0 .. n + max_lag.
DelayDictionary delay_dictionary(const std::vector<Eigen::MatrixXcd>& c, std::int64_t n, std::int64_t max_lag);

struct DelayBoundOptions {
  double eps = 0.1;
  double delta = 0.5;
  std::int64_t n = 0;
  std::vector<std::int64_t> orbit_n;  // n values for the slope brackets
  std::int64_t horizon = 8;
};

struct DelayBoundReport {
  std::int64_t n = 0;
  Eigen::Index dim_f = 0;
  Eigen::Index dim_fn = 0;
  Eigen::Index generators = 0;
  OrbitGrowth f_growth;
  OrbitGrowth fn_growth;
  std::vector<double> delta_k;
  std::int64_t k_max = 0;
  bool horizon_limited = false;
  double h_lo = 0.0;
  double rhs = 0.0;  // K_max (h_lo - eps)
  bool holds = true;
  bool dimension_sanity = true;  // h_lo <= dim F
  bool brackets_overlap = true;
  bool entropy_zero = false;
  std::vector<std::string> warnings;
};

DelayBoundReport verify_theorem_3_1(const KoopmanBackend& backend, const DelayBoundOptions& options);

}  // namespace koopdim
