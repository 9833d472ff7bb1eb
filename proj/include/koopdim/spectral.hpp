#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "koopdim/koopman.hpp"

namespace koopdim {

// c_k = <x, T^k x> for 0 <= k <= k_max; negative lags by conjugate symmetry.
struct Autocorrelation {
  std::string x;
  std::vector<cplx> c;
  bool exact = true;

  std::int64_t k_max() const { return static_cast<std::int64_t>(c.size()) - 1; }
  cplx at(std::int64_t k) const;
};

// x = sum_b coef(b) psi_b over the backend dictionary.
Autocorrelation autocorrelation(const KoopmanBackend& backend, const Eigen::VectorXcd& coef, std::int64_t k_max);
Autocorrelation autocorrelation(const KoopmanBackend& backend, std::int64_t k_max);

// W_n = (1/n) sum_{k<n} |c_k|^2 for n = 1 .. k_max + 1.
std::vector<double> wiener_statistic(const Autocorrelation& ac);

struct AtomMassEstimate {
  double value = 0.0;
  bool trending = false;  // |W_n - W_{n/2}| > 0.02
};
AtomMassEstimate atom_mass_estimate(const std::vector<double>& wiener);

struct LebesgueCertificate {
  bool certified = false;
  double max_deviation = 0.0;
  std::int64_t n_max = 0;
};
// Checks |<T^j x, T^k x> - delta_jk| < 1e-10 for |j|, |k| <= n_max through the lags 0 .. 2 n_max.
LebesgueCertificate lebesgue_orbit_certificate(const KoopmanBackend& backend, const Eigen::VectorXcd& coef,
                                               std::int64_t n_max);

// Fejer mean sum_{|k|<=K} (1 - |k|/(K+1)) c_k e^{2 pi i k theta} at theta = i / grid.
std::vector<double> fejer_density(const Autocorrelation& ac, std::size_t grid);
double fejer_density_at(const Autocorrelation& ac, double theta);

struct SpectralAtom {
  double theta = 0.0;
  double mass = 0.0;
};
// Local maxima of the Fejer mean whose mass estimate peak/(K+1) exceeds min_mass.
std::vector<SpectralAtom> detect_atoms(const Autocorrelation& ac, std::size_t grid, double min_mass);

// Smallest eigenvalue of the Toeplitz matrix (c_{i-j}).
double toeplitz_min_eigenvalue(const Autocorrelation& ac);

struct SpectralDiagnostics {
  Autocorrelation ac;
  std::vector<double> wiener;
  AtomMassEstimate atom_mass;
  std::vector<double> density;
  std::vector<SpectralAtom> atoms;
  double toeplitz_min = 0.0;
  std::string verdict;  // "discrete", "continuous (ac+sc)" or "mixed"
};

SpectralDiagnostics spectral_diagnostics(const KoopmanBackend& backend, const Eigen::VectorXcd& coef,
                                         std::int64_t k_max, std::size_t grid);

}  // namespace koopdim
