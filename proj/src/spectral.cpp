#include "koopdim/spectral.hpp"

#include <cmath>
#include <numbers>

#include "koopdim/error.hpp"

namespace koopdim {

cplx Autocorrelation::at(std::int64_t k) const {
  auto m = static_cast<std::size_t>(k < 0 ? -k : k);
  if (m >= c.size()) throw Error(ErrorCode::InvalidArgument, "lag " + std::to_string(k) + " beyond k_max");
  return k >= 0 ? c[m] : std::conj(c[m]);
}

Autocorrelation autocorrelation(const KoopmanBackend& backend, const Eigen::VectorXcd& coef, std::int64_t k_max) {
  if (k_max < 0) throw Error(ErrorCode::InvalidArgument, "k_max must be >= 0");
  if (coef.size() != backend.dimension()) throw Error(ErrorCode::InvalidArgument, "coefficient length mismatch");
  Autocorrelation ac;
  ac.x = backend.describe();
  ac.exact = backend.exact();
  ac.c.reserve(static_cast<std::size_t>(k_max + 1));
  for (std::int64_t k = 0; k <= k_max; ++k) {
    // <T^k x, x> = coef^* C_k coef, and c_k is its conjugate.
    cplx forward = coef.dot(backend.correlation(k) * coef);
    ac.c.push_back(std::conj(forward));
  }
  ac.c[0] = ac.c[0].real();
  return ac;
}

Autocorrelation autocorrelation(const KoopmanBackend& backend, std::int64_t k_max) {
  if (backend.dimension() != 1) throw Error(ErrorCode::InvalidArgument, "backend must hold exactly one vector");
  return autocorrelation(backend, Eigen::VectorXcd::Ones(1), k_max);
}

std::vector<double> wiener_statistic(const Autocorrelation& ac) {
  std::vector<double> w;
  w.reserve(ac.c.size());
  double s = 0.0;
  for (std::size_t n = 1; n <= ac.c.size(); ++n) {
    s += std::norm(ac.c[n - 1]);
    w.push_back(s / static_cast<double>(n));
  }
  return w;
}

AtomMassEstimate atom_mass_estimate(const std::vector<double>& wiener) {
  AtomMassEstimate out;
  if (wiener.empty()) return out;
  std::size_t n = wiener.size();
  out.value = wiener[n - 1];
  std::size_t half = std::max<std::size_t>(1, n / 2);
  out.trending = std::abs(wiener[n - 1] - wiener[half - 1]) > 0.02;
  return out;
}

LebesgueCertificate lebesgue_orbit_certificate(const KoopmanBackend& backend, const Eigen::VectorXcd& coef,
                                               std::int64_t n_max) {
  if (n_max < 0) throw Error(ErrorCode::InvalidArgument, "n_max must be >= 0");
  Autocorrelation ac = autocorrelation(backend, coef, 2 * n_max);
  LebesgueCertificate out;
  out.n_max = n_max;
  for (std::int64_t k = 0; k <= 2 * n_max; ++k) {
    double target = k == 0 ? 1.0 : 0.0;
    out.max_deviation = std::max(out.max_deviation, std::abs(ac.c[static_cast<std::size_t>(k)] - target));
  }
  out.certified = out.max_deviation < 1e-10;
  return out;
}

double fejer_density_at(const Autocorrelation& ac, double theta) {
  const std::int64_t kk = ac.k_max();
  double s = ac.c[0].real();
  for (std::int64_t k = 1; k <= kk; ++k) {
    double w = 1.0 - static_cast<double>(k) / static_cast<double>(kk + 1);
    cplx e = std::polar(1.0, 2.0 * std::numbers::pi * static_cast<double>(k) * theta);
    s += 2.0 * w * (ac.c[static_cast<std::size_t>(k)] * e).real();
  }
  return s;
}

std::vector<double> fejer_density(const Autocorrelation& ac, std::size_t grid) {
  if (grid == 0) throw Error(ErrorCode::InvalidArgument, "grid must be positive");
  if (static_cast<std::int64_t>(grid) > 2 * ac.k_max()) {
    throw Error(ErrorCode::GridTooFine, "grid " + std::to_string(grid) + " needs k_max >= " + std::to_string((grid + 1) / 2));
  }
  std::vector<double> out(grid);
  for (std::size_t i = 0; i < grid; ++i) out[i] = fejer_density_at(ac, static_cast<double>(i) / static_cast<double>(grid));
  return out;
}

std::vector<SpectralAtom> detect_atoms(const Autocorrelation& ac, std::size_t grid, double min_mass) {
  auto density = fejer_density(ac, grid);
  const double height = static_cast<double>(ac.k_max() + 1);
  const double h = 1.0 / static_cast<double>(grid);
  std::vector<SpectralAtom> atoms;
  for (std::size_t i = 0; i < grid; ++i) {
    double prev = density[(i + grid - 1) % grid];
    double next = density[(i + 1) % grid];
    if (!(density[i] >= prev && density[i] > next)) continue;
    if (density[i] / height <= min_mass) continue;
    // golden-section refinement of the peak on [theta - h, theta + h]
    const double phi = (std::sqrt(5.0) - 1.0) / 2.0;
    double a = static_cast<double>(i) * h - h;
    double b = static_cast<double>(i) * h + h;
    double x1 = b - phi * (b - a);
    double x2 = a + phi * (b - a);
    double f1 = fejer_density_at(ac, x1);
    double f2 = fejer_density_at(ac, x2);
    for (int it = 0; it < 80; ++it) {
      if (f1 < f2) {
        a = x1;
        x1 = x2;
        f1 = f2;
        x2 = a + phi * (b - a);
        f2 = fejer_density_at(ac, x2);
      } else {
        b = x2;
        x2 = x1;
        f2 = f1;
        x1 = b - phi * (b - a);
        f1 = fejer_density_at(ac, x1);
      }
    }
    double theta = 0.5 * (a + b);
    double peak = fejer_density_at(ac, theta);
    theta -= std::floor(theta);
    atoms.push_back(SpectralAtom{theta, peak / height});
  }
  return atoms;
}

double toeplitz_min_eigenvalue(const Autocorrelation& ac) {
  const auto n = static_cast<Eigen::Index>(ac.c.size());
  Eigen::MatrixXcd t(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) t(i, j) = ac.at(i - j);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(t, Eigen::EigenvaluesOnly);
  return es.eigenvalues()[0];
}

SpectralDiagnostics spectral_diagnostics(const KoopmanBackend& backend, const Eigen::VectorXcd& coef,
                                         std::int64_t k_max, std::size_t grid) {
  SpectralDiagnostics d;
  d.ac = autocorrelation(backend, coef, k_max);
  d.wiener = wiener_statistic(d.ac);
  d.atom_mass = atom_mass_estimate(d.wiener);
  d.density = fejer_density(d.ac, grid);
  const double c0 = d.ac.c[0].real();
  d.atoms = detect_atoms(d.ac, grid, 0.05 * c0);
  d.toeplitz_min = toeplitz_min_eigenvalue(d.ac);
  double ratio = c0 > 0.0 ? d.atom_mass.value / (c0 * c0) : 0.0;
  if (c0 <= 0.0 || ratio < 0.02) d.verdict = "continuous (ac+sc)";
  else if (ratio > 0.98) d.verdict = "discrete";
  else d.verdict = "mixed";
  return d;
}

}  // namespace koopdim
