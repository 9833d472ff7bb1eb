#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "koopdim/koopman.hpp"

namespace koopdim {

enum class DmdProvenance { Analytic, Edmd };

// Dictionary psi_1..psi_d with G(i, j) = <psi_j, psi_i>, A_k(i, j) = <T^k psi_j, psi_i>
// and T-hat psi_j = sum_i M(i, j) psi_i.
struct DmdModel {
  Eigen::MatrixXcd gram;
  std::vector<Eigen::MatrixXcd> cross;  // A_0 .. A_K (A_1 only for eDMD)
  Eigen::MatrixXcd m;
  Eigen::Index rank = 0;
  DmdProvenance provenance = DmdProvenance::Analytic;
  std::size_t samples = 0;
  std::string dictionary;

  Eigen::Index dimension() const { return gram.rows(); }
  std::int64_t horizon() const { return static_cast<std::int64_t>(cross.size()) - 1; }
  bool rank_deficient() const { return rank < dimension(); }
};

DmdModel analytic_dmd(const KoopmanBackend& backend, std::int64_t horizon);
DmdModel dmd_from_correlations(std::vector<Eigen::MatrixXcd> c, std::string dictionary);

// Dictionary rows for eDMD: psi_b(p) = coef(label(p), b).
struct SnapshotDictionary {
  std::shared_ptr<const Partition> partition;
  Eigen::MatrixXcd coef;

  static SnapshotDictionary indicators(std::shared_ptr<const Partition> partition);
  Eigen::Index dimension() const { return coef.cols(); }
};

// G = Psi_X^* Psi_X / N, A = Psi_X^* Psi_Y / N, M = G^+ A.
DmdModel edmd_from_snapshots(std::span<const std::pair<Point, Point>> pairs, const SnapshotDictionary& dictionary);
DmdModel edmd_weighted(std::span<const std::pair<Point, Point>> pairs, std::span<const double> weights,
                       const SnapshotDictionary& dictionary);
// i.i.d. mu-samples x_i paired with phi(x_i).
std::vector<std::pair<Point, Point>> iid_snapshots(const System& system, std::size_t n, std::uint64_t seed);
std::vector<std::pair<Point, Point>> orbit_snapshots(const System& system, std::size_t n, std::uint64_t seed);
// Same estimator as edmd_from_snapshots over n i.i.d. pairs, sampled and accumulated in chunks.
DmdModel edmd_iid(const System& system, const SnapshotDictionary& dictionary, std::size_t n, std::uint64_t seed,
                  std::size_t chunk = 1 << 16);

// sup over unit f in F of || T-hat^k f - T^k f ||, in [0, 2].
double prediction_error_norm(const DmdModel& model, std::int64_t k);
std::vector<double> prediction_errors(const DmdModel& model);

struct DeltaConstants {
  double delta = 0.0;
  double c = 1.0;
  double cap = 0.0;
  std::vector<std::pair<double, double>> trace;  // (delta, g(delta)) per bisection step
};

// g(delta) = -kappa c delta log(c delta) - (1 - kappa c delta) log(1 - kappa c delta).
double continuity_g(std::size_t kappa, double c, double delta);
// Largest bisected delta in (0, 1/(4 c kappa)) with g(delta) <= eps - 1e-9.
DeltaConstants delta_K0_constants(std::size_t kappa, double p, double eps);

struct HorizonReport {
  std::vector<double> delta_k;  // k = 0 .. horizon
  double delta = 0.0;
  bool delta_constructed = true;
  std::int64_t k_max = 0;
  bool horizon_limited = false;
  std::vector<double> rates;    // (1/n) H, n = 1 .. depth
  double h_est = 0.0;
  std::size_t h_depth = 0;
  std::optional<std::int64_t> k0;
  std::size_t cells = 0;
  std::size_t combinatorial_cells = 0;
  double log_card = 0.0;
  double rhs = 0.0;  // K_max (h_est - eps)
  bool entropy_zero = false;
  bool vacuous = false;
  bool holds = true;
  std::vector<std::string> warnings;
};

struct HorizonOptions {
  double eps = 0.1;
  std::optional<double> delta;
  std::int64_t horizon = 8;
  std::size_t entropy_depth_cap = 24;
  std::size_t budget = kDefaultCellBudget;
};

// Random kappa-cell dyadic alpha and a perturbation beta (a few fine atoms relabelled, sometimes
// split further); checks sup_A ||E[1_A|beta] - 1_A||_p < delta(kappa, p, eps) => H(alpha|beta) < eps.
struct ContinuityTrial {
  std::size_t trial = 0;
  std::size_t kappa = 0;
  double delta = 0.0;
  std::size_t flips = 0;
  bool split = false;
  double sup_error = 0.0;
  double conditional_entropy = 0.0;
  bool hypothesis = false;
  bool conclusion = false;
};

std::vector<ContinuityTrial> lemma_2_2_trials(std::size_t kappa, double p, double eps, std::size_t trials,
                                           std::uint64_t seed, std::uint8_t fine_level = 18);

HorizonReport verify_theorem_1_1(const System& system, std::shared_ptr<const Partition> alpha,
                                 const HorizonOptions& options);

}  // namespace koopdim
