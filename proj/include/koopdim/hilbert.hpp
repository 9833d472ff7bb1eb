#pragma once

#include <complex>
#include <cstdint>
#include <map>
#include <memory>
#include <span>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "koopdim/partition.hpp"

namespace koopdim {

using cplx = std::complex<double>;

// Element of L^2(X | alpha): sum_i coeffs[i] 1_{A_i}.
struct CellFunction {
  std::shared_ptr<const Partition> partition;
  Eigen::VectorXcd coeffs;

  static CellFunction indicator(std::shared_ptr<const Partition> partition, std::size_t cell);
  static CellFunction constant(std::shared_ptr<const Partition> partition, cplx value = 1.0);

  cplx operator()(const Point& p) const { return coeffs[static_cast<Eigen::Index>(partition->label(p))]; }
  double norm() const;
  double lp_norm(double p) const;
};

// Finite combination of torus characters chi_{j,k}(x, y) = e^{2 pi i (j x + k y)}.
// Circle functions use k = 0.
struct CharacterFunction {
  std::map<std::pair<std::int64_t, std::int64_t>, cplx> terms;

  static CharacterFunction character(std::int64_t j, std::int64_t k = 0, cplx amplitude = 1.0);
  double norm() const;
};

// Values of f on the atoms of a chart refining f's partition.
Eigen::VectorXcd atom_values(const CellFunction& f, const std::shared_ptr<const AtomChart>& chart);
Eigen::VectorXd atom_measures(const AtomChart& chart);

// <f, g> = sum f conj(g) dmu, linear in the first argument.
cplx inner_product(const CellFunction& f, const CellFunction& g, std::size_t budget = kDefaultCellBudget);
cplx inner_product(const CharacterFunction& f, const CharacterFunction& g);

CellFunction conditional_expectation(const CellFunction& f, std::shared_ptr<const Partition> beta,
                                     std::size_t budget = kDefaultCellBudget);

struct L1ProjectionError {
  double direct = 0.0;
  double closed_form = 0.0;
};

// || E[1_A | beta] - 1_A ||_1 for A = cell of alpha, integrated atom by atom and by the closed form
// 2 sum_B mu(A cap B) mu(B \ A) / mu(B).
L1ProjectionError l1_projection_error(const Partition& alpha, std::size_t cell, const Partition& beta,
                                      std::size_t budget = kDefaultCellBudget);

struct MonteCarloL1 {
  double estimate = 0.0;
  double stderr_value = 0.0;
  double closed_form = 0.0;
  std::size_t samples = 0;
};

// Sample mean of |E[1_A | beta](p) - 1_A(p)| over the pool, against the exact closed form.
MonteCarloL1 l1_projection_error_mc(const Partition& alpha, std::size_t cell, const Partition& beta,
                                    std::span<const Point> pool, std::size_t budget = kDefaultCellBudget);

// || E[1_A | beta] - 1_A ||_p, exact.
double lp_projection_error(const Partition& alpha, std::size_t cell, const Partition& beta, double p,
                           std::size_t budget = kDefaultCellBudget);

struct PseudoInverse {
  Eigen::MatrixXcd matrix;
  Eigen::Index rank = 0;
};

inline constexpr double kPinvRelTol = 1e-10;

// Singular values below rel_tol * sigma_max are treated as zero.
PseudoInverse pseudo_inverse(const Eigen::MatrixXcd& a, double rel_tol = kPinvRelTol);

// Columns W with W^* G W = I spanning range(G) in coefficient space (eigenvalues below
// kPinvRelTol * lambda_max dropped).
Eigen::MatrixXcd range_whitener(const Eigen::MatrixXcd& gram);

struct Projection {
  Eigen::VectorXcd coeffs;
  Eigen::Index rank = 0;
  double residual_norm = 0.0;  // filled when f's norm is known
};

// Solves gram c = b with gram(i, j) = <psi_j, psi_i> and b_i = <f, psi_i>.
Projection orthogonal_project(const Eigen::MatrixXcd& gram, const Eigen::VectorXcd& b);
Projection orthogonal_project(const CellFunction& f, std::span<const CellFunction> dictionary,
                              std::size_t budget = kDefaultCellBudget);

}  // namespace koopdim
