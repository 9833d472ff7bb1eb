#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "koopdim/hilbert.hpp"

namespace koopdim {

// Source of the correlation matrices C_k(a, b) = <T^k psi_b, psi_a> of a finite dictionary
// under the Koopman isometry T f = f o phi. Since T is an isometry,
// <T^j psi_b, T^i psi_a> = C_{j-i}(a, b) with C_{-k} = C_k^*.
class KoopmanBackend {
 public:
  virtual ~KoopmanBackend() = default;
  virtual Eigen::Index dimension() const = 0;
  virtual Eigen::MatrixXcd correlation(std::int64_t k) const = 0;  // k >= 0
  virtual std::string describe() const = 0;
  virtual bool exact() const { return true; }
};

// psi_b = sum_i coef(i, b) 1_{A_i} over the cells of alpha; exact joint measures
// mu(A_i cap phi^{-k} A_j) on the depth-(k+1) chart.
class CellBackend final : public KoopmanBackend {
 public:
  CellBackend(System system, std::shared_ptr<const Partition> alpha, Eigen::MatrixXcd coef,
              std::size_t budget = kDefaultCellBudget);
  // Indicator dictionary of alpha.
  CellBackend(System system, std::shared_ptr<const Partition> alpha, std::size_t budget = kDefaultCellBudget);

  Eigen::Index dimension() const override { return coef_.cols(); }
  Eigen::MatrixXcd correlation(std::int64_t k) const override;
  std::string describe() const override;

  const Partition& partition() const { return *alpha_; }
  const Eigen::MatrixXcd& coef() const { return coef_; }
  // J(i, j) = mu(A_i cap phi^{-k} A_j).
  Eigen::MatrixXd joint_measure(std::int64_t k) const;

 private:
  System system_;
  std::shared_ptr<const Partition> alpha_;
  Eigen::MatrixXcd coef_;
  std::size_t budget_;
};

// Finitely supported vectors of l^2(Z) under U e_j = e_{j+1}.
class ShiftBackend final : public KoopmanBackend {
 public:
  explicit ShiftBackend(std::vector<ShiftVector> vectors);
  Eigen::Index dimension() const override { return static_cast<Eigen::Index>(vectors_.size()); }
  Eigen::MatrixXcd correlation(std::int64_t k) const override;
  std::string describe() const override { return "shift"; }

 private:
  std::vector<ShiftVector> vectors_;
};

// Character combinations on the circle (rotation) or torus (skew rotation).
class CharacterBackend final : public KoopmanBackend {
 public:
  CharacterBackend(System system, std::vector<CharacterFunction> functions);
  Eigen::Index dimension() const override { return static_cast<Eigen::Index>(functions_.size()); }
  Eigen::MatrixXcd correlation(std::int64_t k) const override;
  std::string describe() const override;

 private:
  System system_;
  std::vector<CharacterFunction> functions_;
};

// Columns of x under a dense unitary u.
class MatrixBackend final : public KoopmanBackend {
 public:
  MatrixBackend(Eigen::MatrixXcd u, Eigen::MatrixXcd x);
  Eigen::Index dimension() const override { return x_.cols(); }
  Eigen::MatrixXcd correlation(std::int64_t k) const override;
  std::string describe() const override { return "matrix"; }

 private:
  Eigen::MatrixXcd u_;
  Eigen::MatrixXcd x_;
};

// T^k f for characters: rotation multiplies chi_j by e^{2 pi i j k theta}; the skew rotation
// sends chi_{a,b} to exp(2 pi i s (a k + b k(k-1)/2)) chi_{a + k b, b} with s = angle / 2.
CharacterFunction apply_koopman(const System& system, const CharacterFunction& f, std::int64_t k);

// C_0 .. C_{k_max}.
std::vector<Eigen::MatrixXcd> correlations(const KoopmanBackend& backend, std::int64_t k_max);
// C_k for any signed k from the k >= 0 table.
Eigen::MatrixXcd signed_correlation(const std::vector<Eigen::MatrixXcd>& c, std::int64_t k);
// Gram of {T^k psi_b : k in [0, n), b}, ordered k-major: entry ((i,a), (j,b)) = <T^j psi_b, T^i psi_a>.
Eigen::MatrixXcd orbit_gram(const std::vector<Eigen::MatrixXcd>& c, std::int64_t n);

std::unique_ptr<KoopmanBackend> make_backend(const System& system, const std::string& dictionary,
                                             std::size_t budget = kDefaultCellBudget);

}  // namespace koopdim
