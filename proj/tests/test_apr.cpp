#include <gtest/gtest.h>

#include <cmath>
#include <numeric>
#include <random>

#include "koopdim/apr.hpp"
#include "koopdim/error.hpp"

using namespace koopdim;

namespace {

Eigen::MatrixXcd random_matrix(Eigen::Index rows, Eigen::Index cols, std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  Eigen::MatrixXcd m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m(i) = cplx(g(rng), g(rng));
  return m;
}

double max_residual(const Eigen::MatrixXcd& cols, const Eigen::MatrixXcd& basis) {
  Eigen::MatrixXcd q = basis.householderQr().householderQ() * Eigen::MatrixXcd::Identity(basis.rows(), basis.cols());
  Eigen::MatrixXcd r = cols - q * (q.adjoint() * cols);
  return r.colwise().norm().maxCoeff();
}

int find(std::vector<int>& parent, int x) { return parent[x] == x ? x : parent[x] = find(parent, parent[x]); }

}  // namespace

TEST(HAprPoint, OrthonormalFive) {
  auto vs = VectorSet::from_columns(Eigen::MatrixXcd::Identity(5, 5));
  AprBracket b = h_apr_point(vs, 0.5);
  EXPECT_EQ(b.d_lo, 4);
  EXPECT_LE(b.d_hi, 5);
  EXPECT_EQ(b.orthonormal_subset, 5);
}

TEST(HAprPoint, DeltaAboveNorms) {
  std::mt19937_64 rng(1);
  Eigen::MatrixXcd cols = random_matrix(4, 3, rng);
  double max_norm = cols.colwise().norm().maxCoeff();
  AprBracket b = h_apr_point(VectorSet::from_columns(cols), max_norm * 1.01);
  EXPECT_EQ(b.d_lo, 0);
  EXPECT_EQ(b.d_hi, 0);
}

TEST(HAprPoint, SingleUnitVector) {
  Eigen::MatrixXcd e = Eigen::MatrixXcd::Zero(3, 1);
  e(1, 0) = 1.0;
  AprBracket b = h_apr_point(VectorSet::from_columns(e), 0.1);
  EXPECT_EQ(b.d_lo, 1);
  EXPECT_EQ(b.d_hi, 1);
}

TEST(HAprPoint, RepeatedVectorsCountOnce) {
  Eigen::MatrixXcd rep(3, 6);
  rep << Eigen::MatrixXcd::Identity(3, 3), Eigen::MatrixXcd::Identity(3, 3);
  AprBracket b = h_apr_point(VectorSet::from_columns(rep), 0.5);
  EXPECT_EQ(b.distinct, 3);
  EXPECT_EQ(b.d_lo, 3);
  EXPECT_EQ(b.d_hi, 3);
}

TEST(HAprPoint, DeltaNonPositive) {
  try {
    h_apr_point(VectorSet::from_columns(Eigen::MatrixXcd::Identity(2, 2)), 0.0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::DeltaNonPositive);
  }
}

TEST(HAprPoint, BracketValidityAgainstRandomCandidates) {
  std::mt19937_64 rng(33);
  std::uniform_real_distribution<double> u(0.2, 0.9);
  for (int t = 0; t < 25; ++t) {
    const Eigen::Index dim = 6 + t % 4, count = 5 + t % 6;
    Eigen::MatrixXcd cols = random_matrix(dim, count, rng);
    cols.array().rowwise() /= cols.colwise().norm().array().cast<cplx>();
    if (t % 3 == 0) cols.col(0) = cols.col(1) * 0.5 + cols.col(2) * 0.5;
    const double delta = u(rng);
    VectorSet vs = VectorSet::from_columns(cols);
    AprBracket b = h_apr_point(vs, delta);
    ASSERT_LE(0, b.d_lo);
    ASSERT_LE(b.d_lo, b.d_hi);
    ASSERT_LE(b.d_hi, count);
    for (double r : witness_residuals(vs, b)) EXPECT_LT(r, delta);
    // the witness is orthonormal
    const auto kept = static_cast<Eigen::Index>(b.kept.size());
    Eigen::MatrixXcd kk(kept, kept);
    for (Eigen::Index i = 0; i < kept; ++i)
      for (Eigen::Index j = 0; j < kept; ++j) kk(i, j) = vs.gram(b.kept[i], b.kept[j]);
    Eigen::MatrixXcd wg = b.witness.adjoint() * kk * b.witness;
    EXPECT_LT((wg - Eigen::MatrixXcd::Identity(b.d_hi, b.d_hi)).norm(), 1e-8);
    // no candidate subspace below d_lo achieves every residual < delta
    if (b.d_lo == 0) continue;
    if (b.d_lo == 1) {
      EXPECT_GE(cols.colwise().norm().maxCoeff(), delta);
    } else {
      const Eigen::Index k = b.d_lo - 1;
      for (int c = 0; c < 200; ++c) {
        Eigen::MatrixXcd basis = random_matrix(dim, k, rng);
        if (c % 2 == 1) basis = cols.leftCols(k) + 0.1 * basis;
        EXPECT_GE(max_residual(cols, basis), delta - 1e-12);
      }
    }
    // and the truncated SVD at dimension d_lo - 1 fails the Frobenius criterion
    Eigen::BDCSVD<Eigen::MatrixXcd> svd(cols);
    auto s = svd.singularValues();
    double tail = 0.0;
    for (Eigen::Index i = b.d_lo - 1; i < s.size(); ++i) tail += s[i] * s[i];
    if (b.orthonormal_subset <= 1) EXPECT_GE(tail, static_cast<double>(b.distinct) * delta * delta - 1e-9);
  }
}

TEST(OrbitGrowth, ShiftUnitVector) {
  ShiftBackend backend({ShiftVector::unit(0)});
  OrbitGrowth g = orbit_growth(backend, 0.5, 64);
  for (std::size_t i = 0; i < g.n.size(); ++i) {
    EXPECT_GE(g.brackets[i].d_lo, static_cast<Eigen::Index>(std::ceil(0.75 * static_cast<double>(g.n[i]))));
    EXPECT_LE(g.brackets[i].d_hi, g.n[i]);
  }
  EXPECT_GE(g.slope_lo, 0.75);
  EXPECT_LE(g.slope_hi, 1.0);
  EXPECT_FALSE(g.invariant_span);
}

TEST(OrbitGrowth, RotationEigenvector) {
  CharacterBackend backend(parse_system("rotation:golden"), {CharacterFunction::character(2)});
  OrbitGrowth g = orbit_growth(backend, 0.5, 16);
  for (const auto& b : g.brackets) EXPECT_LE(b.d_hi, 1);
  EXPECT_LE(g.slope_hi, 1.0 / 16.0 + 1e-12);
  EXPECT_TRUE(g.invariant_span);
}

TEST(OrbitGrowth, IdentityIsConstant) {
  std::mt19937_64 rng(4);
  MatrixBackend backend(Eigen::MatrixXcd::Identity(5, 5), random_matrix(5, 2, rng));
  OrbitGrowth g = orbit_growth(backend, 0.3, 10);
  for (const auto& b : g.brackets) {
    EXPECT_EQ(b.d_lo, g.brackets.front().d_lo);
    EXPECT_EQ(b.d_hi, g.brackets.front().d_hi);
  }
}

TEST(OrbitGrowth, ChartOverflowOnMissingLags) {
  ShiftBackend backend({ShiftVector::unit(0)});
  auto c = correlations(backend, 3);
  std::vector<std::int64_t> ns = {8};
  try {
    orbit_growth(c, 0.5, ns);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::ChartOverflow);
  }
}

TEST(Orthonormalize, WhitensGram) {
  System s = DoublingMap{};
  auto alpha = std::make_shared<const Partition>(make_partition(s, "dyadic:3"));
  Eigen::MatrixXcd coef = Eigen::MatrixXcd::Ones(8, 3);
  coef(0, 1) = 2.0;
  coef(5, 2) = -1.0;
  CellBackend backend(s, alpha, coef);
  auto c = orthonormalize(correlations(backend, 2));
  EXPECT_LT((c[0] - Eigen::MatrixXcd::Identity(c[0].rows(), c[0].cols())).norm(), 1e-12);
  EXPECT_EQ(c[0].rows(), 3);
}

TEST(DelayDictionary, ZeroIsF) {
  ShiftBackend backend({ShiftVector::unit(0), ShiftVector::unit(5)});
  auto c = correlations(backend, 4);
  DelayDictionary d = delay_dictionary(c, 0, 4);
  EXPECT_EQ(d.generators, 2);
  EXPECT_EQ(d.rank, 2);
  EXPECT_LT((d.correlations[2] - c[2]).norm(), 1e-15);
}

TEST(DelayDictionary, RotationCharacterRankOne) {
  CharacterBackend backend(parse_system("rotation:golden"), {CharacterFunction::character(1)});
  auto c = correlations(backend, 10);
  for (std::int64_t n : {0, 1, 5, 10}) EXPECT_EQ(delay_dictionary(c, n, 0).rank, 1);
}

TEST(DelayDictionary, DoublingGramRankMatchesCellOracle) {
  System s = DoublingMap{};
  for (int m = 1; m <= 5; ++m) {
    auto alpha = std::make_shared<const Partition>(make_partition(s, "dyadic:" + std::to_string(m)));
    CellBackend backend(s, alpha);
    auto c = correlations(backend, 1);
    Eigen::Index rank = delay_dictionary(c, 1, 0).rank;
    // dim(F + TF) = |alpha| + |phi^{-1} alpha| - |meet|, with the meet found by union-find on level m+1 atoms
    const int atoms = 1 << (m + 1), half = 1 << m;
    std::vector<int> parent(atoms);
    std::iota(parent.begin(), parent.end(), 0);
    for (int i = 0; i < atoms; ++i) {
      parent[find(parent, i)] = find(parent, i ^ 1);          // same alpha cell
      parent[find(parent, i)] = find(parent, (i + half) % atoms);  // same phi^{-1} alpha cell
    }
    int meet = 0;
    for (int i = 0; i < atoms; ++i) meet += find(parent, i) == i;
    EXPECT_EQ(rank, half + half - meet) << m;
  }
}

TEST(DelayBound, ShiftExample) {
  ShiftBackend backend({ShiftVector::unit(0)});
  for (std::int64_t n : {0, 4, 16}) {
    DelayBoundOptions opt;
    opt.n = n;
    opt.orbit_n = {1, 2, 4, 8, 16, 32, 64};
    DelayBoundReport r = verify_theorem_3_1(backend, opt);
    EXPECT_EQ(r.dim_fn, n + 1);
    EXPECT_EQ(r.generators, n + 1);
    EXPECT_GE(r.h_lo, 0.75);
    EXPECT_TRUE(r.holds);
    EXPECT_GE(static_cast<double>(n + 1), static_cast<double>(r.k_max) * (0.75 - opt.eps));
    EXPECT_TRUE(r.brackets_overlap);
    EXPECT_TRUE(r.dimension_sanity);
  }
}

TEST(DelayBound, RotationIsEntropyZero) {
  CharacterBackend backend(parse_system("rotation:golden"),
                           {CharacterFunction::character(1), CharacterFunction::character(-3)});
  DelayBoundOptions opt;
  opt.n = 3;
  DelayBoundReport r = verify_theorem_3_1(backend, opt);
  EXPECT_TRUE(r.entropy_zero);
  EXPECT_EQ(r.h_lo, 0.0);
  EXPECT_TRUE(r.holds);
  EXPECT_EQ(r.dim_fn, 2);
}

TEST(DelayBound, BakerLevelTwo) {
  System s = BakerMap{};
  auto alpha = std::make_shared<const Partition>(make_partition(s, "grid:2,2"));
  CellBackend backend(s, alpha);
  DelayBoundOptions opt;
  opt.n = 2;
  opt.eps = 0.2;
  opt.orbit_n = {1, 2, 3};
  opt.horizon = 4;
  DelayBoundReport r = verify_theorem_3_1(backend, opt);
  EXPECT_TRUE(r.holds);
  EXPECT_LE(r.dim_fn, r.generators);
  EXPECT_TRUE(r.dimension_sanity);
}
