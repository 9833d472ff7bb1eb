#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "koopdim/error.hpp"
#include "koopdim/hilbert.hpp"

using namespace koopdim;

namespace {

std::shared_ptr<const Partition> dyadic(int level) {
  return std::make_shared<const Partition>(make_partition(DoublingMap{}, "dyadic:" + std::to_string(level)));
}

std::shared_ptr<const Partition> labelled(std::shared_ptr<const AtomChart> chart, std::vector<std::uint32_t> labels,
                                          std::size_t k) {
  return std::make_shared<const Partition>(chart, std::move(labels), k);
}

CellFunction random_function(std::shared_ptr<const Partition> p, std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  CellFunction f{p, Eigen::VectorXcd(static_cast<Eigen::Index>(p->size()))};
  for (Eigen::Index i = 0; i < f.coeffs.size(); ++i) f.coeffs[i] = cplx(g(rng), g(rng));
  return f;
}

}  // namespace

TEST(InnerProduct, Indicators) {
  auto p = dyadic(2);
  for (std::size_t i = 0; i < 4; ++i) {
    auto a = CellFunction::indicator(p, i);
    EXPECT_NEAR(std::abs(inner_product(a, a) - cplx(0.25)), 0.0, 1e-15);
    for (std::size_t j = 0; j < 4; ++j)
      if (j != i) EXPECT_EQ(inner_product(a, CellFunction::indicator(p, j)), cplx(0.0));
  }
}

TEST(InnerProduct, Characters) {
  for (int j = -3; j <= 3; ++j)
    for (int k = -3; k <= 3; ++k) {
      auto a = CharacterFunction::character(j);
      auto b = CharacterFunction::character(k);
      EXPECT_EQ(inner_product(a, b), cplx(j == k ? 1.0 : 0.0));
    }
  auto f = CharacterFunction::character(1, 2, cplx(0.0, 2.0));
  EXPECT_DOUBLE_EQ(f.norm(), 2.0);
}

TEST(InnerProduct, ConjugateSymmetricAcrossCharts) {
  std::mt19937_64 rng(5);
  for (int t = 0; t < 20; ++t) {
    auto f = random_function(dyadic(1 + t % 4), rng);
    auto g = random_function(dyadic(1 + (t * 3) % 5), rng);
    EXPECT_NEAR(std::abs(inner_product(f, g) - std::conj(inner_product(g, f))), 0.0, 1e-14);
    EXPECT_NEAR(inner_product(f, f).real(), f.norm() * f.norm(), 1e-12);
  }
}

TEST(InnerProduct, RepresentationMismatch) {
  auto f = CellFunction::constant(dyadic(1));
  auto g = CellFunction::constant(std::make_shared<const Partition>(make_partition(BakerMap{}, "grid:1,1")));
  try {
    inner_product(f, g);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::RepresentationMismatch);
  }
}

TEST(ConditionalExpectation, Examples) {
  auto trivial = dyadic(0);
  std::mt19937_64 rng(1);
  auto f = random_function(dyadic(3), rng);
  auto e = conditional_expectation(f, trivial);
  EXPECT_NEAR(std::abs(e.coeffs[0] - inner_product(f, CellFunction::constant(trivial))), 0.0, 1e-14);

  auto quarter = CellFunction::indicator(dyadic(2), 0);
  auto half = conditional_expectation(quarter, dyadic(1));
  EXPECT_NEAR(std::abs(half.coeffs[0] - cplx(0.5)), 0.0, 1e-15);
  EXPECT_NEAR(std::abs(half.coeffs[1]), 0.0, 1e-15);
}

TEST(ConditionalExpectation, MarkovProperties) {
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int t = 0; t < 20; ++t) {
    auto alpha = dyadic(1 + t % 6);
    std::vector<std::uint32_t> labels(16);
    for (auto& l : labels) l = static_cast<std::uint32_t>(u(rng) * 5);
    auto beta = labelled(dyadic_chart(4), labels, 5);
    auto f = random_function(alpha, rng);
    CellFunction pos{alpha, f.coeffs.cwiseAbs().cast<cplx>()};
    auto e = conditional_expectation(f, beta);
    auto ee = conditional_expectation(e, beta);
    EXPECT_LT((e.coeffs - ee.coeffs).norm(), 1e-13);
    EXPECT_LE(e.norm(), f.norm() + 1e-13);
    auto one = CellFunction::constant(beta);
    EXPECT_NEAR(std::abs(inner_product(e, one) - inner_product(f, CellFunction::constant(alpha))), 0.0, 1e-13);
    auto epos = conditional_expectation(pos, beta);
    for (Eigen::Index i = 0; i < epos.coeffs.size(); ++i) EXPECT_GE(epos.coeffs[i].real(), -1e-15);
    auto e1 = conditional_expectation(CellFunction::constant(alpha), beta);
    for (Eigen::Index i = 0; i < e1.coeffs.size(); ++i) EXPECT_NEAR(std::abs(e1.coeffs[i] - cplx(1.0)), 0.0, 1e-13);
  }
}

TEST(L1ProjectionError, Examples) {
  Partition beta = make_partition(DoublingMap{}, "dyadic:1");
  auto in_beta = l1_projection_error(beta, 1, beta);
  EXPECT_NEAR(in_beta.direct, 0.0, 1e-15);
  EXPECT_NEAR(in_beta.closed_form, 0.0, 1e-15);
  Partition alpha(dyadic_chart(2), {0, 1, 1, 1}, 2);
  auto r = l1_projection_error(alpha, alpha.label(Dyadic::make(0, 2)), beta);
  EXPECT_NEAR(r.closed_form, 0.25, 1e-15);
  EXPECT_NEAR(r.direct, 0.25, 1e-15);
}

TEST(L1ProjectionError, RandomInstancesAndMonteCarlo) {
  std::mt19937_64 rng(12);
  auto pool = sample_measure(DoublingMap{}, 100000, 13);
  int within = 0;
  for (int t = 0; t < 20; ++t) {
    std::uniform_int_distribution<std::uint32_t> lab(0, 3);
    auto ca = dyadic_chart(static_cast<std::uint8_t>(2 + t % 4));
    auto cb = dyadic_chart(static_cast<std::uint8_t>(1 + (t * 5) % 6));
    std::vector<std::uint32_t> la(ca->size()), lb(cb->size());
    for (auto& l : la) l = lab(rng);
    for (auto& l : lb) l = lab(rng);
    Partition alpha(ca, la, 4), beta(cb, lb, 4);
    auto r = l1_projection_error(alpha, 0, beta);
    EXPECT_NEAR(r.direct, r.closed_form, 1e-12);
    auto mc = l1_projection_error_mc(alpha, 0, beta, pool);
    EXPECT_NEAR(mc.closed_form, r.closed_form, 1e-15);
    if (std::abs(mc.estimate - mc.closed_form) <= 3.0 * mc.stderr_value + 1e-12) ++within;
  }
  EXPECT_GE(within, 19);
}

TEST(LpProjectionError, PEqualsOneMatchesL1) {
  Partition alpha(dyadic_chart(3), {0, 1, 0, 2, 1, 1, 0, 2}, 3);
  Partition beta = make_partition(DoublingMap{}, "dyadic:1");
  for (std::size_t a = 0; a < alpha.size(); ++a) {
    EXPECT_NEAR(lp_projection_error(alpha, a, beta, 1.0), l1_projection_error(alpha, a, beta).closed_form, 1e-14);
    EXPECT_LE(lp_projection_error(alpha, a, beta, 1.0), lp_projection_error(alpha, a, beta, 2.0) + 1e-14);
  }
}

TEST(OrthogonalProject, Examples) {
  auto beta = dyadic(2);
  std::vector<CellFunction> dict;
  for (std::size_t i = 0; i < 2; ++i) dict.push_back(CellFunction::indicator(beta, i));
  CellFunction in_span{beta, Eigen::VectorXcd::Zero(4)};
  in_span.coeffs[0] = cplx(2.0, 1.0);
  in_span.coeffs[1] = -1.0;
  auto p = orthogonal_project(in_span, dict);
  EXPECT_LT(p.residual_norm, 1e-10);
  EXPECT_NEAR(std::abs(p.coeffs[0] - cplx(2.0, 1.0)), 0.0, 1e-12);

  CellFunction orth{beta, Eigen::VectorXcd::Zero(4)};
  orth.coeffs[3] = 1.0;
  auto q = orthogonal_project(orth, dict);
  EXPECT_LT(q.coeffs.norm(), 1e-15);
}

TEST(OrthogonalProject, IndicatorCoefficientsAreCellAverages) {
  std::mt19937_64 rng(21);
  for (int t = 0; t < 20; ++t) {
    auto alpha = dyadic(5);
    std::vector<std::uint32_t> labels(8);
    for (std::size_t i = 0; i < 8; ++i) labels[i] = static_cast<std::uint32_t>(rng() % 3);
    labels[0] = 0, labels[1] = 1, labels[2] = 2;
    auto beta = labelled(dyadic_chart(3), labels, 3);
    auto f = random_function(alpha, rng);
    std::vector<CellFunction> dict;
    for (std::size_t i = 0; i < beta->size(); ++i) dict.push_back(CellFunction::indicator(beta, i));
    auto p = orthogonal_project(f, dict);
    auto e = conditional_expectation(f, beta);
    EXPECT_LT((p.coeffs - e.coeffs).norm(), 1e-10);
    EXPECT_NEAR(p.residual_norm, std::sqrt(std::max(0.0,
                f.norm() * f.norm() - e.norm() * e.norm())), 1e-10);
  }
}

TEST(OrthogonalProject, RankDeficientDictionary) {
  auto beta = dyadic(1);
  auto a = CellFunction::indicator(beta, 0);
  std::vector<CellFunction> dict = {a, a, CellFunction::constant(beta)};
  CellFunction f{beta, Eigen::VectorXcd::Zero(2)};
  f.coeffs[0] = 3.0;
  f.coeffs[1] = 1.0;
  auto p = orthogonal_project(f, dict);
  EXPECT_EQ(p.rank, 2);
  EXPECT_LT(p.residual_norm, 1e-10);
}

TEST(PseudoInverse, RankAndWhitener) {
  Eigen::MatrixXcd g(3, 3);
  g << 2, 1, 1, 1, 1, 0, 1, 0, 1;  // rank 2
  auto pinv = pseudo_inverse(g);
  EXPECT_EQ(pinv.rank, 2);
  EXPECT_LT((g * pinv.matrix * g - g).norm(), 1e-12);
  Eigen::MatrixXcd w = range_whitener(g);
  EXPECT_EQ(w.cols(), 2);
  EXPECT_LT((w.adjoint() * g * w - Eigen::MatrixXcd::Identity(2, 2)).norm(), 1e-12);
}
