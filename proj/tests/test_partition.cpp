#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <random>

#include "koopdim/error.hpp"
#include "koopdim/partition.hpp"

using namespace koopdim;

namespace {

Partition random_partition(std::shared_ptr<const AtomChart> chart, std::uint32_t k, std::mt19937_64& rng) {
  std::uniform_int_distribution<std::uint32_t> pick(0, k - 1);
  std::vector<std::uint32_t> labels(chart->size());
  for (auto& l : labels) l = pick(rng);
  return Partition(chart, labels, k);
}

double sum(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s;
}

// Itinerary oracle: points share a refinement cell iff their alpha-labels agree along k < depth.
void expect_itinerary_bijection(const System& s, const Partition& alpha, const Partition& refined, std::size_t depth) {
  std::map<std::vector<std::size_t>, std::size_t> seen;
  std::map<std::size_t, std::vector<std::size_t>> back;
  for (const auto& p : sample_measure(s, 2000, 17)) {
    std::vector<std::size_t> word;
    for (std::size_t k = 0; k < depth; ++k) word.push_back(alpha.label(apply(s, p, static_cast<std::int64_t>(k))));
    std::size_t cell = refined.label(p);
    auto [it, fresh] = seen.emplace(word, cell);
    EXPECT_EQ(it->second, cell);
    auto [jt, fresh2] = back.emplace(cell, word);
    EXPECT_EQ(jt->second, word);
  }
}

}  // namespace

TEST(StaticEntropy, Examples) {
  std::vector<double> u = {0.25, 0.25, 0.25, 0.25};
  EXPECT_NEAR(static_entropy(u), std::log(4.0), 1e-15);
  std::vector<double> one = {1.0};
  EXPECT_EQ(static_entropy(one), 0.0);
  std::vector<double> with_zero = {0.5, 0.5, 0.0};
  EXPECT_NEAR(static_entropy(with_zero), std::log(2.0), 1e-15);
}

TEST(StaticEntropy, Errors) {
  std::vector<double> neg = {1.2, -0.2};
  std::vector<double> short_sum = {0.5, 0.4};
  try {
    static_entropy(neg);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::NegativeWeight);
  }
  try {
    static_entropy(short_sum);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::SumNotOne);
  }
}

TEST(ConditionalEntropy, TrivialConditioner) {
  System s = DoublingMap{};
  Partition alpha = make_partition(s, "dyadic:3");
  Partition trivial = make_partition(s, "dyadic:0");
  EXPECT_NEAR(conditional_entropy(alpha, trivial), entropy(alpha), 1e-14);
  EXPECT_NEAR(conditional_entropy(alpha, alpha), 0.0, 1e-15);
}

TEST(ConditionalEntropy, IndependentCylinders) {
  BernoulliShift b({0.3, 0.7});
  Partition alpha(cylinder_chart(b, 0, 1));
  Partition beta(cylinder_chart(b, 1, 2));
  EXPECT_NEAR(conditional_entropy(alpha, beta), entropy(alpha), 1e-14);
  EXPECT_NEAR(entropy(alpha), -0.3 * std::log(0.3) - 0.7 * std::log(0.7), 1e-15);
}

TEST(ConditionalEntropy, SystemMismatch) {
  Partition a = make_partition(DoublingMap{}, "dyadic:2");
  Partition b = make_partition(BakerMap{}, "grid:1,1");
  try {
    refine(a, b);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::SystemMismatch);
  }
}

TEST(Refine, MonotoneAndConserving) {
  std::mt19937_64 rng(2);
  for (int t = 0; t < 30; ++t) {
    Partition a = random_partition(dyadic_chart(static_cast<std::uint8_t>(1 + t % 5)), 3, rng);
    Partition b = random_partition(dyadic_chart(static_cast<std::uint8_t>(1 + (t * 7) % 6)), 4, rng);
    Partition ab = refine(a, b);
    EXPECT_NEAR(sum(ab.measures()), 1.0, 1e-12);
    EXPECT_GE(entropy(ab) + 1e-12, entropy(b));
    EXPECT_GE(conditional_entropy(a, b), 0.0);
    EXPECT_NEAR(conditional_entropy(a, b), entropy(ab) - entropy(b), 1e-12);
  }
}

TEST(DynamicalRefinement, DoublingLevelOneDepthThree) {
  System s = DoublingMap{};
  Partition alpha = make_partition(s, "dyadic:1");
  Partition r = dynamical_refinement(s, alpha, 3);
  ASSERT_EQ(r.size(), 8u);
  for (double m : r.measures()) EXPECT_DOUBLE_EQ(m, 0.125);
  // preimage enumeration: the level-3 interval i has itinerary given by the binary digits of i
  for (std::uint64_t i = 0; i < 8; ++i) {
    for (std::uint64_t j = 0; j < 8; ++j) {
      bool same = r.label(Dyadic::make(i, 3)) == r.label(Dyadic::make(j, 3));
      EXPECT_EQ(same, i == j);
    }
  }
  expect_itinerary_bijection(s, alpha, r, 3);
}

TEST(DynamicalRefinement, DepthOneIsAlpha) {
  for (auto [sys, spec] : std::vector<std::pair<const char*, const char*>>{
           {"doubling", "dyadic:2"}, {"baker", "grid:1,2"}, {"bernoulli:0.3,0.7", "cylinder:1"}, {"rotation:golden", "arcs:3"}}) {
    System s = parse_system(sys);
    Partition alpha = make_partition(s, spec);
    Partition r = dynamical_refinement(s, alpha, 1);
    ASSERT_EQ(r.size(), alpha.size());
    for (const auto& p : sample_measure(s, 200, 4)) {
      EXPECT_NEAR(r.measure(r.label(p)), alpha.measure(alpha.label(p)), 1e-15) << sys;
    }
  }
}

TEST(DynamicalRefinement, ItineraryOracleAcrossSystems) {
  for (auto [sys, spec, depth] : std::vector<std::tuple<const char*, const char*, std::size_t>>{
           {"doubling", "dyadic:2", 4}, {"baker", "grid:1,1", 4}, {"bernoulli:0.3,0.7", "cylinder:1", 5},
           {"rotation:golden", "arcs:2", 6}, {"skew:golden", "arcs:3", 4}}) {
    System s = parse_system(sys);
    Partition alpha = make_partition(s, spec);
    expect_itinerary_bijection(s, alpha, dynamical_refinement(s, alpha, depth), depth);
  }
}

TEST(DynamicalRefinement, BernoulliProductMeasures) {
  System s = parse_system("bernoulli:0.3,0.7");
  Partition r = dynamical_refinement(s, make_partition(s, "cylinder:1"), 4);
  std::vector<double> got(r.measures().begin(), r.measures().end());
  std::vector<double> want;
  for (int w = 0; w < 16; ++w) {
    double m = 1.0;
    for (int b = 0; b < 4; ++b) m *= (w >> b) & 1 ? 0.7 : 0.3;
    want.push_back(m);
  }
  std::sort(got.begin(), got.end());
  std::sort(want.begin(), want.end());
  ASSERT_EQ(got.size(), want.size());
  for (std::size_t i = 0; i < got.size(); ++i) EXPECT_NEAR(got[i], want[i], 1e-15);
}

TEST(DynamicalRefinement, RotationCellCount) {
  System s = parse_system("rotation:golden");
  Partition alpha = make_partition(s, "arcs:2");
  Partition r = dynamical_refinement(s, alpha, 10);
  EXPECT_LE(r.size(), 20u);
  EXPECT_GE(r.size(), 11u);
  EXPECT_NEAR(sum(r.measures()), 1.0, 1e-12);
}

TEST(DynamicalRefinement, BudgetExceeded) {
  System s = DoublingMap{};
  try {
    dynamical_refinement(s, make_partition(s, "dyadic:1"), 30, 1000);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::BudgetExceeded);
  }
}

TEST(EntropyRate, DoublingAndBernoulli) {
  System d = DoublingMap{};
  for (const auto& e : entropy_rate(d, make_partition(d, "dyadic:1"), 12)) EXPECT_NEAR(e.value, std::log(2.0), 1e-12);
  System b = parse_system("bernoulli:0.3,0.7");
  for (const auto& e : entropy_rate(b, make_partition(b, "cylinder:1"), 12)) EXPECT_NEAR(e.value, 0.610864302054893, 1e-12);
}

TEST(EntropyRate, RotationEndpointBound) {
  System s = parse_system("rotation:golden");
  auto rates = entropy_rate(s, make_partition(s, "arcs:2"), 12);
  for (const auto& e : rates) {
    double n = static_cast<double>(e.n_used);
    EXPECT_LE(e.value, std::log(2.0 * n) / n + 1e-12);
  }
}

TEST(EntropyRate, Subadditivity) {
  for (auto [sys, spec] : std::vector<std::pair<const char*, const char*>>{
           {"doubling", "dyadic:1"}, {"baker", "grid:1,1"}, {"bernoulli:0.3,0.7", "cylinder:1"},
           {"rotation:golden", "arcs:3"}, {"rotation:1/4", "arcs:2"}, {"skew:golden", "arcs:2"}}) {
    System s = parse_system(sys);
    auto rates = entropy_rate(s, make_partition(s, spec), 16);
    auto H = [&](std::size_t n) { return rates[n - 1].joint_entropy; };
    for (std::size_t n = 1; n <= 8; ++n)
      for (std::size_t m = 1; m <= 8; ++m) EXPECT_LE(H(n + m), H(n) + H(m) + 1e-10) << sys;
  }
}

TEST(EntropyRate, MonteCarloAgreesWithExact) {
  System s = DoublingMap{};
  Partition alpha = make_partition(s, "dyadic:1");
  auto pool = sample_measure(s, 100000, 77);
  auto exact = entropy_rate(s, alpha, 6);
  for (std::size_t n = 1; n <= 6; ++n) {
    EntropyEstimate mc = monte_carlo_entropy(s, alpha, n, pool);
    EXPECT_GT(mc.stderr_nats, 0.0);
    EXPECT_LE(std::abs(mc.value - exact[n - 1].value), 3.0 * mc.stderr_nats) << n;
  }
}

TEST(Partition, DropsZeroMeasureCells) {
  auto chart = dyadic_chart(2);
  Partition p(chart, {0, 0, 2, 2}, 3);
  EXPECT_EQ(p.size(), 2u);
  EXPECT_EQ(p.combinatorial_count(), 3u);
  EXPECT_NEAR(sum(p.measures()), 1.0, 1e-15);
}

TEST(Partition, EstimatedMeasuresWithinErrors) {
  System s = BakerMap{};
  Partition p = make_partition(s, "grid:2,1");
  auto pool = sample_measure(s, 50000, 3);
  Partition est = p.with_estimated_measures(pool, 3);
  EXPECT_EQ(est.provenance(), MeasureProvenance::MonteCarlo);
  double total = 0.0;
  for (std::size_t i = 0; i < est.size(); ++i) {
    total += est.measure(i);
    EXPECT_LE(std::abs(est.measure(i) - p.measure(i)), 3.0 * est.standard_errors()[i] + 1e-12);
  }
  EXPECT_NEAR(total, 1.0, 1e-12);
}

TEST(MakePartition, Errors) {
  EXPECT_THROW(make_partition(DoublingMap{}, "dyadic:x"), Error);
  EXPECT_THROW(make_partition(DoublingMap{}, "arcs:3"), Error);
  EXPECT_THROW(make_partition(parse_system("rotation:golden"), "arcs:0"), Error);
}

TEST(MakePartition, SkewGridOnlyAtDepthOne) {
  System s = parse_system("skew:golden");
  Partition g = make_partition(s, "grid:2,2");
  EXPECT_EQ(g.size(), 4u);
  try {
    dynamical_refinement(s, g, 2);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::UnsupportedCellFamily);
  }
}
