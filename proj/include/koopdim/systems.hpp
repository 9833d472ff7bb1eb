#pragma once

#include <complex>
#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace koopdim {

// Reduced fraction with positive denominator. Overflow throws.
struct Rational {
  std::int64_t num = 0;
  std::int64_t den = 1;

  static Rational make(std::int64_t num, std::int64_t den);
  long double value() const { return static_cast<long double>(num) / static_cast<long double>(den); }
  Rational frac() const;  // representative in [0, 1)

  friend Rational operator+(const Rational& a, const Rational& b);
  friend Rational operator-(const Rational& a, const Rational& b);
  friend Rational operator*(const Rational& a, std::int64_t k);
  friend bool operator==(const Rational& a, const Rational& b) = default;
  friend bool operator<(const Rational& a, const Rational& b);
};

// num / 2^level with 0 <= num < 2^level, level <= 63.
struct Dyadic {
  std::uint64_t num = 0;
  std::uint8_t level = 0;

  static Dyadic make(std::uint64_t num, std::uint8_t level);
  double value() const;
  // index of the level-l dyadic interval containing this point
  std::uint64_t interval_index(std::uint8_t l) const;
  friend bool operator==(const Dyadic& a, const Dyadic& b);
};

struct DyadicPair {
  Dyadic x;
  Dyadic y;
  friend bool operator==(const DyadicPair&, const DyadicPair&) = default;
};

// Point on the circle R/Z written as frac(base + turns * step), where step is the
// rotation number of the owning system. Rational steps fold into base (turns stays 0).
struct Angle {
  Rational base;
  std::int64_t turns = 0;
  friend bool operator==(const Angle&, const Angle&) = default;
};

struct AnglePair {
  Angle x;
  Angle y;
  friend bool operator==(const AnglePair&, const AnglePair&) = default;
};

// Finite window of a bilateral symbol sequence: word[i] is coordinate origin + i.
// Sampled points carry a key so coordinates outside the window are generated on demand.
struct SymbolWindow {
  std::int64_t origin = 0;
  std::vector<std::uint8_t> word;
  std::optional<std::uint64_t> key;
  std::int64_t shift = 0;  // total shift applied since sampling, for keyed lookup
  friend bool operator==(const SymbolWindow&, const SymbolWindow&) = default;
};

using Point = std::variant<Dyadic, DyadicPair, SymbolWindow, Angle, AnglePair>;

// Finitely supported vector of l^2(Z): values[i] is the coordinate first + i.
struct ShiftVector {
  std::int64_t first = 0;
  std::vector<std::complex<double>> values;

  static ShiftVector unit(std::int64_t index);
  std::complex<double> at(std::int64_t index) const;
  std::int64_t last() const { return first + static_cast<std::int64_t>(values.size()) - 1; }
};

// Rotation number; irrational values are kept symbolic through Angle::turns.
class RotationNumber {
 public:
  static RotationNumber golden();           // (sqrt(5) - 1) / 2
  static RotationNumber rational(Rational r);
  RotationNumber halved() const;

  bool is_rational() const { return rational_.has_value(); }
  long double value() const { return value_; }
  const std::optional<Rational>& exact() const { return rational_; }
  std::string describe() const;

  Angle advance(const Angle& a, std::int64_t k) const;   // a + k * step
  Angle add(const Angle& a, const Angle& b) const;
  Angle scale(const Angle& a, std::int64_t k) const;
  Angle negate(const Angle& a) const { return scale(a, -1); }
  Angle normalize(const Angle& a) const;
  long double position(const Angle& a) const;           // in [0, 1)
  // Exact when the turn counts agree, otherwise decided in extended precision.
  int compare(const Angle& a, const Angle& b) const;
  // Length of the arc [a, b) mod 1, in [0, 1).
  long double arc_length(const Angle& a, const Angle& b) const;

 private:
  RotationNumber(std::optional<Rational> r, long double v, bool golden)
      : rational_(r), value_(v), golden_(golden) {}
  std::optional<Rational> rational_;
  long double value_ = 0.0L;
  bool golden_ = false;
};

// x -> 2x mod 1 on [0, 1) with Lebesgue measure.
struct DoublingMap {};

// (x, y) -> (2x mod 1, (y + floor(2x)) / 2) on the unit square.
struct BakerMap {};

// Bilateral Bernoulli shift (sigma x)_i = x_{i+1}.
class BernoulliShift {
 public:
  explicit BernoulliShift(std::vector<double> weights);
  const std::vector<double>& weights() const { return weights_; }
  std::size_t alphabet() const { return weights_.size(); }
  int symbol(const SymbolWindow& p, std::int64_t coordinate) const;
  int draw(std::uint64_t key, std::int64_t coordinate) const;

 private:
  std::vector<double> weights_;
  std::vector<double> cumulative_;
};

// x -> x + step on the circle.
class CircleRotation {
 public:
  explicit CircleRotation(RotationNumber step) : step_(step) {}
  const RotationNumber& step() const { return step_; }

 private:
  RotationNumber step_;
};

// (x, y) -> (x + angle/2, x + y) in additive torus coordinates, i.e.
// (x, y) -> (e^{i pi angle} x, x y) multiplicatively.
class SkewRotation {
 public:
  explicit SkewRotation(RotationNumber angle) : angle_(angle), step_(angle.halved()) {}
  const RotationNumber& angle() const { return angle_; }
  const RotationNumber& step() const { return step_; }

 private:
  RotationNumber angle_;
  RotationNumber step_;
};

// Unitary U e_j = e_{j+1} on l^2(Z); no point dynamics.
struct BilateralShift {};

using System = std::variant<DoublingMap, BakerMap, BernoulliShift, CircleRotation, SkewRotation,
                            BilateralShift>;

// "doubling" | "baker" | "bernoulli:0.3,0.7" | "rotation:golden" | "rotation:1/4" |
// "skew:golden" | "shift"
System parse_system(const std::string& spec);
std::string describe(const System& system);
bool is_invertible(const System& system);
// Closed-form h_mu(phi) in nats, documented per system.
double known_entropy(const System& system);

Point apply(const System& system, const Point& p, std::int64_t k);
ShiftVector apply(const BilateralShift& shift, const ShiftVector& v, std::int64_t k);

std::vector<Point> sample_measure(const System& system, std::size_t n, std::uint64_t seed);

// Distinguished cells with exact measures.
struct DyadicInterval {
  std::uint8_t level = 0;
  std::uint64_t index = 0;
};
struct DyadicRect {
  std::uint8_t x_level = 0;
  std::uint64_t x_index = 0;
  std::uint8_t y_level = 0;
  std::uint64_t y_index = 0;
};
struct Cylinder {
  std::int64_t start = 0;
  std::vector<std::uint8_t> word;
};
struct Arc {
  Angle from;
  Angle to;  // half-open [from, to) taken counter-clockwise
};
struct TorusRect {
  Arc x;
  Arc y;
};

using CellDescriptor = std::variant<DyadicInterval, DyadicRect, Cylinder, Arc, TorusRect>;

double exact_cell_measure(const System& system, const CellDescriptor& cell);
bool cell_contains(const System& system, const CellDescriptor& cell, const Point& p);
// phi^{-1}(cell) as a disjoint union of cells of the same family.
std::vector<CellDescriptor> cell_preimage(const System& system, const CellDescriptor& cell);

}  // namespace koopdim
