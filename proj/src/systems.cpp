#include "koopdim/systems.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <sstream>

#include "koopdim/error.hpp"

namespace koopdim {

namespace {

using i128 = __int128;

constexpr long double kGolden = 0.6180339887498948482045868343656381177L;

std::int64_t narrow(i128 v) {
  if (v > INT64_MAX || v < INT64_MIN) {
    throw Error(ErrorCode::InvalidArgument, "rational arithmetic overflow");
  }
  return static_cast<std::int64_t>(v);
}

i128 gcd128(i128 a, i128 b) {
  if (a < 0) a = -a;
  if (b < 0) b = -b;
  while (b != 0) {
    i128 t = a % b;
    a = b;
    b = t;
  }
  return a;
}

Rational reduce(i128 num, i128 den) {
  if (den == 0) throw Error(ErrorCode::InvalidArgument, "zero denominator");
  if (den < 0) {
    num = -num;
    den = -den;
  }
  i128 g = gcd128(num, den);
  if (g > 1) {
    num /= g;
    den /= g;
  }
  return Rational{narrow(num), narrow(den)};
}

// frac of num/den computed before narrowing, so large intermediate products survive.
Rational reduce_frac(i128 num, i128 den) {
  if (den < 0) {
    num = -num;
    den = -den;
  }
  num %= den;
  if (num < 0) num += den;
  return reduce(num, den);
}

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

long double frac_ld(long double v) {
  long double f = v - std::floor(v);
  if (f >= 1.0L) f -= 1.0L;
  return f;
}

Dyadic lowest_terms(Dyadic d) {
  while (d.level > 0 && (d.num & 1U) == 0) {
    d.num >>= 1;
    --d.level;
  }
  return d;
}

std::uint64_t mask(std::uint8_t level) {
  return level >= 64 ? ~0ULL : ((1ULL << level) - 1ULL);
}

Dyadic doubling_step(Dyadic x) {
  return lowest_terms(Dyadic{(x.num << 1) & mask(x.level), x.level});
}

int top_bit(const Dyadic& x) { return x.level == 0 ? 0 : static_cast<int>((x.num >> (x.level - 1)) & 1U); }

Dyadic halve_plus(Dyadic y, int bit) {
  if (y.level >= 63) {
    throw Error(ErrorCode::InvalidArgument, "dyadic precision exhausted (level 63)");
  }
  Dyadic out{y.num + (static_cast<std::uint64_t>(bit) << y.level), static_cast<std::uint8_t>(y.level + 1)};
  return lowest_terms(out);
}

DyadicPair baker_forward(const DyadicPair& p) {
  int b = top_bit(p.x);
  return DyadicPair{doubling_step(p.x), halve_plus(p.y, b)};
}

DyadicPair baker_backward(const DyadicPair& p) {
  int c = top_bit(p.y);
  return DyadicPair{halve_plus(p.x, c), doubling_step(p.y)};
}

std::string format_weights(const std::vector<double>& w) {
  std::ostringstream os;
  os.precision(17);
  for (std::size_t i = 0; i < w.size(); ++i) os << (i ? "," : "") << w[i];
  return os.str();
}

RotationNumber parse_rotation_number(const std::string& s, const std::string& field) {
  if (s == "golden") return RotationNumber::golden();
  auto slash = s.find('/');
  if (slash == std::string::npos) {
    throw Error(ErrorCode::ConfigParse, "system: " + field + " angle must be 'golden' or p/q, got '" + s + "'");
  }
  try {
    std::size_t used = 0;
    std::int64_t p = std::stoll(s.substr(0, slash), &used);
    if (used != slash) throw std::invalid_argument(s);
    std::int64_t q = std::stoll(s.substr(slash + 1), &used);
    if (used != s.size() - slash - 1 || q <= 0) throw std::invalid_argument(s);
    return RotationNumber::rational(Rational::make(p, q));
  } catch (const std::logic_error&) {
    throw Error(ErrorCode::ConfigParse, "system: malformed " + field + " angle '" + s + "'");
  }
}

}  // namespace

// ---------------------------------------------------------------- Rational

Rational Rational::make(std::int64_t num, std::int64_t den) { return reduce(num, den); }

Rational Rational::frac() const { return reduce_frac(num, den); }

Rational operator+(const Rational& a, const Rational& b) {
  return reduce(static_cast<i128>(a.num) * b.den + static_cast<i128>(b.num) * a.den,
                static_cast<i128>(a.den) * b.den);
}

Rational operator-(const Rational& a, const Rational& b) {
  return reduce(static_cast<i128>(a.num) * b.den - static_cast<i128>(b.num) * a.den,
                static_cast<i128>(a.den) * b.den);
}

Rational operator*(const Rational& a, std::int64_t k) { return reduce(static_cast<i128>(a.num) * k, a.den); }

bool operator<(const Rational& a, const Rational& b) {
  return static_cast<i128>(a.num) * b.den < static_cast<i128>(b.num) * a.den;
}

// ---------------------------------------------------------------- Dyadic

Dyadic Dyadic::make(std::uint64_t num, std::uint8_t level) {
  if (level > 63 || num > mask(level)) {
    throw Error(ErrorCode::InvalidArgument, "dyadic numerator out of [0, 2^level)");
  }
  return Dyadic{num, level};
}

double Dyadic::value() const { return std::ldexp(static_cast<double>(num), -static_cast<int>(level)); }

std::uint64_t Dyadic::interval_index(std::uint8_t l) const {
  if (l <= level) return num >> (level - l);
  return num << (l - level);
}

bool operator==(const Dyadic& a, const Dyadic& b) {
  Dyadic la = lowest_terms(a);
  Dyadic lb = lowest_terms(b);
  return la.num == lb.num && la.level == lb.level;
}

ShiftVector ShiftVector::unit(std::int64_t index) { return ShiftVector{index, {1.0}}; }

std::complex<double> ShiftVector::at(std::int64_t index) const {
  if (index < first || index > last()) return {0.0, 0.0};
  return values[static_cast<std::size_t>(index - first)];
}

// ---------------------------------------------------------------- RotationNumber

RotationNumber RotationNumber::golden() { return RotationNumber(std::nullopt, kGolden, true); }

RotationNumber RotationNumber::rational(Rational r) {
  Rational f = r.frac();
  return RotationNumber(f, f.value(), false);
}

RotationNumber RotationNumber::halved() const {
  if (rational_) return RotationNumber(reduce(rational_->num, static_cast<i128>(rational_->den) * 2), value_ / 2, false);
  return RotationNumber(std::nullopt, value_ / 2, golden_);
}

std::string RotationNumber::describe() const {
  if (rational_) return std::to_string(rational_->num) + "/" + std::to_string(rational_->den);
  if (golden_) return value_ == kGolden ? "golden" : "golden/2";
  std::ostringstream os;
  os.precision(21);
  os << value_;
  return os.str();
}

Angle RotationNumber::normalize(const Angle& a) const {
  if (rational_) {
    Rational shifted = a.base + (*rational_) * a.turns;
    return Angle{shifted.frac(), 0};
  }
  return Angle{a.base.frac(), a.turns};
}

Angle RotationNumber::advance(const Angle& a, std::int64_t k) const {
  return normalize(Angle{a.base, a.turns + k});
}

Angle RotationNumber::add(const Angle& a, const Angle& b) const {
  return normalize(Angle{a.base + b.base, a.turns + b.turns});
}

Angle RotationNumber::scale(const Angle& a, std::int64_t k) const {
  Angle n = normalize(a);
  Rational base = reduce_frac(static_cast<i128>(n.base.num) * k, n.base.den);
  return normalize(Angle{base, n.turns * k});
}

long double RotationNumber::position(const Angle& a) const {
  Angle n = normalize(a);
  long double turn_part = frac_ld(static_cast<long double>(n.turns) * value_);
  return frac_ld(n.base.value() + turn_part);
}

int RotationNumber::compare(const Angle& a, const Angle& b) const {
  Angle na = normalize(a);
  Angle nb = normalize(b);
  if (na.turns == nb.turns) {
    if (na.base == nb.base) return 0;
    long double pa = position(na);
    long double d = (nb.base - na.base).frac().value();
    return pa + d < 1.0L ? -1 : 1;
  }
  long double pa = position(na);
  long double pb = position(nb);
  if (pa == pb) {
    throw Error(ErrorCode::InvalidArgument, "angle comparison below extended precision");
  }
  return pa < pb ? -1 : 1;
}

long double RotationNumber::arc_length(const Angle& a, const Angle& b) const {
  Angle na = normalize(a);
  Angle nb = normalize(b);
  if (na.turns == nb.turns) return (nb.base - na.base).frac().value();
  return frac_ld(position(nb) - position(na));
}

// ---------------------------------------------------------------- Bernoulli

BernoulliShift::BernoulliShift(std::vector<double> weights) : weights_(std::move(weights)) {
  if (weights_.size() < 2 || weights_.size() > 255) {
    throw Error(ErrorCode::InvalidArgument, "bernoulli alphabet must have 2..255 symbols");
  }
  double sum = 0.0;
  for (double w : weights_) {
    if (!(w >= 0.0)) throw Error(ErrorCode::NegativeWeight, "bernoulli weight " + std::to_string(w));
    sum += w;
  }
  if (std::abs(sum - 1.0) > 1e-12) throw Error(ErrorCode::SumNotOne, "bernoulli weights sum to " + std::to_string(sum));
  cumulative_.resize(weights_.size());
  std::partial_sum(weights_.begin(), weights_.end(), cumulative_.begin());
  cumulative_.back() = 1.0;
}

int BernoulliShift::draw(std::uint64_t key, std::int64_t coordinate) const {
  std::uint64_t h = splitmix64(key ^ splitmix64(static_cast<std::uint64_t>(coordinate)));
  double u = static_cast<double>(h >> 11) * 0x1.0p-53;
  auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), u);
  return static_cast<int>(std::min<std::size_t>(it - cumulative_.begin(), weights_.size() - 1));
}

int BernoulliShift::symbol(const SymbolWindow& p, std::int64_t coordinate) const {
  std::int64_t idx = coordinate - p.origin;
  if (idx >= 0 && idx < static_cast<std::int64_t>(p.word.size())) return p.word[static_cast<std::size_t>(idx)];
  if (p.key) return draw(*p.key, coordinate + p.shift);
  throw Error(ErrorCode::WindowExhausted, "coordinate " + std::to_string(coordinate) + " outside symbol window");
}

// ---------------------------------------------------------------- System queries

System parse_system(const std::string& spec) {
  auto colon = spec.find(':');
  std::string head = spec.substr(0, colon);
  std::string arg = colon == std::string::npos ? "" : spec.substr(colon + 1);
  if (head == "doubling" && arg.empty()) return DoublingMap{};
  if (head == "baker" && arg.empty()) return BakerMap{};
  if (head == "shift" && arg.empty()) return BilateralShift{};
  if (head == "bernoulli") {
    std::vector<double> w;
    std::stringstream ss(arg);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
      try {
        std::size_t used = 0;
        w.push_back(std::stod(tok, &used));
        if (used != tok.size()) throw std::invalid_argument(tok);
      } catch (const std::logic_error&) {
        throw Error(ErrorCode::ConfigParse, "system: malformed bernoulli weight '" + tok + "'");
      }
    }
    if (w.size() < 2) throw Error(ErrorCode::ConfigParse, "system: bernoulli needs at least two weights");
    return BernoulliShift(std::move(w));
  }
  if (head == "rotation" && !arg.empty()) return CircleRotation(parse_rotation_number(arg, "rotation"));
  if (head == "skew" && !arg.empty()) return SkewRotation(parse_rotation_number(arg, "skew"));
  throw Error(ErrorCode::ConfigParse, "system: unknown system '" + spec + "'");
}

std::string describe(const System& system) {
  return std::visit(
      [](const auto& s) -> std::string {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, DoublingMap>) return "doubling";
        else if constexpr (std::is_same_v<T, BakerMap>) return "baker";
        else if constexpr (std::is_same_v<T, BernoulliShift>) return "bernoulli:" + format_weights(s.weights());
        else if constexpr (std::is_same_v<T, CircleRotation>) return "rotation:" + s.step().describe();
        else if constexpr (std::is_same_v<T, SkewRotation>) return "skew:" + s.angle().describe();
        else return "shift";
      },
      system);
}

bool is_invertible(const System& system) { return !std::holds_alternative<DoublingMap>(system); }

double known_entropy(const System& system) {
  return std::visit(
      [](const auto& s) -> double {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, DoublingMap> || std::is_same_v<T, BakerMap>) return std::log(2.0);
        else if constexpr (std::is_same_v<T, BernoulliShift>) {
          double h = 0.0;
          for (double w : s.weights())
            if (w > 0.0) h -= w * std::log(w);
          return h;
        } else if constexpr (std::is_same_v<T, CircleRotation> || std::is_same_v<T, SkewRotation>) return 0.0;
        else return std::nan("");
      },
      system);
}

// ---------------------------------------------------------------- Dynamics

namespace {

template <class Expected>
const Expected& point_as(const Point& p, const char* system) {
  if (const auto* q = std::get_if<Expected>(&p)) return *q;
  throw Error(ErrorCode::RepresentationMismatch, std::string("point type does not match system ") + system);
}

}  // namespace

Point apply(const System& system, const Point& p, std::int64_t k) {
  if (k < 0 && !is_invertible(system)) {
    throw Error(ErrorCode::NegativePowerOnNonInvertible, describe(system) + " raised to power " + std::to_string(k));
  }
  return std::visit(
      [&](const auto& s) -> Point {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, DoublingMap>) {
          Dyadic x = point_as<Dyadic>(p, "doubling");
          if (k >= x.level) return Dyadic{0, 0};
          return lowest_terms(Dyadic{(x.num << k) & mask(x.level), x.level});
        } else if constexpr (std::is_same_v<T, BakerMap>) {
          DyadicPair q = point_as<DyadicPair>(p, "baker");
          for (std::int64_t i = 0; i < k; ++i) q = baker_forward(q);
          for (std::int64_t i = 0; i > k; --i) q = baker_backward(q);
          return q;
        } else if constexpr (std::is_same_v<T, BernoulliShift>) {
          SymbolWindow w = point_as<SymbolWindow>(p, "bernoulli");
          w.origin -= k;
          w.shift += k;
          return w;
        } else if constexpr (std::is_same_v<T, CircleRotation>) {
          return s.step().advance(point_as<Angle>(p, "rotation"), k);
        } else if constexpr (std::is_same_v<T, SkewRotation>) {
          // phi^k(x, y) = (x + k s, y + k x + k(k-1)/2 s) with s = angle / 2
          const AnglePair& q = point_as<AnglePair>(p, "skew");
          const RotationNumber& st = s.step();
          Angle x = st.advance(q.x, k);
          Angle y = st.add(q.y, st.scale(q.x, k));
          std::int64_t tri = static_cast<std::int64_t>((static_cast<i128>(k) * (k - 1)) / 2);
          y = st.advance(y, tri);
          return AnglePair{x, y};
        } else {
          throw Error(ErrorCode::UnsupportedOperation, "shift acts on coordinate vectors, not points");
        }
      },
      system);
}

ShiftVector apply(const BilateralShift&, const ShiftVector& v, std::int64_t k) {
  ShiftVector out = v;
  out.first += k;
  return out;
}

std::vector<Point> sample_measure(const System& system, std::size_t n, std::uint64_t seed) {
  if (n == 0) throw Error(ErrorCode::InvalidArgument, "sample count must be >= 1");
  std::mt19937_64 rng(seed);
  std::vector<Point> out;
  out.reserve(n);
  auto uniform_angle = [&]() {
    return Angle{Rational::make(static_cast<std::int64_t>(rng() >> 11), std::int64_t{1} << 53), 0};
  };
  std::visit(
      [&](const auto& s) {
        using T = std::decay_t<decltype(s)>;
        for (std::size_t i = 0; i < n; ++i) {
          if constexpr (std::is_same_v<T, DoublingMap>) {
            out.emplace_back(lowest_terms(Dyadic{rng() >> 2, 62}));
          } else if constexpr (std::is_same_v<T, BakerMap>) {
            // 31 bits per coordinate keeps 32 forward or backward iterates representable
            Dyadic x = lowest_terms(Dyadic{rng() >> 33, 31});
            Dyadic y = lowest_terms(Dyadic{rng() >> 33, 31});
            out.emplace_back(DyadicPair{x, y});
          } else if constexpr (std::is_same_v<T, BernoulliShift>) {
            out.emplace_back(SymbolWindow{0, {}, rng(), 0});
          } else if constexpr (std::is_same_v<T, CircleRotation>) {
            out.emplace_back(uniform_angle());
          } else if constexpr (std::is_same_v<T, SkewRotation>) {
            Angle x = uniform_angle();
            Angle y = uniform_angle();
            out.emplace_back(AnglePair{x, y});
          } else {
            throw Error(ErrorCode::UnsupportedOperation, "shift has no invariant probability measure to sample");
          }
        }
      },
      system);
  return out;
}

// ---------------------------------------------------------------- Cells

namespace {

bool arc_contains(const RotationNumber& st, const Arc& arc, const Angle& p) {
  int ab = st.compare(arc.from, arc.to);
  if (ab == 0) return false;
  int ap = st.compare(arc.from, p);
  int pb = st.compare(p, arc.to);
  if (ab < 0) return ap <= 0 && pb < 0;
  return ap <= 0 || pb < 0;
}

[[noreturn]] void unsupported(const System& system, const char* family) {
  throw Error(ErrorCode::UnsupportedCellFamily, std::string(family) + " cells on " + describe(system));
}

}  // namespace

double exact_cell_measure(const System& system, const CellDescriptor& cell) {
  return std::visit(
      [&](const auto& c) -> double {
        using C = std::decay_t<decltype(c)>;
        if constexpr (std::is_same_v<C, DyadicInterval>) {
          if (!std::holds_alternative<DoublingMap>(system)) unsupported(system, "dyadic interval");
          return std::ldexp(1.0, -static_cast<int>(c.level));
        } else if constexpr (std::is_same_v<C, DyadicRect>) {
          if (!std::holds_alternative<BakerMap>(system)) unsupported(system, "dyadic rectangle");
          return std::ldexp(1.0, -static_cast<int>(c.x_level) - static_cast<int>(c.y_level));
        } else if constexpr (std::is_same_v<C, Cylinder>) {
          const auto* b = std::get_if<BernoulliShift>(&system);
          if (!b) unsupported(system, "cylinder");
          double m = 1.0;
          for (auto s : c.word) {
            if (s >= b->alphabet()) throw Error(ErrorCode::InvalidArgument, "cylinder symbol outside alphabet");
            m *= b->weights()[s];
          }
          return m;
        } else if constexpr (std::is_same_v<C, Arc>) {
          const auto* r = std::get_if<CircleRotation>(&system);
          if (!r) unsupported(system, "arc");
          return static_cast<double>(r->step().arc_length(c.from, c.to));
        } else {
          const auto* sk = std::get_if<SkewRotation>(&system);
          if (!sk) unsupported(system, "torus rectangle");
          return static_cast<double>(sk->step().arc_length(c.x.from, c.x.to) * sk->step().arc_length(c.y.from, c.y.to));
        }
      },
      cell);
}

bool cell_contains(const System& system, const CellDescriptor& cell, const Point& p) {
  return std::visit(
      [&](const auto& c) -> bool {
        using C = std::decay_t<decltype(c)>;
        if constexpr (std::is_same_v<C, DyadicInterval>) {
          return point_as<Dyadic>(p, "doubling").interval_index(c.level) == c.index;
        } else if constexpr (std::is_same_v<C, DyadicRect>) {
          const auto& q = point_as<DyadicPair>(p, "baker");
          return q.x.interval_index(c.x_level) == c.x_index && q.y.interval_index(c.y_level) == c.y_index;
        } else if constexpr (std::is_same_v<C, Cylinder>) {
          const auto* b = std::get_if<BernoulliShift>(&system);
          if (!b) unsupported(system, "cylinder");
          const auto& w = point_as<SymbolWindow>(p, "bernoulli");
          for (std::size_t i = 0; i < c.word.size(); ++i)
            if (b->symbol(w, c.start + static_cast<std::int64_t>(i)) != c.word[i]) return false;
          return true;
        } else if constexpr (std::is_same_v<C, Arc>) {
          const auto* r = std::get_if<CircleRotation>(&system);
          if (!r) unsupported(system, "arc");
          return arc_contains(r->step(), c, point_as<Angle>(p, "rotation"));
        } else {
          const auto* sk = std::get_if<SkewRotation>(&system);
          if (!sk) unsupported(system, "torus rectangle");
          const auto& q = point_as<AnglePair>(p, "skew");
          return arc_contains(sk->step(), c.x, q.x) && arc_contains(sk->step(), c.y, q.y);
        }
      },
      cell);
}

std::vector<CellDescriptor> cell_preimage(const System& system, const CellDescriptor& cell) {
  exact_cell_measure(system, cell);  // validates the family
  return std::visit(
      [&](const auto& c) -> std::vector<CellDescriptor> {
        using C = std::decay_t<decltype(c)>;
        if constexpr (std::is_same_v<C, DyadicInterval>) {
          if (c.level >= 63) throw Error(ErrorCode::InvalidArgument, "dyadic level overflow");
          auto l = static_cast<std::uint8_t>(c.level + 1);
          return {DyadicInterval{l, c.index}, DyadicInterval{l, c.index + (1ULL << c.level)}};
        } else if constexpr (std::is_same_v<C, DyadicRect>) {
          auto lx = static_cast<std::uint8_t>(c.x_level + 1);
          std::uint64_t right = c.x_index + (1ULL << c.x_level);
          if (c.y_level == 0) {
            return {DyadicRect{lx, c.x_index, 0, 0}, DyadicRect{lx, right, 0, 0}};
          }
          auto ly = static_cast<std::uint8_t>(c.y_level - 1);
          std::uint64_t half = 1ULL << ly;
          if (c.y_index < half) return {DyadicRect{lx, c.x_index, ly, c.y_index}};
          return {DyadicRect{lx, right, ly, c.y_index - half}};
        } else if constexpr (std::is_same_v<C, Cylinder>) {
          return {Cylinder{c.start + 1, c.word}};
        } else if constexpr (std::is_same_v<C, Arc>) {
          const auto& st = std::get<CircleRotation>(system).step();
          return {Arc{st.advance(c.from, -1), st.advance(c.to, -1)}};
        } else {
          // the shear (x, y) -> (x + s, x + y) does not map rectangles to rectangles
          unsupported(system, "torus rectangle preimage");
        }
      },
      cell);
}

}  // namespace koopdim
