#include "koopdim/partition.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <unordered_map>

#include "koopdim/error.hpp"

namespace koopdim {

namespace {

void check_budget(double atoms, std::size_t budget, const std::string& what) {
  if (atoms > static_cast<double>(budget)) {
    throw Error(ErrorCode::BudgetExceeded, what + " needs " + std::to_string(static_cast<long long>(atoms)) +
                                               " atoms, budget is " + std::to_string(budget));
  }
}

void require_same_system(const System& a, const System& b) {
  if (describe(a) != describe(b)) {
    throw Error(ErrorCode::SystemMismatch, describe(a) + " vs " + describe(b));
  }
}

std::uint8_t level_add(std::uint8_t level, std::size_t extra) {
  std::size_t l = level + extra;
  if (l > 62) throw Error(ErrorCode::BudgetExceeded, "dyadic level " + std::to_string(l) + " beyond 62");
  return static_cast<std::uint8_t>(l);
}

// ------------------------------------------------------------------ dyadic intervals

class DyadicChart final : public AtomChart {
 public:
  explicit DyadicChart(std::uint8_t level) : level_(level) {}

  const System& system() const override { return system_; }
  std::string describe() const override { return "dyadic:" + std::to_string(level_); }
  std::size_t size() const override { return std::size_t{1} << level_; }
  double measure(std::size_t) const override { return std::ldexp(1.0, -static_cast<int>(level_)); }
  Point representative(std::size_t atom) const override { return Dyadic{atom, level_}; }
  std::size_t locate(const Point& p) const override {
    const auto* d = std::get_if<Dyadic>(&p);
    if (!d) throw Error(ErrorCode::RepresentationMismatch, "dyadic chart expects a dyadic point");
    return d->interval_index(level_);
  }
  std::shared_ptr<const AtomChart> common_refinement(const AtomChart& other, std::size_t budget) const override {
    const auto* o = dynamic_cast<const DyadicChart*>(&other);
    if (!o) throw Error(ErrorCode::SystemMismatch, describe() + " vs " + other.describe());
    return dyadic_chart(std::max(level_, o->level_), budget);
  }
  std::shared_ptr<const AtomChart> deepen(std::size_t depth, std::size_t budget) const override {
    if (depth == 0) throw Error(ErrorCode::InvalidArgument, "depth must be >= 1");
    return dyadic_chart(level_add(level_, depth - 1), budget);
  }
  double deepened_size(std::size_t depth) const override {
    return std::ldexp(1.0, static_cast<int>(level_ + depth - 1));
  }

 private:
  std::uint8_t level_;
  System system_ = DoublingMap{};
};

// ------------------------------------------------------------------ dyadic grid (baker)

class DyadicGridChart final : public AtomChart {
 public:
  DyadicGridChart(std::uint8_t lx, std::uint8_t ly) : lx_(lx), ly_(ly) {}

  const System& system() const override { return system_; }
  std::string describe() const override { return "grid:" + std::to_string(lx_) + "," + std::to_string(ly_); }
  std::size_t size() const override { return std::size_t{1} << (lx_ + ly_); }
  double measure(std::size_t) const override { return std::ldexp(1.0, -static_cast<int>(lx_ + ly_)); }
  Point representative(std::size_t atom) const override {
    std::uint64_t ix = atom >> ly_;
    std::uint64_t iy = atom & ((std::uint64_t{1} << ly_) - 1);
    return DyadicPair{Dyadic{ix, lx_}, Dyadic{iy, ly_}};
  }
  std::size_t locate(const Point& p) const override {
    const auto* d = std::get_if<DyadicPair>(&p);
    if (!d) throw Error(ErrorCode::RepresentationMismatch, "grid chart expects a dyadic pair");
    return (d->x.interval_index(lx_) << ly_) | d->y.interval_index(ly_);
  }
  std::shared_ptr<const AtomChart> common_refinement(const AtomChart& other, std::size_t budget) const override {
    const auto* o = dynamic_cast<const DyadicGridChart*>(&other);
    if (!o) throw Error(ErrorCode::SystemMismatch, describe() + " vs " + other.describe());
    return dyadic_grid_chart(std::max(lx_, o->lx_), std::max(ly_, o->ly_), budget);
  }
  std::shared_ptr<const AtomChart> deepen(std::size_t depth, std::size_t budget) const override {
    if (depth == 0) throw Error(ErrorCode::InvalidArgument, "depth must be >= 1");
    return dyadic_grid_chart(level_add(lx_, depth - 1), ly_, budget);
  }
  double deepened_size(std::size_t depth) const override {
    return std::ldexp(1.0, static_cast<int>(lx_ + ly_ + depth - 1));
  }

 private:
  std::uint8_t lx_;
  std::uint8_t ly_;
  System system_ = BakerMap{};
};

// ------------------------------------------------------------------ cylinders (bernoulli)

class CylinderChart final : public AtomChart {
 public:
  CylinderChart(const BernoulliShift& shift, std::int64_t start, std::size_t length)
      : system_(shift), start_(start), length_(length) {
    const auto& s = std::get<BernoulliShift>(system_);
    std::size_t n = 1;
    for (std::size_t i = 0; i < length_; ++i) n *= s.alphabet();
    count_ = n;
    measures_.resize(n);
    for (std::size_t a = 0; a < n; ++a) {
      double m = 1.0;
      std::size_t code = a;
      for (std::size_t i = 0; i < length_; ++i) {
        m *= s.weights()[code % s.alphabet()];
        code /= s.alphabet();
      }
      measures_[a] = m;
    }
  }

  const System& system() const override { return system_; }
  std::string describe() const override {
    return "cylinder:" + std::to_string(start_) + "+" + std::to_string(length_);
  }
  std::size_t size() const override { return count_; }
  double measure(std::size_t atom) const override { return measures_[atom]; }
  // Symbol at coordinate start + i is digit i (least significant first).
  Point representative(std::size_t atom) const override {
    const auto& s = std::get<BernoulliShift>(system_);
    SymbolWindow w{start_, std::vector<std::uint8_t>(length_), std::nullopt, 0};
    for (std::size_t i = 0; i < length_; ++i) {
      w.word[i] = static_cast<std::uint8_t>(atom % s.alphabet());
      atom /= s.alphabet();
    }
    return w;
  }
  std::size_t locate(const Point& p) const override {
    const auto* w = std::get_if<SymbolWindow>(&p);
    if (!w) throw Error(ErrorCode::RepresentationMismatch, "cylinder chart expects a symbol window");
    const auto& s = std::get<BernoulliShift>(system_);
    std::size_t code = 0;
    for (std::size_t i = length_; i-- > 0;) {
      code = code * s.alphabet() + static_cast<std::size_t>(s.symbol(*w, start_ + static_cast<std::int64_t>(i)));
    }
    return code;
  }
  std::shared_ptr<const AtomChart> common_refinement(const AtomChart& other, std::size_t budget) const override {
    const auto* o = dynamic_cast<const CylinderChart*>(&other);
    if (!o) throw Error(ErrorCode::SystemMismatch, describe() + " vs " + other.describe());
    require_same_system(system_, o->system_);
    std::int64_t lo = std::min(start_, o->start_);
    std::int64_t hi = std::max(start_ + static_cast<std::int64_t>(length_), o->start_ + static_cast<std::int64_t>(o->length_));
    return cylinder_chart(std::get<BernoulliShift>(system_), lo, static_cast<std::size_t>(hi - lo), budget);
  }
  std::shared_ptr<const AtomChart> deepen(std::size_t depth, std::size_t budget) const override {
    if (depth == 0) throw Error(ErrorCode::InvalidArgument, "depth must be >= 1");
    return cylinder_chart(std::get<BernoulliShift>(system_), start_, length_ + depth - 1, budget);
  }
  double deepened_size(std::size_t depth) const override {
    return std::pow(static_cast<double>(std::get<BernoulliShift>(system_).alphabet()),
                    static_cast<double>(length_ + depth - 1));
  }

 private:
  System system_;
  std::int64_t start_;
  std::size_t length_;
  std::size_t count_ = 1;
  std::vector<double> measures_;
};

// ------------------------------------------------------------------ arcs (rotation, skew x-coordinate)

class ArcChart final : public AtomChart {
 public:
  ArcChart(const System& system, std::vector<Angle> breakpoints) : system_(system) {
    if (const auto* r = std::get_if<CircleRotation>(&system_)) {
      step_ = r->step();
    } else if (const auto* s = std::get_if<SkewRotation>(&system_)) {
      step_ = s->step();
      torus_x_ = true;
    } else {
      throw Error(ErrorCode::UnsupportedCellFamily, "arcs on " + koopdim::describe(system));
    }
    if (breakpoints.empty()) breakpoints.push_back(Angle{});
    for (auto& b : breakpoints) b = step_.normalize(b);
    std::sort(breakpoints.begin(), breakpoints.end(),
              [&](const Angle& a, const Angle& b) { return step_.compare(a, b) < 0; });
    breakpoints.erase(std::unique(breakpoints.begin(), breakpoints.end(),
                                  [&](const Angle& a, const Angle& b) { return step_.compare(a, b) == 0; }),
                      breakpoints.end());
    breaks_ = std::move(breakpoints);
    measures_.resize(breaks_.size());
    for (std::size_t i = 0; i < breaks_.size(); ++i) {
      measures_[i] = breaks_.size() == 1 ? 1.0
                                         : static_cast<double>(step_.arc_length(breaks_[i], breaks_[(i + 1) % breaks_.size()]));
    }
  }

  const System& system() const override { return system_; }
  std::string describe() const override { return "arcs:" + std::to_string(breaks_.size()) + "-breakpoints"; }
  std::size_t size() const override { return breaks_.size(); }
  double measure(std::size_t atom) const override { return measures_[atom]; }
  Point representative(std::size_t atom) const override {
    if (torus_x_) return AnglePair{breaks_[atom], Angle{}};
    return breaks_[atom];
  }
  std::size_t locate(const Point& p) const override {
    const Angle* a = nullptr;
    if (torus_x_) {
      if (const auto* q = std::get_if<AnglePair>(&p)) a = &q->x;
    } else {
      a = std::get_if<Angle>(&p);
    }
    if (!a) throw Error(ErrorCode::RepresentationMismatch, "arc chart received a foreign point type");
    auto it = std::upper_bound(breaks_.begin(), breaks_.end(), *a,
                               [&](const Angle& x, const Angle& b) { return step_.compare(x, b) < 0; });
    if (it == breaks_.begin()) return breaks_.size() - 1;
    return static_cast<std::size_t>(it - breaks_.begin()) - 1;
  }
  std::shared_ptr<const AtomChart> common_refinement(const AtomChart& other, std::size_t budget) const override {
    const auto* o = dynamic_cast<const ArcChart*>(&other);
    if (!o) throw Error(ErrorCode::SystemMismatch, describe() + " vs " + other.describe());
    require_same_system(system_, o->system_);
    std::vector<Angle> merged = breaks_;
    merged.insert(merged.end(), o->breaks_.begin(), o->breaks_.end());
    return arc_chart(system_, std::move(merged), budget);
  }
  std::shared_ptr<const AtomChart> deepen(std::size_t depth, std::size_t budget) const override {
    if (depth == 0) throw Error(ErrorCode::InvalidArgument, "depth must be >= 1");
    check_budget(deepened_size(depth), budget, "arc refinement");
    std::vector<Angle> pts;
    pts.reserve(breaks_.size() * depth);
    for (std::size_t k = 0; k < depth; ++k)
      for (const auto& b : breaks_) pts.push_back(step_.advance(b, -static_cast<std::int64_t>(k)));
    return arc_chart(system_, std::move(pts), budget);
  }
  double deepened_size(std::size_t depth) const override {
    return static_cast<double>(breaks_.size()) * static_cast<double>(depth);
  }

 private:
  System system_;
  RotationNumber step_ = RotationNumber::golden();
  bool torus_x_ = false;
  std::vector<Angle> breaks_;
  std::vector<double> measures_;
};

// ------------------------------------------------------------------ torus grid (skew, one step only)

class TorusGridChart final : public AtomChart {
 public:
  TorusGridChart(const SkewRotation& skew, std::size_t kx, std::size_t ky) : system_(skew), kx_(kx), ky_(ky) {
    if (kx == 0 || ky == 0) throw Error(ErrorCode::InvalidArgument, "torus grid needs positive arc counts");
  }

  const System& system() const override { return system_; }
  std::string describe() const override { return "torus-grid:" + std::to_string(kx_) + "," + std::to_string(ky_); }
  std::size_t size() const override { return kx_ * ky_; }
  double measure(std::size_t) const override { return 1.0 / static_cast<double>(kx_ * ky_); }
  Point representative(std::size_t atom) const override {
    auto ix = static_cast<std::int64_t>(atom / ky_);
    auto iy = static_cast<std::int64_t>(atom % ky_);
    return AnglePair{Angle{Rational::make(ix, static_cast<std::int64_t>(kx_)), 0},
                     Angle{Rational::make(iy, static_cast<std::int64_t>(ky_)), 0}};
  }
  std::size_t locate(const Point& p) const override {
    const auto* q = std::get_if<AnglePair>(&p);
    if (!q) throw Error(ErrorCode::RepresentationMismatch, "torus grid expects an angle pair");
    return coordinate_index(q->x, kx_) * ky_ + coordinate_index(q->y, ky_);
  }
  std::shared_ptr<const AtomChart> common_refinement(const AtomChart& other, std::size_t budget) const override {
    const auto* o = dynamic_cast<const TorusGridChart*>(&other);
    if (!o) throw Error(ErrorCode::SystemMismatch, describe() + " vs " + other.describe());
    require_same_system(system_, o->system_);
    return torus_grid_chart(std::get<SkewRotation>(system_), std::lcm(kx_, o->kx_), std::lcm(ky_, o->ky_), budget);
  }
  std::shared_ptr<const AtomChart> deepen(std::size_t depth, std::size_t budget) const override {
    if (depth == 1) return torus_grid_chart(std::get<SkewRotation>(system_), kx_, ky_, budget);
    throw Error(ErrorCode::UnsupportedCellFamily,
                "sheared refinements of torus rectangles are not exact; use Monte-Carlo mode");
  }
  double deepened_size(std::size_t depth) const override {
    return depth == 1 ? static_cast<double>(kx_ * ky_) : INFINITY;
  }

 private:
  std::size_t coordinate_index(const Angle& a, std::size_t k) const {
    const auto& st = std::get<SkewRotation>(system_).step();
    // largest j with j/k <= a
    std::size_t lo = 0, hi = k;
    while (hi - lo > 1) {
      std::size_t mid = (lo + hi) / 2;
      Angle b{Rational::make(static_cast<std::int64_t>(mid), static_cast<std::int64_t>(k)), 0};
      if (st.compare(b, a) <= 0) lo = mid;
      else hi = mid;
    }
    return lo;
  }

  System system_;
  std::size_t kx_;
  std::size_t ky_;
};

std::uint32_t checked_label(std::size_t v) {
  if (v > UINT32_MAX) throw Error(ErrorCode::BudgetExceeded, "label space overflow");
  return static_cast<std::uint32_t>(v);
}

std::size_t saturating_mul(std::size_t a, std::size_t b) {
  if (a != 0 && b > SIZE_MAX / a) return SIZE_MAX;
  return a * b;
}

}  // namespace

std::shared_ptr<const AtomChart> dyadic_chart(std::uint8_t level, std::size_t budget) {
  check_budget(std::ldexp(1.0, level), budget, "dyadic chart");
  return std::make_shared<DyadicChart>(level);
}

std::shared_ptr<const AtomChart> dyadic_grid_chart(std::uint8_t x_level, std::uint8_t y_level, std::size_t budget) {
  check_budget(std::ldexp(1.0, x_level + y_level), budget, "dyadic grid chart");
  return std::make_shared<DyadicGridChart>(x_level, y_level);
}

std::shared_ptr<const AtomChart> cylinder_chart(const BernoulliShift& shift, std::int64_t start, std::size_t length,
                                                std::size_t budget) {
  check_budget(std::pow(static_cast<double>(shift.alphabet()), static_cast<double>(length)), budget, "cylinder chart");
  return std::make_shared<CylinderChart>(shift, start, length);
}

std::shared_ptr<const AtomChart> arc_chart(const System& system, std::vector<Angle> breakpoints, std::size_t budget) {
  check_budget(static_cast<double>(breakpoints.size()), budget, "arc chart");
  return std::make_shared<ArcChart>(system, std::move(breakpoints));
}

std::shared_ptr<const AtomChart> torus_grid_chart(const SkewRotation& skew, std::size_t x_arcs, std::size_t y_arcs,
                                                  std::size_t budget) {
  check_budget(static_cast<double>(x_arcs) * static_cast<double>(y_arcs), budget, "torus grid chart");
  return std::make_shared<TorusGridChart>(skew, x_arcs, y_arcs);
}

// ------------------------------------------------------------------ Partition

Partition::Partition(std::shared_ptr<const AtomChart> chart, std::vector<std::uint32_t> atom_labels,
                     std::size_t combinatorial_count)
    : chart_(std::move(chart)), combinatorial_count_(combinatorial_count) {
  if (!chart_) throw Error(ErrorCode::InvalidArgument, "partition needs a chart");
  if (atom_labels.size() != chart_->size()) {
    throw Error(ErrorCode::InvalidArgument, "label count does not match chart size");
  }
  std::uint32_t max_label = 0;
  for (auto l : atom_labels) max_label = std::max(max_label, l);
  std::vector<double> mass(static_cast<std::size_t>(max_label) + 1, 0.0);
  for (std::size_t a = 0; a < atom_labels.size(); ++a) mass[atom_labels[a]] += chart_->measure(a);
  std::vector<std::uint32_t> remap(mass.size(), UINT32_MAX);
  for (std::size_t l = 0; l < mass.size(); ++l) {
    if (mass[l] > 0.0) {
      remap[l] = static_cast<std::uint32_t>(measures_.size());
      measures_.push_back(mass[l]);
    }
  }
  for (auto& l : atom_labels) l = remap[l];
  atom_labels_ = std::move(atom_labels);
  if (combinatorial_count_ < measures_.size()) combinatorial_count_ = measures_.size();
}

Partition::Partition(std::shared_ptr<const AtomChart> chart)
    : Partition(chart, [&] {
        std::vector<std::uint32_t> l(chart->size());
        std::iota(l.begin(), l.end(), 0U);
        return l;
      }(), chart->size()) {}

Partition Partition::lift(const std::shared_ptr<const AtomChart>& finer) const {
  require_same_system(chart_->system(), finer->system());
  std::vector<std::uint32_t> labels(finer->size());
  for (std::size_t a = 0; a < finer->size(); ++a) labels[a] = atom_labels_[chart_->locate(finer->representative(a))];
  Partition out(finer, std::move(labels), combinatorial_count_);
  return out;
}

Partition Partition::with_estimated_measures(std::span<const Point> pool, std::uint64_t seed) const {
  if (pool.empty()) throw Error(ErrorCode::InvalidArgument, "empty sample pool");
  Partition out = *this;
  std::vector<double> counts(measures_.size(), 0.0);
  for (const auto& p : pool) counts[label(p)] += 1.0;
  const double n = static_cast<double>(pool.size());
  out.stderr_.resize(counts.size());
  for (std::size_t c = 0; c < counts.size(); ++c) {
    double f = counts[c] / n;
    out.measures_[c] = f;
    out.stderr_[c] = std::sqrt(f * (1.0 - f) / n);
  }
  out.provenance_ = MeasureProvenance::MonteCarlo;
  out.mc_ = MonteCarloInfo{pool.size(), seed};
  return out;
}

Partition make_partition(const System& system, const std::string& spec, std::size_t budget) {
  auto colon = spec.find(':');
  if (colon == std::string::npos) throw Error(ErrorCode::ConfigParse, "partition: expected family:args, got '" + spec + "'");
  std::string family = spec.substr(0, colon);
  std::string args = spec.substr(colon + 1);
  auto parse_uint = [&](const std::string& s) -> std::size_t {
    try {
      std::size_t used = 0;
      long long v = std::stoll(s, &used);
      if (used != s.size() || v < 0) throw std::invalid_argument(s);
      return static_cast<std::size_t>(v);
    } catch (const std::logic_error&) {
      throw Error(ErrorCode::ConfigParse, "partition: malformed integer '" + s + "' in '" + spec + "'");
    }
  };
  auto parse_pair = [&](const std::string& s) {
    auto comma = s.find(',');
    if (comma == std::string::npos) throw Error(ErrorCode::ConfigParse, "partition: grid needs mx,my");
    return std::pair{parse_uint(s.substr(0, comma)), parse_uint(s.substr(comma + 1))};
  };
  auto level = [&](std::size_t m) {
    if (m > 62) throw Error(ErrorCode::ConfigParse, "partition: level too large in '" + spec + "'");
    return static_cast<std::uint8_t>(m);
  };

  if (std::holds_alternative<DoublingMap>(system) && family == "dyadic") {
    return Partition(dyadic_chart(level(parse_uint(args)), budget));
  }
  if (std::holds_alternative<BakerMap>(system) && (family == "grid" || family == "dyadic")) {
    auto [mx, my] = family == "grid" ? parse_pair(args) : std::pair{parse_uint(args), parse_uint(args)};
    return Partition(dyadic_grid_chart(level(mx), level(my), budget));
  }
  if (const auto* b = std::get_if<BernoulliShift>(&system); b && family == "cylinder") {
    return Partition(cylinder_chart(*b, 0, parse_uint(args), budget));
  }
  if ((std::holds_alternative<CircleRotation>(system) || std::holds_alternative<SkewRotation>(system)) &&
      family == "arcs") {
    std::size_t k = parse_uint(args);
    if (k == 0) throw Error(ErrorCode::ConfigParse, "partition: arcs:k needs k >= 1");
    std::vector<Angle> pts;
    for (std::size_t j = 0; j < k; ++j)
      pts.push_back(Angle{Rational::make(static_cast<std::int64_t>(j), static_cast<std::int64_t>(k)), 0});
    return Partition(arc_chart(system, std::move(pts), budget));
  }
  if (const auto* s = std::get_if<SkewRotation>(&system); s && family == "grid") {
    auto [kx, ky] = parse_pair(args);
    return Partition(torus_grid_chart(*s, kx, ky, budget));
  }
  throw Error(ErrorCode::UnsupportedCellFamily, "partition '" + spec + "' on " + describe(system));
}

Partition refine(const Partition& alpha, const Partition& beta, std::size_t budget) {
  require_same_system(alpha.system(), beta.system());
  auto chart = alpha.chart().common_refinement(beta.chart(), budget);
  Partition a = alpha.lift(chart);
  Partition b = beta.lift(chart);
  std::unordered_map<std::uint64_t, std::uint32_t> ids;
  std::vector<std::uint32_t> labels(chart->size());
  for (std::size_t atom = 0; atom < chart->size(); ++atom) {
    std::uint64_t key = (static_cast<std::uint64_t>(a.atom_label(atom)) << 32) | b.atom_label(atom);
    auto [it, inserted] = ids.try_emplace(key, checked_label(ids.size()));
    labels[atom] = it->second;
  }
  return Partition(chart, std::move(labels), saturating_mul(alpha.combinatorial_count(), beta.combinatorial_count()));
}

Partition dynamical_refinement(const System& system, const Partition& alpha, std::size_t depth, std::size_t budget) {
  if (depth == 0) throw Error(ErrorCode::InvalidArgument, "refinement depth must be >= 1");
  require_same_system(system, alpha.system());
  if (depth == 1) return alpha;
  auto chart = alpha.chart().deepen(depth, budget);
  std::vector<std::uint32_t> labels(chart->size());
  std::vector<Point> reps(chart->size());
  for (std::size_t a = 0; a < chart->size(); ++a) {
    reps[a] = chart->representative(a);
    labels[a] = static_cast<std::uint32_t>(alpha.label(reps[a]));
  }
  std::unordered_map<std::uint64_t, std::uint32_t> ids;
  for (std::size_t k = 1; k < depth; ++k) {
    ids.clear();
    for (std::size_t a = 0; a < chart->size(); ++a) {
      reps[a] = apply(system, reps[a], 1);
      std::uint64_t key = (static_cast<std::uint64_t>(labels[a]) << 32) | alpha.label(reps[a]);
      auto [it, inserted] = ids.try_emplace(key, checked_label(ids.size()));
      labels[a] = it->second;
    }
  }
  std::size_t comb = 1;
  for (std::size_t k = 0; k < depth; ++k) comb = saturating_mul(comb, alpha.combinatorial_count());
  return Partition(chart, std::move(labels), comb);
}

std::size_t deepest_exact_depth(const Partition& alpha, std::size_t cap, std::size_t budget) {
  std::size_t best = 1;
  for (std::size_t n = 1; n <= cap; ++n) {
    if (alpha.chart().deepened_size(n) > static_cast<double>(budget)) break;
    best = n;
  }
  return best;
}

double static_entropy(std::span<const double> weights) {
  double sum = 0.0;
  double h = 0.0;
  for (double w : weights) {
    if (w < 0.0 || std::isnan(w)) throw Error(ErrorCode::NegativeWeight, "weight " + std::to_string(w));
    sum += w;
    if (w > 0.0) h -= w * std::log(w);
  }
  if (std::abs(sum - 1.0) > 1e-9) throw Error(ErrorCode::SumNotOne, "weights sum to " + std::to_string(sum));
  return h;
}

double entropy(const Partition& alpha) { return static_entropy(alpha.measures()); }

double conditional_entropy(const Partition& alpha, const Partition& beta, std::size_t budget) {
  double h = entropy(refine(alpha, beta, budget)) - entropy(beta);
  return h < 0.0 && h > -1e-12 ? 0.0 : h;
}

std::vector<EntropyEstimate> entropy_rate(const System& system, const Partition& alpha, std::size_t n_max,
                                          std::size_t budget) {
  if (n_max == 0) throw Error(ErrorCode::InvalidArgument, "n_max must be >= 1");
  std::vector<EntropyEstimate> out;
  out.reserve(n_max);
  for (std::size_t n = 1; n <= n_max; ++n) {
    Partition joint = dynamical_refinement(system, alpha, n, budget);
    double h = entropy(joint);
    out.push_back(EntropyEstimate{h / static_cast<double>(n), n, 0.0, h, joint.size(), joint.combinatorial_count()});
  }
  return out;
}

EntropyEstimate monte_carlo_entropy(const System& system, const Partition& alpha, std::size_t depth,
                                    std::span<const Point> pool) {
  if (depth == 0) throw Error(ErrorCode::InvalidArgument, "depth must be >= 1");
  if (pool.empty()) throw Error(ErrorCode::InvalidArgument, "empty sample pool");
  require_same_system(system, alpha.system());
  std::map<std::vector<std::uint32_t>, std::size_t> counts;
  std::vector<std::uint32_t> itinerary(depth);
  for (const auto& p0 : pool) {
    Point p = p0;
    for (std::size_t k = 0; k < depth; ++k) {
      if (k > 0) p = apply(system, p, 1);
      itinerary[k] = static_cast<std::uint32_t>(alpha.label(p));
    }
    ++counts[itinerary];
  }
  const double n = static_cast<double>(pool.size());
  double h = 0.0;
  double second = 0.0;
  for (const auto& [key, c] : counts) {
    double f = static_cast<double>(c) / n;
    h -= f * std::log(f);
    second += f * std::log(f) * std::log(f);
  }
  const double cells = static_cast<double>(counts.size());
  double variance = std::max(0.0, second - h * h) / n + (cells - 1.0) / (2.0 * n * n);
  double corrected = std::clamp(h + (cells - 1.0) / (2.0 * n), 0.0, std::log(cells));
  std::size_t comb = 1;
  for (std::size_t k = 0; k < depth; ++k) comb = saturating_mul(comb, alpha.combinatorial_count());
  return EntropyEstimate{corrected / static_cast<double>(depth), depth, std::sqrt(variance) / static_cast<double>(depth),
                         corrected, counts.size(), comb};
}

}  // namespace koopdim
