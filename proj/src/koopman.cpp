#include "koopdim/koopman.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

#include "koopdim/error.hpp"

namespace koopdim {

namespace {

// frac(n * r) for a rotation number r.
long double frac_multiple(const RotationNumber& r, std::int64_t n) {
  if (r.is_rational()) {
    const Rational& q = *r.exact();
    __int128 num = static_cast<__int128>(q.num) * n;
    __int128 den = q.den;
    __int128 m = num % den;
    if (m < 0) m += den;
    return static_cast<long double>(m) / static_cast<long double>(den);
  }
  long double x = r.value() * static_cast<long double>(n);
  return x - std::floor(x);
}

cplx phase(long double turns) {
  long double a = 2.0L * std::numbers::pi_v<long double> * turns;
  return {static_cast<double>(std::cos(a)), static_cast<double>(std::sin(a))};
}

std::vector<std::int64_t> parse_int_list(const std::string& s, const std::string& what, char sep = ',') {
  std::vector<std::int64_t> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, sep)) {
    try {
      std::size_t used = 0;
      long long v = std::stoll(item, &used);
      if (used != item.size()) throw std::invalid_argument(item);
      out.push_back(v);
    } catch (const std::logic_error&) {
      throw Error(ErrorCode::ConfigParse, "dictionary: malformed integer '" + item + "' in " + what);
    }
  }
  if (out.empty()) throw Error(ErrorCode::ConfigParse, "dictionary: empty list in " + what);
  return out;
}

}  // namespace

CellBackend::CellBackend(System system, std::shared_ptr<const Partition> alpha, Eigen::MatrixXcd coef,
                         std::size_t budget)
    : system_(std::move(system)), alpha_(std::move(alpha)), coef_(std::move(coef)), budget_(budget) {
  if (koopdim::describe(system_) != koopdim::describe(alpha_->system())) {
    throw Error(ErrorCode::SystemMismatch, "partition belongs to " + koopdim::describe(alpha_->system()));
  }
  if (coef_.rows() != static_cast<Eigen::Index>(alpha_->size())) {
    throw Error(ErrorCode::InvalidArgument, "coefficient rows must match the cell count");
  }
}

CellBackend::CellBackend(System system, std::shared_ptr<const Partition> alpha, std::size_t budget)
    : CellBackend(std::move(system), alpha,
                  Eigen::MatrixXcd::Identity(static_cast<Eigen::Index>(alpha->size()),
                                             static_cast<Eigen::Index>(alpha->size())),
                  budget) {}

std::string CellBackend::describe() const {
  return koopdim::describe(system_) + "/" + alpha_->chart().describe();
}

Eigen::MatrixXd CellBackend::joint_measure(std::int64_t k) const {
  if (k < 0) throw Error(ErrorCode::InvalidArgument, "joint measures need k >= 0");
  const auto n = static_cast<Eigen::Index>(alpha_->size());
  Eigen::MatrixXd j = Eigen::MatrixXd::Zero(n, n);
  if (k == 0) {
    for (Eigen::Index i = 0; i < n; ++i) j(i, i) = alpha_->measure(static_cast<std::size_t>(i));
    return j;
  }
  auto chart = alpha_->chart().deepen(static_cast<std::size_t>(k) + 1, budget_);
  for (std::size_t a = 0; a < chart->size(); ++a) {
    Point p = chart->representative(a);
    auto from = alpha_->label(p);
    auto to = alpha_->label(apply(system_, p, k));
    j(static_cast<Eigen::Index>(from), static_cast<Eigen::Index>(to)) += chart->measure(a);
  }
  return j;
}

Eigen::MatrixXcd CellBackend::correlation(std::int64_t k) const {
  Eigen::MatrixXcd j = joint_measure(k).cast<cplx>();
  return coef_.adjoint() * j * coef_;
}

ShiftBackend::ShiftBackend(std::vector<ShiftVector> vectors) : vectors_(std::move(vectors)) {}

Eigen::MatrixXcd ShiftBackend::correlation(std::int64_t k) const {
  const auto d = dimension();
  Eigen::MatrixXcd c(d, d);
  for (Eigen::Index a = 0; a < d; ++a) {
    const auto& va = vectors_[static_cast<std::size_t>(a)];
    for (Eigen::Index b = 0; b < d; ++b) {
      const auto& vb = vectors_[static_cast<std::size_t>(b)];
      cplx s = 0.0;
      for (std::size_t i = 0; i < va.values.size(); ++i) {
        std::int64_t idx = va.first + static_cast<std::int64_t>(i);
        s += vb.at(idx - k) * std::conj(va.values[i]);
      }
      c(a, b) = s;
    }
  }
  return c;
}

CharacterBackend::CharacterBackend(System system, std::vector<CharacterFunction> functions)
    : system_(std::move(system)), functions_(std::move(functions)) {
  if (!std::holds_alternative<CircleRotation>(system_) && !std::holds_alternative<SkewRotation>(system_)) {
    throw Error(ErrorCode::RepresentationMismatch, "characters need a rotation or skew rotation");
  }
  if (std::holds_alternative<CircleRotation>(system_)) {
    for (const auto& f : functions_)
      for (const auto& [key, a] : f.terms)
        if (key.second != 0) throw Error(ErrorCode::RepresentationMismatch, "circle characters have k = 0");
  }
}

std::string CharacterBackend::describe() const { return koopdim::describe(system_) + "/characters"; }

Eigen::MatrixXcd CharacterBackend::correlation(std::int64_t k) const {
  const auto d = dimension();
  std::vector<CharacterFunction> moved;
  moved.reserve(functions_.size());
  for (const auto& f : functions_) moved.push_back(apply_koopman(system_, f, k));
  Eigen::MatrixXcd c(d, d);
  for (Eigen::Index a = 0; a < d; ++a)
    for (Eigen::Index b = 0; b < d; ++b)
      c(a, b) = inner_product(moved[static_cast<std::size_t>(b)], functions_[static_cast<std::size_t>(a)]);
  return c;
}

MatrixBackend::MatrixBackend(Eigen::MatrixXcd u, Eigen::MatrixXcd x) : u_(std::move(u)), x_(std::move(x)) {
  if (u_.rows() != u_.cols() || u_.rows() != x_.rows()) {
    throw Error(ErrorCode::InvalidArgument, "unitary and vectors have mismatched dimensions");
  }
}

Eigen::MatrixXcd MatrixBackend::correlation(std::int64_t k) const {
  if (k < 0) throw Error(ErrorCode::InvalidArgument, "correlation needs k >= 0");
  Eigen::MatrixXcd y = x_;
  for (std::int64_t i = 0; i < k; ++i) y = u_ * y;
  return x_.adjoint() * y;
}

CharacterFunction apply_koopman(const System& system, const CharacterFunction& f, std::int64_t k) {
  CharacterFunction out;
  if (const auto* r = std::get_if<CircleRotation>(&system)) {
    for (const auto& [key, a] : f.terms) {
      out.terms[key] += a * phase(frac_multiple(r->step(), key.first * k));
    }
    return out;
  }
  if (const auto* s = std::get_if<SkewRotation>(&system)) {
    for (const auto& [key, amp] : f.terms) {
      auto [a, b] = key;
      std::int64_t n = a * k + b * (k * (k - 1) / 2);
      out.terms[{a + k * b, b}] += amp * phase(frac_multiple(s->step(), n));
    }
    return out;
  }
  throw Error(ErrorCode::RepresentationMismatch, "characters need a rotation or skew rotation");
}

std::vector<Eigen::MatrixXcd> correlations(const KoopmanBackend& backend, std::int64_t k_max) {
  std::vector<Eigen::MatrixXcd> out;
  out.reserve(static_cast<std::size_t>(k_max + 1));
  for (std::int64_t k = 0; k <= k_max; ++k) out.push_back(backend.correlation(k));
  return out;
}

Eigen::MatrixXcd signed_correlation(const std::vector<Eigen::MatrixXcd>& c, std::int64_t k) {
  auto m = static_cast<std::size_t>(k < 0 ? -k : k);
  if (m >= c.size()) throw Error(ErrorCode::ChartOverflow, "correlation lag " + std::to_string(k) + " not computed");
  return k >= 0 ? c[m] : Eigen::MatrixXcd(c[m].adjoint());
}

Eigen::MatrixXcd orbit_gram(const std::vector<Eigen::MatrixXcd>& c, std::int64_t n) {
  if (c.empty()) throw Error(ErrorCode::InvalidArgument, "no correlations");
  const Eigen::Index d = c[0].rows();
  Eigen::MatrixXcd g(n * d, n * d);
  for (std::int64_t i = 0; i < n; ++i)
    for (std::int64_t j = 0; j < n; ++j) g.block(i * d, j * d, d, d) = signed_correlation(c, j - i);
  return g;
}

std::unique_ptr<KoopmanBackend> make_backend(const System& system, const std::string& dictionary,
                                             std::size_t budget) {
  auto colon = dictionary.find(':');
  std::string family = dictionary.substr(0, colon);
  std::string args = colon == std::string::npos ? "" : dictionary.substr(colon + 1);
  if (family == "unit") {
    if (!std::holds_alternative<BilateralShift>(system)) {
      throw Error(ErrorCode::RepresentationMismatch, "unit vectors need the bilateral shift");
    }
    std::vector<ShiftVector> v;
    for (auto i : parse_int_list(args, dictionary)) v.push_back(ShiftVector::unit(i));
    return std::make_unique<ShiftBackend>(std::move(v));
  }
  if (family == "character") {
    std::vector<CharacterFunction> fs;
    std::stringstream ss(args);
    std::string item;
    while (std::getline(ss, item, ';')) {
      auto ij = parse_int_list(item, dictionary);
      if (ij.size() == 1) ij.push_back(0);
      if (ij.size() != 2) throw Error(ErrorCode::ConfigParse, "dictionary: character needs j or a,b");
      fs.push_back(CharacterFunction::character(ij[0], ij[1]));
    }
    if (fs.empty()) throw Error(ErrorCode::ConfigParse, "dictionary: no characters in '" + dictionary + "'");
    return std::make_unique<CharacterBackend>(system, std::move(fs));
  }
  if (std::holds_alternative<BilateralShift>(system)) {
    throw Error(ErrorCode::ConfigParse, "dictionary: the shift takes unit:i,j,... (got '" + dictionary + "')");
  }
  auto alpha = std::make_shared<const Partition>(make_partition(system, dictionary, budget));
  return std::make_unique<CellBackend>(system, std::move(alpha), budget);
}

}  // namespace koopdim
