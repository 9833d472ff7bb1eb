#include "koopdim/hilbert.hpp"

#include <cmath>

#include "koopdim/error.hpp"

namespace koopdim {

namespace {

std::shared_ptr<const AtomChart> common_chart(const Partition& a, const Partition& b, std::size_t budget) {
  if (describe(a.system()) != describe(b.system())) {
    throw Error(ErrorCode::RepresentationMismatch, "functions live on different systems");
  }
  if (a.chart_ptr() == b.chart_ptr()) return a.chart_ptr();
  return a.chart().common_refinement(b.chart(), budget);
}

std::vector<std::uint32_t> labels_on(const Partition& p, const std::shared_ptr<const AtomChart>& chart) {
  if (p.chart_ptr() == chart) return p.atom_labels();
  return p.lift(chart).atom_labels();
}

struct Joint {
  std::vector<double> meet;  // mu(A cap B) per beta cell
  std::vector<double> beta;  // mu(B)
  std::vector<std::uint32_t> a_labels;
  std::vector<std::uint32_t> b_labels;
  std::shared_ptr<const AtomChart> chart;
};

Joint joint_measures(const Partition& alpha, std::size_t cell, const Partition& beta, std::size_t budget) {
  if (cell >= alpha.size()) throw Error(ErrorCode::InvalidArgument, "cell index out of range");
  Joint j;
  j.chart = common_chart(alpha, beta, budget);
  j.a_labels = labels_on(alpha, j.chart);
  j.b_labels = labels_on(beta, j.chart);
  j.meet.assign(beta.size(), 0.0);
  j.beta.assign(beta.size(), 0.0);
  for (std::size_t atom = 0; atom < j.chart->size(); ++atom) {
    double m = j.chart->measure(atom);
    j.beta[j.b_labels[atom]] += m;
    if (j.a_labels[atom] == cell) j.meet[j.b_labels[atom]] += m;
  }
  for (double m : j.beta)
    if (m <= 0.0) throw Error(ErrorCode::ZeroMeasureConditioningCell, "conditioning cell has zero measure");
  return j;
}

}  // namespace

CellFunction CellFunction::indicator(std::shared_ptr<const Partition> partition, std::size_t cell) {
  if (cell >= partition->size()) throw Error(ErrorCode::InvalidArgument, "cell index out of range");
  Eigen::VectorXcd c = Eigen::VectorXcd::Zero(static_cast<Eigen::Index>(partition->size()));
  c[static_cast<Eigen::Index>(cell)] = 1.0;
  return CellFunction{std::move(partition), std::move(c)};
}

CellFunction CellFunction::constant(std::shared_ptr<const Partition> partition, cplx value) {
  Eigen::VectorXcd c = Eigen::VectorXcd::Constant(static_cast<Eigen::Index>(partition->size()), value);
  return CellFunction{std::move(partition), std::move(c)};
}

double CellFunction::norm() const { return lp_norm(2.0); }

double CellFunction::lp_norm(double p) const {
  double s = 0.0;
  for (Eigen::Index i = 0; i < coeffs.size(); ++i)
    s += std::pow(std::abs(coeffs[i]), p) * partition->measure(static_cast<std::size_t>(i));
  return std::pow(s, 1.0 / p);
}

CharacterFunction CharacterFunction::character(std::int64_t j, std::int64_t k, cplx amplitude) {
  CharacterFunction f;
  f.terms[{j, k}] = amplitude;
  return f;
}

double CharacterFunction::norm() const {
  double s = 0.0;
  for (const auto& [key, a] : terms) s += std::norm(a);
  return std::sqrt(s);
}

Eigen::VectorXcd atom_values(const CellFunction& f, const std::shared_ptr<const AtomChart>& chart) {
  auto labels = labels_on(*f.partition, chart);
  Eigen::VectorXcd v(static_cast<Eigen::Index>(labels.size()));
  for (std::size_t a = 0; a < labels.size(); ++a) v[static_cast<Eigen::Index>(a)] = f.coeffs[labels[a]];
  return v;
}

Eigen::VectorXd atom_measures(const AtomChart& chart) {
  Eigen::VectorXd m(static_cast<Eigen::Index>(chart.size()));
  for (std::size_t a = 0; a < chart.size(); ++a) m[static_cast<Eigen::Index>(a)] = chart.measure(a);
  return m;
}

cplx inner_product(const CellFunction& f, const CellFunction& g, std::size_t budget) {
  if (f.partition == g.partition) {
    cplx s = 0.0;
    for (Eigen::Index i = 0; i < f.coeffs.size(); ++i)
      s += f.coeffs[i] * std::conj(g.coeffs[i]) * f.partition->measure(static_cast<std::size_t>(i));
    return s;
  }
  auto chart = common_chart(*f.partition, *g.partition, budget);
  Eigen::VectorXcd fv = atom_values(f, chart);
  Eigen::VectorXcd gv = atom_values(g, chart);
  Eigen::VectorXd mu = atom_measures(*chart);
  return (gv.conjugate().array() * fv.array() * mu.array().cast<cplx>()).sum();
}

cplx inner_product(const CharacterFunction& f, const CharacterFunction& g) {
  cplx s = 0.0;
  for (const auto& [key, a] : f.terms) {
    auto it = g.terms.find(key);
    if (it != g.terms.end()) s += a * std::conj(it->second);
  }
  return s;
}

CellFunction conditional_expectation(const CellFunction& f, std::shared_ptr<const Partition> beta,
                                     std::size_t budget) {
  auto chart = common_chart(*f.partition, *beta, budget);
  Eigen::VectorXcd fv = atom_values(f, chart);
  auto b_labels = labels_on(*beta, chart);
  Eigen::VectorXcd num = Eigen::VectorXcd::Zero(static_cast<Eigen::Index>(beta->size()));
  std::vector<double> den(beta->size(), 0.0);
  for (std::size_t a = 0; a < chart->size(); ++a) {
    double m = chart->measure(a);
    num[b_labels[a]] += fv[static_cast<Eigen::Index>(a)] * m;
    den[b_labels[a]] += m;
  }
  for (std::size_t b = 0; b < den.size(); ++b) {
    if (den[b] <= 0.0) throw Error(ErrorCode::ZeroMeasureConditioningCell, "cell " + std::to_string(b));
    num[static_cast<Eigen::Index>(b)] /= den[b];
  }
  return CellFunction{std::move(beta), std::move(num)};
}

L1ProjectionError l1_projection_error(const Partition& alpha, std::size_t cell, const Partition& beta,
                                      std::size_t budget) {
  Joint j = joint_measures(alpha, cell, beta, budget);
  L1ProjectionError out;
  for (std::size_t atom = 0; atom < j.chart->size(); ++atom) {
    auto b = j.b_labels[atom];
    double e = j.meet[b] / j.beta[b];
    double ind = j.a_labels[atom] == cell ? 1.0 : 0.0;
    out.direct += j.chart->measure(atom) * std::abs(e - ind);
  }
  for (std::size_t b = 0; b < j.beta.size(); ++b) {
    out.closed_form += 2.0 * j.meet[b] * (j.beta[b] - j.meet[b]) / j.beta[b];
  }
  return out;
}

MonteCarloL1 l1_projection_error_mc(const Partition& alpha, std::size_t cell, const Partition& beta,
                                    std::span<const Point> pool, std::size_t budget) {
  if (pool.empty()) throw Error(ErrorCode::InvalidArgument, "empty sample pool");
  Joint j = joint_measures(alpha, cell, beta, budget);
  MonteCarloL1 out;
  for (std::size_t b = 0; b < j.beta.size(); ++b) {
    out.closed_form += 2.0 * j.meet[b] * (j.beta[b] - j.meet[b]) / j.beta[b];
  }
  double sum = 0.0;
  double sum2 = 0.0;
  for (const auto& p : pool) {
    auto b = beta.label(p);
    double ind = alpha.label(p) == cell ? 1.0 : 0.0;
    double v = std::abs(j.meet[b] / j.beta[b] - ind);
    sum += v;
    sum2 += v * v;
  }
  const double n = static_cast<double>(pool.size());
  out.samples = pool.size();
  out.estimate = sum / n;
  double var = std::max(0.0, sum2 / n - out.estimate * out.estimate);
  out.stderr_value = std::sqrt(var / n);
  return out;
}

double lp_projection_error(const Partition& alpha, std::size_t cell, const Partition& beta, double p,
                           std::size_t budget) {
  if (!(p >= 1.0)) throw Error(ErrorCode::InvalidArgument, "p must be >= 1");
  Joint j = joint_measures(alpha, cell, beta, budget);
  double s = 0.0;
  for (std::size_t atom = 0; atom < j.chart->size(); ++atom) {
    auto b = j.b_labels[atom];
    double ind = j.a_labels[atom] == cell ? 1.0 : 0.0;
    s += j.chart->measure(atom) * std::pow(std::abs(j.meet[b] / j.beta[b] - ind), p);
  }
  return std::pow(s, 1.0 / p);
}

PseudoInverse pseudo_inverse(const Eigen::MatrixXcd& a, double rel_tol) {
  PseudoInverse out;
  out.matrix = Eigen::MatrixXcd::Zero(a.cols(), a.rows());
  if (a.size() == 0) return out;
  Eigen::BDCSVD<Eigen::MatrixXcd> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const auto& s = svd.singularValues();
  if (s.size() == 0 || s[0] <= 0.0) return out;
  const double cut = rel_tol * s[0];
  Eigen::VectorXd inv = Eigen::VectorXd::Zero(s.size());
  for (Eigen::Index i = 0; i < s.size(); ++i) {
    if (s[i] > cut) {
      inv[i] = 1.0 / s[i];
      ++out.rank;
    }
  }
  out.matrix = svd.matrixV() * inv.cast<cplx>().asDiagonal() * svd.matrixU().adjoint();
  return out;
}

Eigen::MatrixXcd range_whitener(const Eigen::MatrixXcd& gram) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(0.5 * (gram + gram.adjoint()));
  const auto& lam = es.eigenvalues();
  double top = lam.size() ? lam.maxCoeff() : 0.0;
  std::vector<Eigen::Index> keep;
  for (Eigen::Index i = lam.size(); i-- > 0;)
    if (lam[i] > kPinvRelTol * top && lam[i] > 0.0) keep.push_back(i);
  Eigen::MatrixXcd w(gram.rows(), static_cast<Eigen::Index>(keep.size()));
  for (std::size_t c = 0; c < keep.size(); ++c)
    w.col(static_cast<Eigen::Index>(c)) = es.eigenvectors().col(keep[c]) / std::sqrt(lam[keep[c]]);
  return w;
}

Projection orthogonal_project(const Eigen::MatrixXcd& gram, const Eigen::VectorXcd& b) {
  if (gram.rows() != gram.cols() || gram.rows() != b.size()) {
    throw Error(ErrorCode::InvalidArgument, "gram/rhs dimension mismatch");
  }
  PseudoInverse pinv = pseudo_inverse(gram);
  Projection out;
  out.coeffs = pinv.matrix * b;
  out.rank = pinv.rank;
  return out;
}

Projection orthogonal_project(const CellFunction& f, std::span<const CellFunction> dictionary, std::size_t budget) {
  const auto n = static_cast<Eigen::Index>(dictionary.size());
  Eigen::MatrixXcd gram(n, n);
  Eigen::VectorXcd b(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    b[i] = inner_product(f, dictionary[static_cast<std::size_t>(i)], budget);
    for (Eigen::Index j = 0; j < n; ++j)
      gram(i, j) = inner_product(dictionary[static_cast<std::size_t>(j)], dictionary[static_cast<std::size_t>(i)], budget);
  }
  Projection out = orthogonal_project(gram, b);
  // Residual evaluated atom by atom on a chart refining f and every dictionary element.
  auto chart = f.partition->chart_ptr();
  for (const auto& psi : dictionary)
    if (psi.partition->chart_ptr() != chart) chart = chart->common_refinement(psi.partition->chart(), budget);
  Eigen::VectorXcd r = atom_values(f, chart);
  for (Eigen::Index i = 0; i < n; ++i) r -= out.coeffs[i] * atom_values(dictionary[static_cast<std::size_t>(i)], chart);
  out.residual_norm = std::sqrt((r.cwiseAbs2().array() * atom_measures(*chart).array()).sum());
  return out;
}

}  // namespace koopdim
