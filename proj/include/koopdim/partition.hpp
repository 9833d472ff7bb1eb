#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "koopdim/systems.hpp"

namespace koopdim {

inline constexpr std::size_t kDefaultCellBudget = 1'000'000;

// A finite partition of the state space into atoms whose measures are known exactly.
// Every partition handled in exact mode is a union-of-atoms labeling of some chart.
class AtomChart {
 public:
  virtual ~AtomChart() = default;

  virtual const System& system() const = 0;
  virtual std::string describe() const = 0;
  virtual std::size_t size() const = 0;
  virtual double measure(std::size_t atom) const = 0;
  // A point whose forward orbit labels the whole atom (left endpoint / lower-left corner).
  virtual Point representative(std::size_t atom) const = 0;
  virtual std::size_t locate(const Point& p) const = 0;

  // Coarsest chart of the same family refining both; throws SystemMismatch otherwise.
  virtual std::shared_ptr<const AtomChart> common_refinement(const AtomChart& other,
                                                             std::size_t budget) const = 0;
  // Chart whose atoms refine phi^{-k}(atom) for every k < depth.
  virtual std::shared_ptr<const AtomChart> deepen(std::size_t depth, std::size_t budget) const = 0;
  virtual double deepened_size(std::size_t depth) const = 0;
};

std::shared_ptr<const AtomChart> dyadic_chart(std::uint8_t level, std::size_t budget = kDefaultCellBudget);
std::shared_ptr<const AtomChart> dyadic_grid_chart(std::uint8_t x_level, std::uint8_t y_level,
                                                   std::size_t budget = kDefaultCellBudget);
std::shared_ptr<const AtomChart> cylinder_chart(const BernoulliShift& shift, std::int64_t start, std::size_t length,
                                                std::size_t budget = kDefaultCellBudget);
// Arcs between consecutive breakpoints; for a skew rotation the arcs live on the x coordinate.
std::shared_ptr<const AtomChart> arc_chart(const System& system, std::vector<Angle> breakpoints,
                                           std::size_t budget = kDefaultCellBudget);
std::shared_ptr<const AtomChart> torus_grid_chart(const SkewRotation& skew, std::size_t x_arcs, std::size_t y_arcs,
                                                  std::size_t budget = kDefaultCellBudget);

enum class MeasureProvenance { Exact, MonteCarlo };

struct MonteCarloInfo {
  std::size_t samples = 0;
  std::uint64_t seed = 0;
};

class Partition {
 public:
  // Cells are the distinct labels; zero-measure cells are dropped and the rest renumbered.
  Partition(std::shared_ptr<const AtomChart> chart, std::vector<std::uint32_t> atom_labels,
            std::size_t combinatorial_count);
  // Every atom of the chart is its own cell.
  explicit Partition(std::shared_ptr<const AtomChart> chart);

  const AtomChart& chart() const { return *chart_; }
  const std::shared_ptr<const AtomChart>& chart_ptr() const { return chart_; }
  const System& system() const { return chart_->system(); }

  // Positive-measure cells.
  std::size_t size() const { return measures_.size(); }
  // Declared cardinality, counting empty intersections of refinements.
  std::size_t combinatorial_count() const { return combinatorial_count_; }
  std::span<const double> measures() const { return measures_; }
  double measure(std::size_t cell) const { return measures_.at(cell); }
  MeasureProvenance provenance() const { return provenance_; }
  const MonteCarloInfo& monte_carlo() const { return mc_; }
  const std::vector<double>& standard_errors() const { return stderr_; }

  std::size_t label(const Point& p) const { return atom_labels_[chart_->locate(p)]; }
  std::uint32_t atom_label(std::size_t atom) const { return atom_labels_[atom]; }
  const std::vector<std::uint32_t>& atom_labels() const { return atom_labels_; }

  // Same cells expressed over a finer chart.
  Partition lift(const std::shared_ptr<const AtomChart>& finer) const;
  // Same cells, measures replaced by frequencies over the sample pool.
  Partition with_estimated_measures(std::span<const Point> pool, std::uint64_t seed) const;

 private:
  Partition() = default;
  std::shared_ptr<const AtomChart> chart_;
  std::vector<std::uint32_t> atom_labels_;
  std::vector<double> measures_;
  std::vector<double> stderr_;
  std::size_t combinatorial_count_ = 0;
  MeasureProvenance provenance_ = MeasureProvenance::Exact;
  MonteCarloInfo mc_;
};

// "dyadic:m" | "cylinder:m" | "arcs:k" | "grid:mx,my", interpreted per system.
Partition make_partition(const System& system, const std::string& spec, std::size_t budget = kDefaultCellBudget);

Partition refine(const Partition& alpha, const Partition& beta, std::size_t budget = kDefaultCellBudget);
// Join of phi^{-k}(alpha) over k < depth, exact measures.
Partition dynamical_refinement(const System& system, const Partition& alpha, std::size_t depth,
                               std::size_t budget = kDefaultCellBudget);
// Largest depth <= cap whose refinement chart fits the budget (at least 1).
std::size_t deepest_exact_depth(const Partition& alpha, std::size_t cap, std::size_t budget = kDefaultCellBudget);

struct EntropyEstimate {
  double value = 0.0;          // nats; (1/n) H for rate sequences
  std::size_t n_used = 0;      // refinement depth
  double stderr_nats = 0.0;    // 0 in exact mode
  double joint_entropy = 0.0;  // H of the depth-n refinement
  std::size_t cells = 0;       // positive-measure cells of the refinement
  std::size_t combinatorial_cells = 0;
};

double static_entropy(std::span<const double> weights);
double entropy(const Partition& alpha);
double conditional_entropy(const Partition& alpha, const Partition& beta, std::size_t budget = kDefaultCellBudget);
std::vector<EntropyEstimate> entropy_rate(const System& system, const Partition& alpha, std::size_t n_max,
                                          std::size_t budget = kDefaultCellBudget);
// Itinerary frequencies over a shared pool; Miller-Madow corrected with a second-order stderr.
EntropyEstimate monte_carlo_entropy(const System& system, const Partition& alpha, std::size_t depth,
                                    std::span<const Point> pool);

}  // namespace koopdim
