#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "dvcover/arc_set.hpp"
#include "dvcover/sequences.hpp"
#include "dvcover/verdict.hpp"

namespace dvcover {

inline constexpr double kLogOverflow = 700.0;

/// sum_{n<=N} (l_n - u)_+ = S_{N(u)} - N(u) u with N(u) = #{n <= N : l_n > u}.
double kernel_sum(const PrefixTable& table, double u, std::uint64_t n);
double kernel_sum(const LengthSequence& seq, double u, std::uint64_t n);

/// Phi^(a)(t,s) = exp(a sum_{n<=N} (l_n - |t-s|)_+), carried in log space.
class KernelPhi {
 public:
  KernelPhi(double a, const LengthSequence& seq, std::uint64_t truncation);
  KernelPhi(double a, std::shared_ptr<const PrefixTable> table, std::uint64_t truncation);

  [[nodiscard]] double a() const { return a_; }
  [[nodiscard]] std::uint64_t truncation() const { return n_; }
  [[nodiscard]] const PrefixTable& table() const { return *table_; }
  [[nodiscard]] std::uint64_t count_above(double u) const;
  [[nodiscard]] double kernel_sum(double u) const;
  [[nodiscard]] double log_phi_at(double u) const { return a_ * kernel_sum(u); }
  [[nodiscard]] double log_phi(double t, double s) const;

 private:
  double a_;
  std::shared_ptr<const PrefixTable> table_;
  std::uint64_t n_;
};

struct PhiValue {
  double log_value = 0.0;
  [[nodiscard]] bool overflow() const { return log_value > kLogOverflow; }
  [[nodiscard]] double value() const;
};

PhiValue phi_eval(const KernelPhi& kernel, double t, double s);

/// Uniform mass `weight` on [start, start + length]; length 0 is an atom.
struct MeasureComponent {
  double start = 0.0;
  double length = 0.0;
  double weight = 0.0;
};

class SupportMeasure {
 public:
  enum class Kind { atoms, lebesgue, weighted_grid };

  static SupportMeasure atoms(std::vector<double> points, std::vector<double> weights);
  static SupportMeasure atom(double x);
  static SupportMeasure lebesgue_on(const ArcSet& set);
  /// Mass weights[i] spread uniformly over the cell of width `cell_width` centred at points[i].
  static SupportMeasure weighted_grid(std::vector<double> points, std::vector<double> weights,
                                      double cell_width);

  [[nodiscard]] Kind kind() const { return kind_; }
  [[nodiscard]] const std::vector<MeasureComponent>& components() const { return components_; }
  [[nodiscard]] const ArcSet& carrier() const { return carrier_; }
  [[nodiscard]] std::string describe() const;
  /// Point masses approximating the measure: uniform parts split into cells of width <= h.
  [[nodiscard]] std::vector<MeasureComponent> discretize(double h) const;

 private:
  Kind kind_ = Kind::atoms;
  std::vector<MeasureComponent> components_;
  ArcSet carrier_;
};

struct EnergyEstimate {
  double log_value = 0.0;
  std::optional<double> lower_log;
  std::optional<double> upper_log;
  bool infinite = false;  // log value above the overflow threshold
  bool inconclusive = false;
  std::uint64_t truncation = 0;
  std::size_t resolution = 0;
};

struct EnergyOptions {
  std::size_t bracket_cells = 2000;
  double max_bracket_log_width = 1.0;
};

/// Exact energy for measures built from uniform pieces and atoms, with independent
/// monotone Riemann brackets.
EnergyEstimate energy(const KernelPhi& kernel, const SupportMeasure& sigma,
                      const EnergyOptions& opts = {});

std::vector<EnergyEstimate> energy_ladder(double a, const LengthSequence& seq,
                                          const SupportMeasure& sigma,
                                          std::span<const std::uint64_t> truncations,
                                          const EnergyOptions& opts = {});

struct LadderVerdict {
  Verdict verdict = Verdict::unknown;  // converges = bounded evidence
  double last_ratio = 0.0;             // ratio of the last two increments
};

/// Boundedness evidence from a sequence of log values at increasing truncations.
LadderVerdict classify_ladder(std::span<const double> log_values);

inline const std::vector<std::uint64_t>& default_truncations() {
  static const std::vector<std::uint64_t> t{1000, 10000, 100000, 1000000};
  return t;
}

struct Lemma33Report {
  std::vector<std::uint64_t> truncations;
  std::vector<double> energy_log;
  std::vector<double> shepp_log;
  LadderVerdict energy;
  LadderVerdict shepp;
  Verdict analytic = Verdict::unknown;
  bool agree = false;
};

Lemma33Report lemma33_equiv(const LengthSequence& seq, double a, const ArcSet& F,
                            std::span<const std::uint64_t> truncations);

struct CapacityReport {
  enum class Outcome { diverges_for_tested, finite_witness, inconclusive };
  Outcome outcome = Outcome::inconclusive;
  std::optional<std::string> witness;
  std::vector<std::string> measures;
  std::vector<std::vector<double>> energy_log;  // [measure][truncation]
  std::vector<LadderVerdict> verdicts;
  std::string caveat;
};

std::string_view to_string(CapacityReport::Outcome o);

CapacityReport cap_zero_heuristic(double a, const LengthSequence& seq, const ArcSet& F,
                                  std::span<const std::uint64_t> truncations);

}  // namespace dvcover
