#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <variant>
#include <vector>

#include "dvcover/arc_set.hpp"
#include "dvcover/capacity.hpp"
#include "dvcover/density.hpp"
#include "dvcover/rng.hpp"
#include "dvcover/sequences.hpp"

namespace dvcover {

struct PointTarget {
  std::vector<double> points;
};

/// ArcSet (ArcSet::full() for the whole circle) or a finite list of points.
using Target = std::variant<ArcSet, PointTarget>;

struct TrialConfig {
  PiecewisePolyDensity density = uniform_density();
  LengthSequence lengths = LengthSequence::harmonic(1.0);
  std::uint64_t n_max = 0;
  Target target = ArcSet::full();
  std::uint64_t seed = 0;
  std::vector<std::uint64_t> checkpoints;
};

struct TrajectoryPoint {
  std::uint64_t n = 0;
  double uncovered = 0.0;  // measure for arc targets, fraction of unhit points for point targets
  friend bool operator==(const TrajectoryPoint&, const TrajectoryPoint&) = default;
};

struct TrialResult {
  std::uint64_t seed = 0;
  std::optional<std::uint64_t> cover_time;
  double initial_uncovered = 0.0;
  std::vector<TrajectoryPoint> trajectory;
  std::vector<std::optional<std::uint64_t>> first_hits;  // point targets, in input order
  std::uint64_t steps = 0;
  friend bool operator==(const TrialResult&, const TrialResult&) = default;
};

/// Sorted points with first-hit bookkeeping; hits use |x - centre| < r.
class PointTracker {
 public:
  explicit PointTracker(std::span<const double> points);
  /// Marks points inside the open arc (start, start + length) at step n.
  void hit(double start, double length, std::uint64_t n);
  [[nodiscard]] std::size_t alive() const { return alive_; }
  [[nodiscard]] std::size_t size() const { return xs_.size(); }
  [[nodiscard]] std::vector<std::optional<std::uint64_t>> first_hits() const;

 private:
  void hit_range(double lo, double hi, std::uint64_t n);

  std::vector<double> xs_;
  std::vector<std::size_t> order_;
  std::vector<std::uint64_t> hit_at_;  // 0 = never
  std::size_t alive_ = 0;
};

/// Validated, shareable form of a TrialConfig: the length prefix is tabulated once.
class TrialPlan {
 public:
  explicit TrialPlan(TrialConfig config);
  [[nodiscard]] TrialResult run(std::uint64_t seed) const;
  [[nodiscard]] const TrialConfig& config() const { return config_; }
  [[nodiscard]] const std::vector<double>& lengths() const { return ell_; }

 private:
  TrialConfig config_;
  std::vector<double> ell_;
};

TrialResult run_trial(const TrialConfig& config);

/// Trials use seeds config.seed + i; results are in trial order for any thread count.
std::vector<TrialResult> run_trials(const TrialConfig& config, std::uint64_t trials, int threads = 1);

/// Runs body(i) for i in [0, count) on up to `threads` workers.
void parallel_for(std::uint64_t count, int threads, const std::function<void(std::uint64_t)>& body);

struct QuadratureOptions {
  double relative_tolerance = 1e-6;
  double min_panel = 1e-14;
  std::size_t max_panels = 20000;
};

struct ExpectedUncovered {
  std::vector<std::uint64_t> checkpoints;
  std::vector<double> values;
  std::vector<double> error_estimates;
  std::size_t nodes = 0;
};

/// E[uncovered measure of target after N steps] = integral over target of prod (1 - mu(B(t, r_n))).
ExpectedUncovered expected_uncovered_exact(const PiecewisePolyDensity& f, const LengthSequence& seq,
                                           const ArcSet& target,
                                           std::span<const std::uint64_t> checkpoints,
                                           const QuadratureOptions& opts = {});

struct BillardConfig {
  PiecewisePolyDensity density = uniform_density();
  LengthSequence lengths = LengthSequence::harmonic(0.5);
  SupportMeasure sigma = SupportMeasure::atom(0.0);
  std::vector<std::uint64_t> checkpoints;
  std::uint64_t trials = 1000;
  std::uint64_t seed = 0;
  double grid_width = 1.0 / 256.0;  // discretization of continuous sigma
  int threads = 1;
};

struct BillardMoment {
  std::uint64_t n = 0;
  double mean = 0.0;
  double mean_se = 0.0;
  double second = 0.0;
  double second_se = 0.0;
  std::optional<double> second_closed_form;  // single-atom sigma
};

std::vector<BillardMoment> billard_moments(const BillardConfig& config);

/// mu = alpha_0 mu0 + alpha_1 mu1 with per-step Bernoulli(alpha_1) marks.
class CoupledModel {
 public:
  /// Unnormalized sub-densities whose sum is a probability density.
  static CoupledModel from_parts(std::vector<Piece> mu0, std::vector<Piece> mu1);
  /// mu_1 = f restricted to U, mu_0 = the rest.
  static CoupledModel restrict_to(const PiecewisePolyDensity& f, const ArcSet& U);
  /// nu_1 = mu restricted to U, nu_0 = (nu - mu) on U plus nu off U.
  static CoupledModel comparison(const PiecewisePolyDensity& mu, const PiecewisePolyDensity& nu,
                                 const ArcSet& U);
  /// alpha_1 = 1 with mu1 = f itself.
  static CoupledModel trivial(const PiecewisePolyDensity& f);

  [[nodiscard]] double alpha1() const { return alpha1_; }
  [[nodiscard]] const PiecewisePolyDensity& mixture() const { return mixture_; }
  [[nodiscard]] const std::optional<PiecewisePolyDensity>& part0() const { return part0_; }
  [[nodiscard]] const std::optional<PiecewisePolyDensity>& part1() const { return part1_; }
  /// Centre and mark of step n.
  [[nodiscard]] double draw(const CounterRng& rng, std::uint64_t n, bool* mark) const;

 private:
  std::optional<PiecewisePolyDensity> part0_;
  std::optional<PiecewisePolyDensity> part1_;
  double alpha1_ = 1.0;
  PiecewisePolyDensity mixture_ = uniform_density();
};

struct CoupledTrialResult {
  TrialResult full;
  std::optional<std::uint64_t> lambda_cover_time;  // covering by marked steps only
  std::vector<TrajectoryPoint> lambda_trajectory;
  std::uint64_t marked_steps = 0;
  std::vector<std::uint8_t> marks;  // filled when requested
};

CoupledTrialResult run_coupled_trial(const CoupledModel& model, const LengthSequence& lengths,
                                     std::uint64_t n_max, const Target& target, std::uint64_t seed,
                                     std::span<const std::uint64_t> checkpoints,
                                     bool record_marks = false);

std::vector<double> coupled_samples(const CoupledModel& model, std::size_t count, std::uint64_t seed);

struct ComparisonConfig {
  PiecewisePolyDensity mu = uniform_density();
  PiecewisePolyDensity nu = uniform_density();
  ArcSet U;
  ArcSet K;
  LengthSequence lengths = LengthSequence::harmonic(1.0);
  std::vector<std::uint64_t> checkpoints;
  std::uint64_t trials = 1000;
  std::uint64_t seed = 0;
  int threads = 1;
};

struct ComparisonRow {
  std::uint64_t n = 0;
  double p_mu = 0.0;
  double se_mu = 0.0;
  double p_nu = 0.0;
  double se_nu = 0.0;
  double se_diff = 0.0;  // paired
  bool ordered = false;  // p_nu >= p_mu - 2 se_diff
};

struct ComparisonReport {
  std::vector<ComparisonRow> rows;
  double alpha1 = 0.0;
  bool lambda_identical = true;  // marked-step coverings agree seed by seed
  bool all_ordered = true;
};

ComparisonReport comparison_experiment(const ComparisonConfig& config);

}  // namespace dvcover
