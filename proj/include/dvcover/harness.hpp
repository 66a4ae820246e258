#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "dvcover/capacity.hpp"
#include "dvcover/coversim.hpp"
#include "dvcover/density.hpp"
#include "dvcover/sequences.hpp"
#include "dvcover/verdict.hpp"

namespace dvcover {

using Cell = std::variant<std::monostate, bool, std::uint64_t, double, std::string>;

struct Table {
  std::vector<std::string> columns;
  std::vector<std::vector<Cell>> rows;

  void add_row(std::vector<Cell> row);
  friend bool operator==(const Table&, const Table&) = default;
};

enum class Format { csv, jsonl };
Format parse_format(std::string_view name);

void emit(const Table& table, Format format, std::ostream& out);
/// Throws ValidationError when the path cannot be written.
void emit(const Table& table, Format format, const std::string& path);
/// Companion reader for emit(..., Format::jsonl, ...); columns follow the first record.
Table read_jsonl(std::istream& in);

/// One record per trial: {seed, cover_time, trajectory: [{n, uncovered}]}.
void write_trials_jsonl(std::span<const TrialResult> trials, std::ostream& out);
std::vector<TrialResult> read_trials_jsonl(std::istream& in);
/// Long form: one row per (trial, checkpoint).
Table trials_table(std::span<const TrialResult> trials);

struct SweepConfig {
  PiecewisePolyDensity density = uniform_density();
  ArcSet target = ArcSet::full();
  std::vector<double> c_grid;
  std::vector<std::uint64_t> n_grid;  // Monte Carlo checkpoints
  std::uint64_t trials = 0;
  std::uint64_t seed = 0;
  int threads = 1;
  bool exact = true;
  double fit_lo = 1e3;
  double fit_hi = 1e5;
  int fit_per_decade = 8;
};

struct SweepCell {
  double c = 0.0;
  std::uint64_t n = 0;
  std::optional<double> mc_mean;
  std::optional<double> mc_se;
  std::optional<double> exact;
  std::uint64_t trials = 0;
  std::uint64_t seed_first = 0;
  std::uint64_t seed_last = 0;
  double cover_fraction = 0.0;
};

struct SweepFit {
  double c = 0.0;
  std::string source;  // exact | mc
  double slope = 0.0;
  double slope_stderr = 0.0;
  double ci_lo = 0.0;  // 95% normal interval
  double ci_hi = 0.0;
  double predicted = 0.0;  // -c m_f
  std::size_t points = 0;
};

struct SweepResult {
  double m_f = 0.0;
  std::vector<SweepCell> cells;
  std::vector<SweepFit> fits;

  [[nodiscard]] Table cells_table() const;
  [[nodiscard]] Table fits_table() const;
};

SweepResult phase_transition_sweep(const SweepConfig& config);

enum class CoverVerdict { covered, not_covered, hypotheses_unmet, inconclusive };
std::string_view to_string(CoverVerdict v);

struct CriteriaOptions {
  std::vector<std::uint64_t> checkpoints = {1000, 10000, 100000};
  std::vector<std::uint64_t> truncations = {1000, 10000, 100000};
};

struct CriteriaReport {
  std::string density;
  std::string lengths;
  double m_f = 0.0;
  ArcSet K_f;
  TriState dom1 = TriState::unknown;
  Verdict ell1 = Verdict::unknown;
  Verdict ell2 = Verdict::unknown;
  std::vector<double> a_values;
  std::vector<Verdict> shepp;
  Verdict shepp_at_mf = Verdict::unknown;
  Verdict shepp_above_mf = Verdict::unknown;  // at m_f (1 + 1e-6)
  std::vector<FlatnessReport> flatness;
  std::vector<PointSeriesReport> point_series;
  std::optional<CapacityReport> capacity;
  std::string route;
  CoverVerdict verdict = CoverVerdict::inconclusive;
  std::vector<std::string> trace;

  /// key, value rows.
  [[nodiscard]] Table to_table() const;
};

CriteriaReport criteria_report(const PiecewisePolyDensity& f, const LengthSequence& lengths,
                               std::span<const double> a_list, const CriteriaOptions& opts = {});

struct Check {
  std::string name;
  bool passed = false;
  std::string detail;
};

struct NamedTable {
  std::string name;
  Table table;
};

struct RecipeReport {
  std::string recipe;
  std::vector<NamedTable> tables;  // the first is the primary output
  std::vector<Check> checks;

  [[nodiscard]] bool all_passed() const;
  [[nodiscard]] Table checks_table() const;
};

enum class Section5Demo { tent_c2_not_c1, logharmonic_c1_not_c2 };

RecipeReport section5_c1c2(Section5Demo demo, std::uint64_t n = 100000);
RecipeReport section6_blocks(int k_max, double c = 2.0);

/// Recipe name plus string overrides; every parameter is validated before compute starts.
struct ExperimentSpec {
  std::string recipe;
  std::map<std::string, std::string> overrides;
  std::uint64_t seed = 0;
  int threads = 1;
};

const std::vector<std::string>& recipe_names();
/// Throws ValidationError for unknown recipes or override keys.
void validate(const ExperimentSpec& spec);
RecipeReport run_experiment(const ExperimentSpec& spec);

}  // namespace dvcover
