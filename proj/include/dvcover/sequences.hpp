#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "dvcover/verdict.hpp"

namespace dvcover {

enum class Family { harmonic, power, constant, log_harmonic, block_a, block_b, explicit_table };

std::string_view to_string(Family f);

/// Largest length any family emits; formulas reaching 1 are clamped here.
inline constexpr double kLengthCap = 0.99;

struct BlockInfo {
  enum class Kind { constant, harmonic };

  Kind kind = Kind::constant;
  int index = 0;
  double log_start = 0.0;  // ln N_{b-1}; the block covers (N_{b-1}, N_b]
  double log_end = 0.0;
  std::optional<std::uint64_t> start;  // exact when representable
  std::optional<std::uint64_t> end;
  double log_size = 0.0;
  double value = 0.0;      // constant blocks
  double log_value = 0.0;  // ln of value, finite even when value underflows
  double c = 0.0;          // harmonic blocks: l_n = min(c/n, cap)
  double cap = 0.0;
  bool clamped = false;
  double sum_end = 0.0;   // S at N_b
  double ell2_end = 0.0;  // sum of l_n^2 up to N_b
  double s2_ratio_end = 0.0;
  double shepp_log_lower_end = 0.0;  // log of a lower bound on the Shepp partial at N_b
  bool shepp_exact = false;          // true when the bound is the direct partial sum
};

struct BlockSchedule {
  std::vector<BlockInfo> blocks;
  double shepp_a = 1.0;  // intensity used for the Shepp fields
  std::vector<std::string> notes;
};

/// Nonincreasing lengths 0 < l_n < 1, n >= 1.
class LengthSequence {
 public:
  static LengthSequence harmonic(double c);
  static LengthSequence power(double a, double t);
  static LengthSequence constant(double ell);
  static LengthSequence log_harmonic();
  /// Finite table l_1..l_m, optionally continued by `tail` evaluated at the absolute index.
  static LengthSequence explicit_table(std::vector<double> table,
                                       std::optional<LengthSequence> tail = std::nullopt);

  [[nodiscard]] double operator()(std::uint64_t n) const;
  /// l_1..l_N, validated for range and monotonicity.
  [[nodiscard]] std::vector<double> prefix(std::uint64_t n) const;
  [[nodiscard]] std::optional<std::uint64_t> horizon() const;

  [[nodiscard]] Family family() const { return family_; }
  [[nodiscard]] double p0() const { return p0_; }
  [[nodiscard]] double p1() const { return p1_; }
  [[nodiscard]] const BlockSchedule* schedule() const { return schedule_.get(); }
  [[nodiscard]] std::string describe() const;

 private:
  friend LengthSequence block_sequence_A(int k_max);
  friend LengthSequence block_sequence_B(int k_max, double c);

  Family family_ = Family::harmonic;
  double p0_ = 0.0;
  double p1_ = 0.0;
  std::shared_ptr<const BlockSchedule> schedule_;
  std::shared_ptr<const std::vector<double>> table_;
  std::shared_ptr<const LengthSequence> tail_;
};

/// The block schedule behind the necessity counterexample: l = ln n_k / n_k on block k.
LengthSequence block_sequence_A(int k_max);
/// Constant-type blocks interleaved with harmonic blocks c/n (every odd block from 3 on).
LengthSequence block_sequence_B(int k_max, double c);

struct PrefixTable {
  std::vector<double> ell;  // ell[n-1] = l_n
  std::vector<double> sum;  // sum[n] = S_n, sum[0] = 0
};

PrefixTable make_prefix_table(const LengthSequence& seq, std::uint64_t n);

/// log of sum_{n<=N} n^-2 exp(a S_n).
double shepp_log_partial(const LengthSequence& seq, double a, std::uint64_t n);
std::vector<double> shepp_log_partials(const LengthSequence& seq, double a,
                                       std::span<const std::uint64_t> checkpoints);
Verdict shepp_classify(const LengthSequence& seq, double a);

/// Upper bound on sum_{n>N} n^-2 exp(a S_n) when the family's closed form gives one.
std::optional<double> shepp_tail_bound(const LengthSequence& seq, double a, std::uint64_t n);

/// Lower bound delta with P(10N)/P(N) > 1 + delta for divergent cases, N >= 10^4.
std::optional<double> shepp_growth_delta(const LengthSequence& seq, double a);

Verdict ell1_classify(const LengthSequence& seq);
Verdict ell2_classify(const LengthSequence& seq);

struct Lemma34Witness {
  std::uint64_t horizon = 0;
  std::uint64_t count = 0;
  std::vector<std::uint64_t> indices;  // first few witnesses
  std::vector<double> log_terms;       // log n^-2 exp(a S_n) at those indices
  std::vector<double> log_term_floor;  // -2 ln n + a n^(1/3)
  double log_partial = 0.0;
  Verdict ell2 = Verdict::unknown;
};

Lemma34Witness lemma34_check(const LengthSequence& seq, double a, std::uint64_t n);

double s2_ratio(const LengthSequence& seq, std::uint64_t n);

struct S2Report {
  std::vector<std::uint64_t> checkpoints;
  std::vector<double> ratios;
  double max_ratio = 0.0;
  std::optional<double> analytic_limsup;
  TriState s2_holds = TriState::unknown;
};

S2Report s2_limsup_estimate(const LengthSequence& seq, std::span<const std::uint64_t> checkpoints);

struct SeriesDiagnostics {
  std::vector<std::uint64_t> checkpoints;
  std::vector<double> sum_ell;
  std::vector<double> sum_ell2;
  std::vector<double> s2_ratio;
  std::vector<double> a_values;
  std::vector<std::vector<double>> shepp_log;  // [a index][checkpoint]
  Verdict ell1 = Verdict::unknown;
  Verdict ell2 = Verdict::unknown;
  std::vector<Verdict> shepp;
};

SeriesDiagnostics diagnose(const LengthSequence& seq, std::span<const std::uint64_t> checkpoints,
                           std::span<const double> a_values);

/// round(10^(i/per_decade)) for i >= 0 up to n, deduplicated, always ending at n.
std::vector<std::uint64_t> log_checkpoints(std::uint64_t n, int per_decade);

}  // namespace dvcover
