#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "dvcover/arc_set.hpp"
#include "dvcover/sequences.hpp"
#include "dvcover/verdict.hpp"

namespace dvcover {

/// Affine piece on [lo, hi) given by its endpoint values.
struct Piece {
  double lo = 0.0;
  double hi = 0.0;
  double v_lo = 0.0;
  double v_hi = 0.0;

  [[nodiscard]] double width() const { return hi - lo; }
  [[nodiscard]] double slope() const { return (v_hi - v_lo) / (hi - lo); }
  [[nodiscard]] bool is_constant() const { return v_lo == v_hi; }
  /// f(x) - level for x in [lo, hi], interpolated from the nearer endpoint.
  [[nodiscard]] double excess_at(double x, double level) const {
    if (v_lo == v_hi) return v_lo - level;
    if (x - lo <= hi - x) return (v_lo - level) + (v_hi - v_lo) * ((x - lo) / (hi - lo));
    return (v_hi - level) - (v_hi - v_lo) * ((hi - x) / (hi - lo));
  }
  [[nodiscard]] double at(double x) const { return excess_at(x, 0.0); }
  /// Integral of f - level over [a, b] within the piece.
  [[nodiscard]] double excess_integral(double a, double b, double level) const {
    return (b - a) * excess_at(0.5 * (a + b), level);
  }
  friend bool operator==(const Piece&, const Piece&) = default;
};

/// Piece in the input format: poly coefficients in the local coordinate x - from.
/// A piece with from > to wraps across 0.
struct RawPiece {
  double from = 0.0;
  double to = 0.0;
  std::vector<double> poly;
};

/// Probability density on the circle, affine on finitely many pieces tiling [0,1).
class PiecewisePolyDensity {
 public:
  static PiecewisePolyDensity from_pieces(std::vector<Piece> pieces, std::string name = {});
  static PiecewisePolyDensity from_raw(std::span<const RawPiece> raw, std::string name = {});
  /// Scales nonnegative pieces to unit mass.
  static PiecewisePolyDensity normalized(std::vector<Piece> pieces, std::string name = {});

  [[nodiscard]] std::span<const Piece> pieces() const { return pieces_; }
  [[nodiscard]] std::vector<double> breakpoints() const;
  [[nodiscard]] std::size_t piece_index(double x) const;
  /// Right-continuous value.
  [[nodiscard]] double value(double x) const;
  /// Integral of f over [a, b], 0 <= a <= b <= 1.
  [[nodiscard]] double integrate(double a, double b) const;
  [[nodiscard]] double excess(double a, double b, double level) const;
  [[nodiscard]] double arc_mass(double start, double length) const;
  [[nodiscard]] double arc_excess(double start, double length, double level) const;
  [[nodiscard]] double mass(const ArcSet& set) const;
  [[nodiscard]] double ess_sup() const;
  [[nodiscard]] double ess_inf() const;
  [[nodiscard]] double cdf(double x) const;
  /// inf{t : M(t) >= u}, in [0,1].
  [[nodiscard]] double inverse_cdf(double u) const;

  [[nodiscard]] const std::string& name() const { return name_; }
  [[nodiscard]] const std::vector<std::string>& caveats() const { return caveats_; }
  void add_caveat(std::string c) { caveats_.push_back(std::move(c)); }

 private:
  std::vector<Piece> pieces_;
  std::vector<double> los_;
  std::vector<double> cum_;  // cum_[i] = M(lo_i), cum_.back() = 1
  std::string name_;
  std::vector<std::string> caveats_;
};

PiecewisePolyDensity uniform_density();
/// |x| + 3/4 on [-1/2, 1/2).
PiecewisePolyDensity tent_density();
/// `lo` on [0, split), `hi` on [split, 1).
PiecewisePolyDensity step_density(double lo, double hi, double split);
/// Finite-depth staircase over fat Cantor sets, renormalized; depth in [1, 20].
PiecewisePolyDensity fat_cantor_density(int depth);

double mu_ball(const PiecewisePolyDensity& f, double x, double r);
double ess_inf_interval(const PiecewisePolyDensity& f, Arc interval);
double local_ess_inf(const PiecewisePolyDensity& f, double x);
double local_ess_sup(const PiecewisePolyDensity& f, double x);
ArcSet compute_Kf(const PiecewisePolyDensity& f);

/// One-sided structure of f at x.
struct LocalStructure {
  double left_value = 0.0;
  double right_value = 0.0;
  double left_slope = 0.0;
  double right_slope = 0.0;
  double reach = 0.0;  // f is affine on each side within this distance
  bool at_breakpoint = false;
};

LocalStructure local_structure(const PiecewisePolyDensity& f, double x);

struct DensityAnalysis {
  double m_f = 0.0;
  ArcSet K_f;
  TriState dom1_holds = TriState::unknown;
  std::vector<double> translate_offsets;
  std::vector<std::string> warnings;
};

DensityAnalysis analyze(const PiecewisePolyDensity& f, std::vector<double> translate_offsets = {});
TriState dom1_check(const PiecewisePolyDensity& f, const DensityAnalysis& analysis,
                    std::vector<std::string>* warnings = nullptr);

struct FlatnessReport {
  double x = 0.0;
  std::vector<std::uint64_t> checkpoints;
  std::vector<double> partial_sums;
  Verdict classification = Verdict::unknown;
  std::optional<double> bound_constant;     // term_n <= C r_n^2
  std::optional<double> divergence_kappa;   // term_n >= kappa l_n eventually
  std::string rationale;
};

double flatness_term(const PiecewisePolyDensity& f, double m_f, double x, double ell);

FlatnessReport flatness_partial(const PiecewisePolyDensity& f, const DensityAnalysis& analysis,
                                double x, const LengthSequence& seq,
                                std::span<const std::uint64_t> checkpoints);

struct PointSeriesReport {
  std::uint64_t n = 0;
  double partial_sum = 0.0;
  Verdict classification = Verdict::unknown;
  std::string rationale;
};

PointSeriesReport borel_cantelli_point(const PiecewisePolyDensity& f, double x,
                                       const LengthSequence& seq, std::uint64_t n);

/// Piecewise operations on unnormalized nonnegative affine functions tiling [0,1).
std::vector<Piece> refine_pieces(std::span<const Piece> pieces, std::span<const double> cuts);
std::vector<Piece> restrict_pieces(std::span<const Piece> pieces, const ArcSet& set, bool inside);
std::vector<Piece> difference_pieces(std::span<const Piece> a, std::span<const Piece> b);
double pieces_mass(std::span<const Piece> pieces);
/// a <= b at every point of `set` (checked on a common refinement).
bool dominated_on(std::span<const Piece> a, std::span<const Piece> b, const ArcSet& set,
                  double tol = 1e-12);

}  // namespace dvcover
