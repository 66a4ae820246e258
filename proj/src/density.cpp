#include "dvcover/density.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "dvcover/errors.hpp"
#include "dvcover/numerics.hpp"

namespace dvcover {

namespace {

constexpr double kSnap = 1e-12;

void check_tiling(std::vector<Piece>& pieces) {
  if (pieces.empty()) throw ValidationError("density: no pieces");
  std::sort(pieces.begin(), pieces.end(),
            [](const Piece& x, const Piece& y) { return x.lo < y.lo; });
  if (std::abs(pieces.front().lo) > kSnap) throw ValidationError("density: pieces must start at 0");
  pieces.front().lo = 0.0;
  for (std::size_t i = 0; i < pieces.size(); ++i) {
    Piece& p = pieces[i];
    if (!std::isfinite(p.lo) || !std::isfinite(p.hi) || !std::isfinite(p.v_lo) ||
        !std::isfinite(p.v_hi)) {
      throw ValidationError("density: non-finite piece");
    }
    if (i + 1 < pieces.size()) {
      if (std::abs(p.hi - pieces[i + 1].lo) > kSnap) {
        throw ValidationError("density: pieces leave a gap or overlap near " + std::to_string(p.hi));
      }
      p.hi = pieces[i + 1].lo;
    }
    if (!(p.hi > p.lo)) throw ValidationError("density: empty piece at " + std::to_string(p.lo));
    if (p.v_lo < 0.0 || p.v_hi < 0.0) {
      throw ValidationError("density: negative value on piece at " + std::to_string(p.lo));
    }
  }
  if (std::abs(pieces.back().hi - 1.0) > kSnap) throw ValidationError("density: pieces must end at 1");
  pieces.back().hi = 1.0;
}

}  // namespace

PiecewisePolyDensity PiecewisePolyDensity::from_pieces(std::vector<Piece> pieces, std::string name) {
  check_tiling(pieces);
  const double total = pieces_mass(pieces);
  if (std::abs(total - 1.0) > 1e-12) {
    throw ValidationError("density: total mass " + std::to_string(total) + " differs from 1");
  }
  PiecewisePolyDensity f;
  f.pieces_ = std::move(pieces);
  f.name_ = std::move(name);
  f.los_.reserve(f.pieces_.size());
  f.cum_.reserve(f.pieces_.size() + 1);
  CompensatedSum acc;
  f.cum_.push_back(0.0);
  for (const Piece& p : f.pieces_) {
    f.los_.push_back(p.lo);
    acc.add(p.excess_integral(p.lo, p.hi, 0.0));
    f.cum_.push_back(acc.value());
  }
  // absorb the (<= 1e-12) normalization residue into the last cumulative value
  f.cum_.back() = 1.0;
  return f;
}

PiecewisePolyDensity PiecewisePolyDensity::normalized(std::vector<Piece> pieces, std::string name) {
  check_tiling(pieces);
  const double total = pieces_mass(pieces);
  if (!(total > 0.0)) throw ValidationError("density: zero total mass");
  for (Piece& p : pieces) {
    p.v_lo /= total;
    p.v_hi /= total;
  }
  return from_pieces(std::move(pieces), std::move(name));
}

PiecewisePolyDensity PiecewisePolyDensity::from_raw(std::span<const RawPiece> raw, std::string name) {
  std::vector<Piece> pieces;
  for (const RawPiece& r : raw) {
    if (r.poly.empty() || r.poly.size() > 2) {
      throw ValidationError("density: poly must have 1 or 2 coefficients");
    }
    if (!(r.from >= 0.0 && r.from < 1.0 && r.to > 0.0 && r.to <= 1.0) || r.from == r.to) {
      throw ValidationError("density: piece bounds must satisfy 0 <= from < 1, 0 < to <= 1, from != to");
    }
    const double c0 = r.poly[0];
    const double c1 = r.poly.size() == 2 ? r.poly[1] : 0.0;
    if (r.from < r.to) {
      pieces.push_back(Piece{r.from, r.to, c0, c0 + c1 * (r.to - r.from)});
    } else {
      const double mid = c0 + c1 * (1.0 - r.from);
      pieces.push_back(Piece{r.from, 1.0, c0, mid});
      pieces.push_back(Piece{0.0, r.to, mid, c0 + c1 * (1.0 - r.from + r.to)});
    }
  }
  return from_pieces(std::move(pieces), std::move(name));
}

std::vector<double> PiecewisePolyDensity::breakpoints() const { return los_; }

std::size_t PiecewisePolyDensity::piece_index(double x) const {
  auto it = std::upper_bound(los_.begin(), los_.end(), x);
  if (it == los_.begin()) return 0;
  return static_cast<std::size_t>(it - los_.begin()) - 1;
}

double PiecewisePolyDensity::value(double x) const {
  x = wrap01(x);
  return pieces_[piece_index(x)].at(x);
}

double PiecewisePolyDensity::excess(double a, double b, double level) const {
  if (!(a >= 0.0 && b <= 1.0 && a <= b)) throw DomainError("integrate: need 0 <= a <= b <= 1");
  if (a == b) return 0.0;
  double total = 0.0;
  for (std::size_t i = piece_index(a); i < pieces_.size() && pieces_[i].lo < b; ++i) {
    const Piece& p = pieces_[i];
    const double lo = std::max(a, p.lo);
    const double hi = std::min(b, p.hi);
    if (hi > lo) total += p.excess_integral(lo, hi, level);
  }
  return total;
}

double PiecewisePolyDensity::integrate(double a, double b) const { return excess(a, b, 0.0); }

double PiecewisePolyDensity::arc_excess(double start, double length, double level) const {
  if (!(length >= 0.0)) throw DomainError("arc: negative length");
  if (length >= 1.0) return excess(0.0, 1.0, level);
  if (length == 0.0) return 0.0;
  // integrate in the unwrapped frame around start: shifted piece bounds near 0 stay exact
  const double s = (start >= -1.0 && start < 1.0) ? start : wrap01(start);
  const double e = s + length;
  double total = 0.0;
  for (int k = s < 0.0 ? -1 : 0; k <= 1 && static_cast<double>(k) < e; ++k) {
    const double shift = k;
    std::size_t i = piece_index(std::max(s - shift, 0.0));
    if (i > 0) --i;
    for (; i < pieces_.size() && pieces_[i].lo + shift < e; ++i) {
      const Piece& p = pieces_[i];
      const double plo = p.lo + shift;
      const double phi = p.hi + shift;
      const double lo = std::max(s, plo);
      const double hi = std::min(e, phi);
      if (!(hi > lo)) continue;
      const double mid = 0.5 * (lo + hi);
      double v;
      if (p.is_constant()) {
        v = p.v_lo - level;
      } else if (mid - plo <= phi - mid) {
        v = (p.v_lo - level) + (p.v_hi - p.v_lo) * ((mid - plo) / p.width());
      } else {
        v = (p.v_hi - level) - (p.v_hi - p.v_lo) * ((phi - mid) / p.width());
      }
      total += (hi - lo) * v;
    }
  }
  return total;
}

double PiecewisePolyDensity::arc_mass(double start, double length) const {
  return arc_excess(start, length, 0.0);
}

double PiecewisePolyDensity::mass(const ArcSet& set) const {
  CompensatedSum total;
  for (const Arc& a : set.arcs()) total.add(arc_mass(a.start, a.length));
  return total.value();
}

double PiecewisePolyDensity::ess_sup() const {
  double m = 0.0;
  for (const Piece& p : pieces_) m = std::max({m, p.v_lo, p.v_hi});
  return m;
}

double PiecewisePolyDensity::ess_inf() const {
  double m = pieces_.front().v_lo;
  for (const Piece& p : pieces_) m = std::min({m, p.v_lo, p.v_hi});
  return m;
}

double PiecewisePolyDensity::cdf(double x) const {
  if (!(x >= 0.0 && x <= 1.0)) throw DomainError("cdf: x must lie in [0,1]");
  if (x == 1.0) return 1.0;
  const std::size_t i = piece_index(x);
  const Piece& p = pieces_[i];
  return cum_[i] + p.excess_integral(p.lo, x, 0.0);
}

double PiecewisePolyDensity::inverse_cdf(double u) const {
  if (!(u >= 0.0 && u <= 1.0)) throw DomainError("inverse_cdf: u must lie in [0,1]");
  if (u == 0.0) return 0.0;
  const auto it = std::lower_bound(cum_.begin() + 1, cum_.end(), u);
  const auto i = static_cast<std::size_t>(it - (cum_.begin() + 1));
  const Piece& p = pieces_[std::min(i, pieces_.size() - 1)];
  const double delta = u - cum_[i];
  if (delta <= 0.0) return p.lo;
  const double s = p.slope();
  double tau;
  if (s == 0.0) {
    tau = delta / p.v_lo;
  } else {
    const double disc = std::max(p.v_lo * p.v_lo + 2.0 * s * delta, 0.0);
    tau = 2.0 * delta / (p.v_lo + std::sqrt(disc));
  }
  if (!(tau >= 0.0)) tau = 0.0;
  return p.lo + std::min(tau, p.hi - p.lo);
}

PiecewisePolyDensity uniform_density() {
  return PiecewisePolyDensity::from_pieces({Piece{0.0, 1.0, 1.0, 1.0}}, "uniform");
}

PiecewisePolyDensity tent_density() {
  return PiecewisePolyDensity::from_pieces(
      {Piece{0.0, 0.5, 0.75, 1.25}, Piece{0.5, 1.0, 1.25, 0.75}}, "tent");
}

PiecewisePolyDensity step_density(double lo, double hi, double split) {
  if (!(split > 0.0 && split < 1.0)) throw DomainError("step: split must lie in (0,1)");
  return PiecewisePolyDensity::from_pieces(
      {Piece{0.0, split, lo, lo}, Piece{split, 1.0, hi, hi}},
      "step:" + std::to_string(lo) + ":" + std::to_string(hi) + ":" + std::to_string(split));
}

PiecewisePolyDensity fat_cantor_density(int depth) {
  if (depth < 1 || depth > 20) throw DomainError("fatcantor: depth must lie in [1, 20]");
  std::vector<Piece> pieces;
  const double tail_hi = std::ldexp(1.0, -depth);
  const double tail_value = 1.0 / (depth + 1);
  pieces.push_back(Piece{0.0, tail_hi, tail_value, tail_value});
  for (int n = depth - 1; n >= 0; --n) {
    const int steps = depth - n;
    std::vector<std::pair<double, double>> keep{{0.0, 1.0}};
    std::vector<std::pair<double, double>> gaps;
    for (int k = 0; k < steps; ++k) {
      const double g = std::ldexp(1.0, -2 * (k + 1));
      std::vector<std::pair<double, double>> next;
      next.reserve(keep.size() * 2);
      for (const auto& [a, b] : keep) {
        const double mid = 0.5 * (a + b);
        next.emplace_back(a, mid - 0.5 * g);
        next.emplace_back(mid + 0.5 * g, b);
        gaps.emplace_back(mid - 0.5 * g, mid + 0.5 * g);
      }
      keep = std::move(next);
    }
    const double base = 1.0 / (n + 1);
    const double scale = std::ldexp(1.0, -(n + 1));
    auto map = [&](double y) { return scale * (1.0 + y); };
    for (const auto& [a, b] : keep) pieces.push_back(Piece{map(a), map(b), base, base});
    for (const auto& [a, b] : gaps) pieces.push_back(Piece{map(a), map(b), 1.0 + base, 1.0 + base});
  }
  auto f = PiecewisePolyDensity::normalized(std::move(pieces), "fatcantor:" + std::to_string(depth));
  f.add_caveat("finite-depth approximation: the infinite-depth staircase has K_f = {0} and fails "
               "condition dom1, which no finite depth reproduces");
  return f;
}

double mu_ball(const PiecewisePolyDensity& f, double x, double r) {
  if (!(r > 0.0 && r < 0.5)) throw DomainError("mu_ball: r must lie in (0, 1/2)");
  return f.arc_mass(x - r, 2.0 * r);
}

double ess_inf_interval(const PiecewisePolyDensity& f, Arc interval) {
  if (!(interval.length > 0.0)) throw DomainError("ess_inf_interval: empty arc");
  if (interval.length >= 1.0) return f.ess_inf();
  const double s = wrap01(interval.start);
  const double e = s + interval.length;
  double best = std::numeric_limits<double>::infinity();
  auto scan = [&](double a, double b) {
    if (!(b > a)) return;
    for (std::size_t i = f.piece_index(a); i < f.pieces().size() && f.pieces()[i].lo < b; ++i) {
      const Piece& p = f.pieces()[i];
      const double lo = std::max(a, p.lo);
      const double hi = std::min(b, p.hi);
      if (hi > lo) best = std::min({best, p.at(lo), p.at(hi)});
    }
  };
  scan(s, std::min(e, 1.0));
  if (e > 1.0) scan(0.0, e - 1.0);
  return best;
}

LocalStructure local_structure(const PiecewisePolyDensity& f, double x) {
  x = wrap01(x);
  const auto pieces = f.pieces();
  const std::size_t i = f.piece_index(x);
  const Piece& p = pieces[i];
  LocalStructure ls;
  if (x == p.lo) {
    const Piece& left = pieces[(i + pieces.size() - 1) % pieces.size()];
    ls.at_breakpoint = true;
    ls.left_value = left.v_hi;
    ls.left_slope = left.slope();
    ls.right_value = p.v_lo;
    ls.right_slope = p.slope();
    ls.reach = std::min(left.width(), p.width());
  } else {
    ls.left_value = ls.right_value = p.at(x);
    ls.left_slope = ls.right_slope = p.slope();
    ls.reach = std::min(x - p.lo, p.hi - x);
  }
  ls.reach = std::min(ls.reach, 0.5);
  return ls;
}

double local_ess_inf(const PiecewisePolyDensity& f, double x) {
  const LocalStructure ls = local_structure(f, x);
  return std::min(ls.left_value, ls.right_value);
}

double local_ess_sup(const PiecewisePolyDensity& f, double x) {
  const LocalStructure ls = local_structure(f, x);
  return std::max(ls.left_value, ls.right_value);
}

ArcSet compute_Kf(const PiecewisePolyDensity& f) {
  const double m = f.ess_inf();
  std::vector<Arc> arcs;
  for (const Piece& p : f.pieces()) {
    if (p.v_lo == m && p.v_hi == m) {
      arcs.push_back(Arc{p.lo, p.width()});
      continue;
    }
    if (p.v_lo == m) arcs.push_back(Arc{p.lo, 0.0});
    if (p.v_hi == m) arcs.push_back(Arc{wrap01(p.hi), 0.0});
  }
  return ArcSet::from_arcs(arcs);
}

TriState dom1_check(const PiecewisePolyDensity& f, const DensityAnalysis& analysis,
                    std::vector<std::string>* warnings) {
  // inf over the circle of the local ess sup: interior points of a piece approach
  // both endpoint values, so the infimum is the smallest endpoint value.
  double inf_sup = std::numeric_limits<double>::infinity();
  for (const Piece& p : f.pieces()) inf_sup = std::min({inf_sup, p.v_lo, p.v_hi});
  if (warnings) {
    for (const auto& c : f.caveats()) warnings->push_back(c);
  }
  return inf_sup == analysis.m_f ? TriState::yes : TriState::no;
}

DensityAnalysis analyze(const PiecewisePolyDensity& f, std::vector<double> translate_offsets) {
  DensityAnalysis a;
  a.m_f = f.ess_inf();
  a.K_f = compute_Kf(f);
  a.translate_offsets = std::move(translate_offsets);
  a.dom1_holds = dom1_check(f, a, &a.warnings);
  return a;
}

double flatness_term(const PiecewisePolyDensity& f, double m_f, double x, double ell) {
  return std::abs(f.arc_excess(x - 0.5 * ell, ell, m_f));
}

FlatnessReport flatness_partial(const PiecewisePolyDensity& f, const DensityAnalysis& analysis,
                                double x, const LengthSequence& seq,
                                std::span<const std::uint64_t> checkpoints) {
  if (!std::is_sorted(checkpoints.begin(), checkpoints.end()) ||
      (!checkpoints.empty() && checkpoints.front() < 1)) {
    throw DomainError("flatness: checkpoints must be increasing and >= 1");
  }
  FlatnessReport rep;
  rep.x = wrap01(x);
  const double m = analysis.m_f;
  CompensatedSum sum;
  std::size_t next = 0;
  for (std::uint64_t n = 1; next < checkpoints.size(); ++n) {
    sum.add(flatness_term(f, m, rep.x, seq(n)));
    while (next < checkpoints.size() && checkpoints[next] == n) {
      rep.checkpoints.push_back(n);
      rep.partial_sums.push_back(sum.value());
      ++next;
    }
  }

  const LocalStructure ls = local_structure(f, rep.x);
  const double lo_side = std::min(ls.left_value, ls.right_value);
  const double hi_side = std::max(ls.left_value, ls.right_value);
  const Verdict l1 = ell1_classify(seq);
  const Verdict l2 = ell2_classify(seq);
  const bool constant_family = seq.family() == Family::constant;

  if (lo_side == m && hi_side == m) {
    const double lip = 0.5 * (std::abs(ls.left_slope) + std::abs(ls.right_slope));
    const double c = std::max(lip, 2.0 * (f.ess_sup() - m) / ls.reach);
    rep.bound_constant = c;
    if (constant_family) {
      const double r = 0.5 * seq.p0();
      if (lip == 0.0 && r <= ls.reach) {
        rep.classification = Verdict::converges;
        rep.rationale = "f is constant at m_f within r of x: every term vanishes";
      } else {
        rep.classification = Verdict::diverges;
        rep.divergence_kappa = flatness_term(f, m, rep.x, seq.p0()) / seq.p0();
        rep.rationale = "constant lengths: every term equals the first, which is positive";
      }
    } else if (lip == 0.0) {
      rep.classification = Verdict::converges;
      rep.rationale = "f is constant at m_f near x and l_n -> 0: finitely many nonzero terms";
    } else if (l2 == Verdict::converges) {
      rep.classification = Verdict::converges;
      rep.rationale = "Lipschitz point of K_f: term_n <= C r_n^2 and sum l_n^2 converges";
    } else if (l2 == Verdict::diverges) {
      rep.classification = Verdict::diverges;
      rep.rationale = "term_n = (|s_-|+|s_+|)/2 r_n^2 once r_n < reach, and sum l_n^2 diverges";
    } else {
      rep.rationale = "no closed-form classification of sum l_n^2 for this sequence";
    }
    return rep;
  }

  // one side (or both) strictly above m_f: term_n >= kappa l_n for small r
  const double gap = lo_side > m ? lo_side - m : hi_side - m;
  const double kappa = lo_side > m ? 0.5 * gap : 0.25 * gap;
  if (l1 == Verdict::diverges) {
    rep.classification = Verdict::diverges;
    rep.divergence_kappa = kappa;
    rep.rationale = "local ess sup above m_f: term_n >= kappa l_n eventually and sum l_n diverges";
  } else if (l1 == Verdict::converges) {
    rep.classification = Verdict::converges;
    rep.rationale = "term_n <= (ess sup f - m_f) l_n and sum l_n converges";
  } else {
    rep.rationale = "no closed-form classification of sum l_n for this sequence";
  }
  return rep;
}

PointSeriesReport borel_cantelli_point(const PiecewisePolyDensity& f, double x,
                                       const LengthSequence& seq, std::uint64_t n) {
  if (n < 1) throw DomainError("borel_cantelli_point: N must be >= 1");
  PointSeriesReport rep;
  rep.n = n;
  CompensatedSum sum;
  for (std::uint64_t k = 1; k <= n; ++k) sum.add(f.arc_mass(x - 0.5 * seq(k), seq(k)));
  rep.partial_sum = sum.value();

  const Verdict l1 = ell1_classify(seq);
  const Verdict l2 = ell2_classify(seq);
  const LocalStructure ls = local_structure(f, x);
  const double hi_side = std::max(ls.left_value, ls.right_value);
  if (l1 == Verdict::converges) {
    rep.classification = Verdict::converges;
    rep.rationale = "mu(B(x, r_n)) <= (ess sup f) l_n and sum l_n converges";
  } else if (l1 == Verdict::diverges && hi_side > 0.0) {
    rep.classification = Verdict::diverges;
    rep.rationale = "f is bounded below near x on one side: terms >= kappa l_n, sum l_n diverges";
  } else if (l1 == Verdict::diverges) {
    if (l2 == Verdict::converges) {
      rep.classification = Verdict::converges;
      rep.rationale = "f vanishes at x with finite slopes: terms <= C r_n^2, sum l_n^2 converges";
    } else if (l2 == Verdict::diverges) {
      const bool flat = ls.left_slope == 0.0 && ls.right_slope == 0.0;
      rep.classification = flat ? Verdict::converges : Verdict::diverges;
      rep.rationale = flat ? "f vanishes near x and l_n -> 0" : "terms ~ r_n^2 and sum l_n^2 diverges";
      if (flat && seq.family() == Family::constant && 0.5 * seq.p0() > ls.reach) {
        rep.classification = Verdict::diverges;
        rep.rationale = "constant lengths reach positive mass: every term equals the first";
      }
    } else {
      rep.rationale = "no closed-form classification of sum l_n^2 for this sequence";
    }
  } else {
    rep.rationale = "no closed-form classification of sum l_n for this sequence";
  }
  return rep;
}

std::vector<Piece> refine_pieces(std::span<const Piece> pieces, std::span<const double> cuts) {
  std::vector<double> sorted(cuts.begin(), cuts.end());
  std::sort(sorted.begin(), sorted.end());
  std::vector<Piece> out;
  out.reserve(pieces.size() + sorted.size());
  for (const Piece& p : pieces) {
    double lo = p.lo;
    double v = p.v_lo;
    for (auto it = std::upper_bound(sorted.begin(), sorted.end(), p.lo);
         it != sorted.end() && *it < p.hi; ++it) {
      if (*it <= lo) continue;
      const double vc = p.at(*it);
      out.push_back(Piece{lo, *it, v, vc});
      lo = *it;
      v = vc;
    }
    out.push_back(Piece{lo, p.hi, v, p.v_hi});
  }
  return out;
}

std::vector<Piece> restrict_pieces(std::span<const Piece> pieces, const ArcSet& set, bool inside) {
  std::vector<double> cuts;
  for (const Arc& a : set.arcs()) {
    cuts.push_back(wrap01(a.start));
    cuts.push_back(wrap01(a.end()));
  }
  std::vector<Piece> out = refine_pieces(pieces, cuts);
  for (Piece& p : out) {
    if (set.contains(0.5 * (p.lo + p.hi)) != inside) p.v_lo = p.v_hi = 0.0;
  }
  return out;
}

std::vector<Piece> difference_pieces(std::span<const Piece> a, std::span<const Piece> b) {
  std::vector<double> cuts;
  for (const Piece& p : a) cuts.push_back(p.lo);
  for (const Piece& p : b) cuts.push_back(p.lo);
  const std::vector<Piece> ra = refine_pieces(a, cuts);
  const std::vector<Piece> rb = refine_pieces(b, cuts);
  if (ra.size() != rb.size()) throw ValidationError("difference_pieces: mismatched tilings");
  std::vector<Piece> out;
  out.reserve(ra.size());
  for (std::size_t i = 0; i < ra.size(); ++i) {
    if (ra[i].lo != rb[i].lo || ra[i].hi != rb[i].hi) {
      throw ValidationError("difference_pieces: mismatched tilings");
    }
    out.push_back(Piece{ra[i].lo, ra[i].hi, ra[i].v_lo - rb[i].v_lo, ra[i].v_hi - rb[i].v_hi});
  }
  return out;
}

double pieces_mass(std::span<const Piece> pieces) {
  CompensatedSum total;
  for (const Piece& p : pieces) total.add(p.excess_integral(p.lo, p.hi, 0.0));
  return total.value();
}

bool dominated_on(std::span<const Piece> a, std::span<const Piece> b, const ArcSet& set,
                  double tol) {
  const std::vector<Piece> diff = restrict_pieces(difference_pieces(b, a), set, true);
  return std::all_of(diff.begin(), diff.end(),
                     [tol](const Piece& p) { return p.v_lo >= -tol && p.v_hi >= -tol; });
}

}  // namespace dvcover
