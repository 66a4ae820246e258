#include "dvcover/capacity.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "dvcover/errors.hpp"
#include "dvcover/numerics.hpp"

namespace dvcover {

namespace {

/// integral_0^1 (1 - s) e^{zs} ds
double psi_lo(double z) {
  if (std::abs(z) < 0.5) {
    double term = 1.0;
    double sum = 0.0;
    for (int m = 0; m < 24; ++m) {
      sum += term / ((m + 1.0) * (m + 2.0));
      term *= z / (m + 1.0);
    }
    return sum;
  }
  const double phi1 = std::expm1(z) / z;
  const double phi2 = (std::exp(z) * (z - 1.0) + 1.0) / (z * z);
  return phi1 - phi2;
}

/// integral_0^1 s e^{zs} ds
double psi_hi(double z) {
  if (std::abs(z) < 0.5) {
    double term = 1.0;
    double sum = 0.0;
    for (int m = 0; m < 24; ++m) {
      sum += term / (m + 2.0);
      term *= z / (m + 1.0);
    }
    return sum;
  }
  return (std::exp(z) * (z - 1.0) + 1.0) / (z * z);
}

struct USegment {
  double u_lo;
  double u_hi;
  double w_lo;  // density of the distance at u_lo
  double w_hi;
};

/// Distance segments (in u = circle distance) carrying the law of t - s for a component pair.
std::vector<USegment> pair_segments(const MeasureComponent& ci, const MeasureComponent& cj) {
  struct DSeg {
    double d_a, d_b, g_a, g_b;
  };
  std::vector<DSeg> dsegs;
  const double d0 = ci.start - cj.start;
  const double li = ci.length;
  const double lj = cj.length;
  if (li > 0.0 && lj > 0.0) {
    const double peak = std::min(li, lj) / (li * lj);
    const double z1 = std::min(0.0, li - lj);
    const double z2 = std::max(0.0, li - lj);
    dsegs.push_back({d0 - lj, d0 + z1, 0.0, peak});
    if (z2 > z1) dsegs.push_back({d0 + z1, d0 + z2, peak, peak});
    dsegs.push_back({d0 + z2, d0 + li, peak, 0.0});
  } else if (li > 0.0) {
    dsegs.push_back({d0, d0 + li, 1.0 / li, 1.0 / li});
  } else {
    dsegs.push_back({d0 - lj, d0, 1.0 / lj, 1.0 / lj});
  }
  std::vector<USegment> out;
  for (const DSeg& s : dsegs) {
    if (!(s.d_b > s.d_a)) continue;
    std::vector<double> cuts{s.d_a};
    for (double k = std::floor(2.0 * s.d_a) + 1.0; k / 2.0 < s.d_b; k += 1.0) cuts.push_back(k / 2.0);
    cuts.push_back(s.d_b);
    const double slope = (s.g_b - s.g_a) / (s.d_b - s.d_a);
    for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
      const double da = cuts[i];
      const double db = cuts[i + 1];
      if (!(db > da)) continue;
      const double ga = std::max(0.0, s.g_a + slope * (da - s.d_a));
      const double gb = std::max(0.0, s.g_a + slope * (db - s.d_a));
      const double ua = circle_dist(da, 0.0);
      const double ub = circle_dist(db, 0.0);
      if (ua <= ub) {
        out.push_back({ua, ub, ga, gb});
      } else {
        out.push_back({ub, ua, gb, ga});
      }
    }
  }
  return out;
}

/// log of integral over [u_lo, u_hi] of Phi(u) w(u) du, exact piece by piece.
double log_segment_integral(const KernelPhi& k, const USegment& seg) {
  LogSumExp acc;
  const double width = seg.u_hi - seg.u_lo;
  if (!(width > 0.0)) return kNegInf;
  const double q = (seg.w_hi - seg.w_lo) / width;
  const auto& ell = k.table().ell;
  const auto& sum = k.table().sum;
  std::uint64_t cnt = k.count_above(seg.u_lo);
  double x0 = seg.u_lo;
  while (x0 < seg.u_hi) {
    const double x1 = cnt > 0 ? std::min(seg.u_hi, ell[cnt - 1]) : seg.u_hi;
    const double delta = x1 - x0;
    if (delta > 0.0) {
      const double lam0 = k.a() * (sum[cnt] - static_cast<double>(cnt) * x0);
      const double z = -k.a() * static_cast<double>(cnt) * delta;
      const double p0 = std::max(0.0, seg.w_lo + q * (x0 - seg.u_lo));
      const double p1 = std::max(0.0, seg.w_lo + q * (x1 - seg.u_lo));
      const double val = delta * (p0 * psi_lo(z) + p1 * psi_hi(z));
      if (val > 0.0) acc.add_log(lam0 + std::log(val));
    }
    x0 = x1;
    while (cnt > 0 && ell[cnt - 1] <= x0) --cnt;
  }
  return acc.log_value();
}

std::vector<double> bracket_grid(const KernelPhi& k, std::size_t cells) {
  const auto& ell = k.table().ell;
  const double smallest = k.truncation() > 0 ? ell[k.truncation() - 1] : 0.5;
  const double u_min = std::min(smallest / 64.0, 1e-3);
  std::vector<double> g{0.0};
  const double ratio = std::log(0.5 / u_min) / static_cast<double>(cells);
  for (std::size_t i = 0; i <= cells; ++i) g.push_back(u_min * std::exp(ratio * static_cast<double>(i)));
  g.back() = 0.5;
  return g;
}

void bracket_segment(const KernelPhi& k, const USegment& seg, const std::vector<double>& grid,
                     double log_weight, LogSumExp& lower, LogSumExp& upper) {
  const double width = seg.u_hi - seg.u_lo;
  if (!(width > 0.0)) return;
  const double q = (seg.w_hi - seg.w_lo) / width;
  auto w = [&](double u) { return std::max(0.0, seg.w_lo + q * (u - seg.u_lo)); };
  double c0 = seg.u_lo;
  auto it = std::upper_bound(grid.begin(), grid.end(), seg.u_lo);
  while (c0 < seg.u_hi) {
    const double c1 = (it != grid.end()) ? std::min(*it, seg.u_hi) : seg.u_hi;
    const double mass = 0.5 * (c1 - c0) * (w(c0) + w(c1));
    if (mass > 0.0) {
      const double lm = log_weight + std::log(mass);
      lower.add_log(lm + k.log_phi_at(c1));
      upper.add_log(lm + k.log_phi_at(c0));
    }
    c0 = c1;
    if (it != grid.end()) ++it;
  }
}

std::vector<EnergyEstimate> ladder_with_table(double a, std::shared_ptr<const PrefixTable> table,
                                              const SupportMeasure& sigma,
                                              std::span<const std::uint64_t> truncations,
                                              const EnergyOptions& opts) {
  std::vector<EnergyEstimate> out;
  for (std::uint64_t n : truncations) out.push_back(energy(KernelPhi(a, table, n), sigma, opts));
  return out;
}

}  // namespace

double kernel_sum(const PrefixTable& table, double u, std::uint64_t n) {
  if (!(u >= 0.0)) throw DomainError("kernel_sum: u must be nonnegative");
  if (n > table.ell.size()) throw DomainError("kernel_sum: truncation exceeds the prefix table");
  const auto end = table.ell.begin() + static_cast<std::ptrdiff_t>(n);
  const auto k = static_cast<std::uint64_t>(
      std::partition_point(table.ell.begin(), end, [u](double l) { return l > u; }) -
      table.ell.begin());
  return table.sum[k] - static_cast<double>(k) * u;
}

double kernel_sum(const LengthSequence& seq, double u, std::uint64_t n) {
  return kernel_sum(make_prefix_table(seq, n), u, n);
}

KernelPhi::KernelPhi(double a, const LengthSequence& seq, std::uint64_t truncation)
    : KernelPhi(a, std::make_shared<const PrefixTable>(make_prefix_table(seq, truncation)),
                truncation) {}

KernelPhi::KernelPhi(double a, std::shared_ptr<const PrefixTable> table, std::uint64_t truncation)
    : a_(a), table_(std::move(table)), n_(truncation) {
  if (!(a >= 0.0) || !std::isfinite(a)) throw DomainError("kernel: a must be nonnegative");
  if (!table_ || truncation > table_->ell.size()) {
    throw DomainError("kernel: truncation exceeds the prefix table");
  }
}

std::uint64_t KernelPhi::count_above(double u) const {
  const auto& ell = table_->ell;
  const auto end = ell.begin() + static_cast<std::ptrdiff_t>(n_);
  return static_cast<std::uint64_t>(
      std::partition_point(ell.begin(), end, [u](double l) { return l > u; }) - ell.begin());
}

double KernelPhi::kernel_sum(double u) const { return dvcover::kernel_sum(*table_, u, n_); }

double KernelPhi::log_phi(double t, double s) const { return log_phi_at(circle_dist(t, s)); }

double PhiValue::value() const { return std::exp(log_value); }

PhiValue phi_eval(const KernelPhi& kernel, double t, double s) {
  return PhiValue{kernel.log_phi(t, s)};
}

SupportMeasure SupportMeasure::atoms(std::vector<double> points, std::vector<double> weights) {
  if (points.empty() || points.size() != weights.size()) {
    throw DomainError("atoms: need matching nonempty points and weights");
  }
  CompensatedSum total;
  SupportMeasure m;
  m.kind_ = Kind::atoms;
  for (std::size_t i = 0; i < points.size(); ++i) {
    if (!(weights[i] >= 0.0)) throw DomainError("atoms: negative weight");
    total.add(weights[i]);
    m.components_.push_back(MeasureComponent{wrap01(points[i]), 0.0, weights[i]});
  }
  if (std::abs(total.value() - 1.0) > 1e-12) throw DomainError("atoms: weights must sum to 1");
  m.carrier_ = ArcSet::from_points(points);
  return m;
}

SupportMeasure SupportMeasure::atom(double x) { return atoms({x}, {1.0}); }

SupportMeasure SupportMeasure::lebesgue_on(const ArcSet& set) {
  const double total = set.measure();
  if (!(total > 0.0)) throw DomainError("lebesgue_on: set has zero length");
  SupportMeasure m;
  m.kind_ = Kind::lebesgue;
  for (const Arc& a : set.arcs()) {
    if (a.length > 0.0) m.components_.push_back(MeasureComponent{a.start, a.length, a.length / total});
  }
  m.carrier_ = set;
  return m;
}

SupportMeasure SupportMeasure::weighted_grid(std::vector<double> points, std::vector<double> weights,
                                             double cell_width) {
  if (points.empty() || points.size() != weights.size()) {
    throw DomainError("weighted_grid: need matching nonempty points and weights");
  }
  if (!(cell_width > 0.0 && cell_width <= 1.0)) throw DomainError("weighted_grid: bad cell width");
  SupportMeasure m;
  m.kind_ = Kind::weighted_grid;
  CompensatedSum total;
  std::vector<Arc> cells;
  for (std::size_t i = 0; i < points.size(); ++i) {
    if (!(weights[i] >= 0.0)) throw DomainError("weighted_grid: negative weight");
    total.add(weights[i]);
    const double s = wrap01(points[i] - 0.5 * cell_width);
    m.components_.push_back(MeasureComponent{s, cell_width, weights[i]});
    cells.push_back(Arc{s, cell_width});
  }
  if (std::abs(total.value() - 1.0) > 1e-12) throw DomainError("weighted_grid: weights must sum to 1");
  m.carrier_ = ArcSet::from_arcs(cells);
  return m;
}

std::string SupportMeasure::describe() const {
  std::ostringstream os;
  os.precision(6);
  switch (kind_) {
    case Kind::atoms:
      os << "atoms{";
      for (std::size_t i = 0; i < components_.size() && i < 4; ++i) {
        os << (i ? "," : "") << components_[i].start;
      }
      if (components_.size() > 4) os << ",...";
      os << '}';
      break;
    case Kind::lebesgue:
      os << "lebesgue(" << components_.size() << " arcs, length " << carrier_.measure() << ')';
      break;
    case Kind::weighted_grid:
      os << "grid(" << components_.size() << " cells of width " << components_.front().length << ')';
      break;
  }
  return os.str();
}

std::vector<MeasureComponent> SupportMeasure::discretize(double h) const {
  if (!(h > 0.0)) throw DomainError("discretize: h must be positive");
  std::vector<MeasureComponent> out;
  for (const MeasureComponent& c : components_) {
    if (c.length == 0.0) {
      out.push_back(c);
      continue;
    }
    const auto cells = static_cast<std::size_t>(std::ceil(c.length / h));
    const double w = c.length / static_cast<double>(cells);
    for (std::size_t i = 0; i < cells; ++i) {
      out.push_back(MeasureComponent{wrap01(c.start + (static_cast<double>(i) + 0.5) * w), 0.0,
                                     c.weight / static_cast<double>(cells)});
    }
  }
  return out;
}

EnergyEstimate energy(const KernelPhi& kernel, const SupportMeasure& sigma,
                      const EnergyOptions& opts) {
  EnergyEstimate est;
  est.truncation = kernel.truncation();
  est.resolution = opts.bracket_cells;
  const auto& comps = sigma.components();
  const std::vector<double> grid = bracket_grid(kernel, opts.bracket_cells);
  LogSumExp exact;
  LogSumExp lower;
  LogSumExp upper;
  for (const MeasureComponent& ci : comps) {
    for (const MeasureComponent& cj : comps) {
      if (ci.weight <= 0.0 || cj.weight <= 0.0) continue;
      const double lw = std::log(ci.weight) + std::log(cj.weight);
      if (ci.length == 0.0 && cj.length == 0.0) {
        const double v = lw + kernel.log_phi(ci.start, cj.start);
        exact.add_log(v);
        lower.add_log(v);
        upper.add_log(v);
        continue;
      }
      for (const USegment& seg : pair_segments(ci, cj)) {
        exact.add_log(lw + log_segment_integral(kernel, seg));
        bracket_segment(kernel, seg, grid, lw, lower, upper);
      }
    }
  }
  est.log_value = exact.log_value();
  est.lower_log = lower.log_value();
  est.upper_log = upper.log_value();
  est.infinite = est.log_value > kLogOverflow;
  const double slack = 1e-9 * std::max(1.0, std::abs(est.log_value));
  est.inconclusive = est.log_value < *est.lower_log - slack || est.log_value > *est.upper_log + slack ||
                     *est.upper_log - *est.lower_log > opts.max_bracket_log_width;
  return est;
}

std::vector<EnergyEstimate> energy_ladder(double a, const LengthSequence& seq,
                                          const SupportMeasure& sigma,
                                          std::span<const std::uint64_t> truncations,
                                          const EnergyOptions& opts) {
  if (truncations.empty()) return {};
  const std::uint64_t nmax = *std::max_element(truncations.begin(), truncations.end());
  auto table = std::make_shared<const PrefixTable>(make_prefix_table(seq, nmax));
  return ladder_with_table(a, table, sigma, truncations, opts);
}

LadderVerdict classify_ladder(std::span<const double> log_values) {
  LadderVerdict v;
  const std::size_t n = log_values.size();
  if (n < 3) return v;
  for (double x : log_values) {
    if (x > kLogOverflow) {
      v.verdict = Verdict::diverges;
      v.last_ratio = std::numeric_limits<double>::infinity();
      return v;
    }
  }
  auto increment = [&](std::size_t i) {
    return std::exp(log_values[i]) * std::expm1(log_values[i + 1] - log_values[i]);
  };
  const double d_prev = increment(n - 3);
  const double d_last = increment(n - 2);
  const double scale = std::exp(log_values[n - 1]);
  if (d_last <= 1e-12 * scale && d_prev <= 1e-12 * scale) {
    v.verdict = Verdict::converges;
    return v;
  }
  if (d_prev <= 0.0) return v;
  v.last_ratio = d_last / d_prev;
  if (v.last_ratio < 0.9) {
    v.verdict = Verdict::converges;
  } else if (v.last_ratio >= 0.97) {
    v.verdict = Verdict::diverges;
  }
  return v;
}

Lemma33Report lemma33_equiv(const LengthSequence& seq, double a, const ArcSet& F,
                            std::span<const std::uint64_t> truncations) {
  if (!(F.measure() > 0.0)) throw PreconditionError("lemma33: F must have positive measure");
  Lemma33Report r;
  r.truncations.assign(truncations.begin(), truncations.end());
  for (const EnergyEstimate& e : energy_ladder(a, seq, SupportMeasure::lebesgue_on(F), truncations)) {
    r.energy_log.push_back(e.log_value);
  }
  r.shepp_log = shepp_log_partials(seq, a, truncations);
  r.energy = classify_ladder(r.energy_log);
  r.shepp = classify_ladder(r.shepp_log);
  r.analytic = shepp_classify(seq, a);
  r.agree = r.energy.verdict == r.shepp.verdict && r.energy.verdict != Verdict::unknown;
  return r;
}

std::string_view to_string(CapacityReport::Outcome o) {
  switch (o) {
    case CapacityReport::Outcome::diverges_for_tested:
      return "diverges-for-tested-measures";
    case CapacityReport::Outcome::finite_witness:
      return "finite-witness";
    default:
      return "inconclusive";
  }
}

CapacityReport cap_zero_heuristic(double a, const LengthSequence& seq, const ArcSet& F,
                                  std::span<const std::uint64_t> truncations) {
  if (F.empty()) throw DomainError("cap_zero_heuristic: F is empty");
  CapacityReport rep;
  rep.caveat =
      "one-sided evidence over a finite family of measures; divergence at finite truncations "
      "does not prove capacity zero";
  std::vector<SupportMeasure> candidates;
  if (F.measure() > 0.0) candidates.push_back(SupportMeasure::lebesgue_on(F));
  const auto arcs = F.arcs();
  for (std::size_t i = 0; i < arcs.size() && i < 16; ++i) {
    candidates.push_back(SupportMeasure::atom(arcs[i].start + 0.5 * arcs[i].length));
  }
  for (int j : {4, 8}) {
    const double h = std::ldexp(1.0, -j);
    std::vector<double> pts;
    for (int k = 0; k < (1 << j); ++k) {
      const Arc cell{k * h, h};
      if (F.overlap_length(cell) >= h * (1.0 - 1e-12)) pts.push_back((k + 0.5) * h);
    }
    if (pts.empty()) continue;
    std::vector<double> w(pts.size(), 1.0 / static_cast<double>(pts.size()));
    candidates.push_back(SupportMeasure::weighted_grid(pts, w, h));
  }
  const std::uint64_t nmax = *std::max_element(truncations.begin(), truncations.end());
  auto table = std::make_shared<const PrefixTable>(make_prefix_table(seq, nmax));
  bool all_diverge = true;
  for (const SupportMeasure& m : candidates) {
    std::vector<double> logs;
    for (const auto& e : ladder_with_table(a, table, m, truncations, {})) logs.push_back(e.log_value);
    const LadderVerdict v = classify_ladder(logs);
    rep.measures.push_back(m.describe());
    rep.energy_log.push_back(logs);
    rep.verdicts.push_back(v);
    if (v.verdict == Verdict::converges && !rep.witness) rep.witness = m.describe();
    if (v.verdict != Verdict::diverges) all_diverge = false;
  }
  if (rep.witness) {
    rep.outcome = CapacityReport::Outcome::finite_witness;
  } else if (all_diverge) {
    rep.outcome = CapacityReport::Outcome::diverges_for_tested;
  }
  return rep;
}

}  // namespace dvcover
