#include "dvcover/coversim.hpp"

#include <algorithm>
#include <array>
#include <limits>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <numeric>
#include <thread>

#include "dvcover/errors.hpp"
#include "dvcover/numerics.hpp"

namespace dvcover {

namespace {

void check_checkpoints(std::span<const std::uint64_t> cps, std::uint64_t n_max) {
  for (std::size_t i = 0; i < cps.size(); ++i) {
    if (cps[i] < 1 || cps[i] > n_max) throw DomainError("checkpoints must lie in [1, N_max]");
    if (i > 0 && cps[i] <= cps[i - 1]) throw DomainError("checkpoints must be strictly increasing");
  }
}

class CoverState {
 public:
  explicit CoverState(const Target& t) {
    if (const auto* a = std::get_if<ArcSet>(&t)) {
      arcs_ = *a;
    } else {
      points_.emplace(std::get<PointTarget>(t).points);
    }
  }

  void apply(double start, double length, std::uint64_t n) {
    if (arcs_) {
      arcs_->subtract(Arc{start, length});
    } else {
      points_->hit(start, length, n);
    }
  }

  [[nodiscard]] double uncovered() const {
    if (arcs_) return arcs_->measure();
    if (points_->size() == 0) return 0.0;
    return static_cast<double>(points_->alive()) / static_cast<double>(points_->size());
  }

  [[nodiscard]] bool covered() const { return arcs_ ? arcs_->empty() : points_->alive() == 0; }

  [[nodiscard]] std::vector<std::optional<std::uint64_t>> first_hits() const {
    return points_ ? points_->first_hits() : std::vector<std::optional<std::uint64_t>>{};
  }

 private:
  std::optional<ArcSet> arcs_;
  std::optional<PointTracker> points_;
};

// Gauss-Kronrod 7/15 abscissae and weights on [-1, 1].
constexpr double kXgk[8] = {0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
                            0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
                            0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
                            0.207784955007898467600689403773245, 0.0};
constexpr double kWgk[8] = {0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
                            0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
                            0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
                            0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
constexpr double kWg[4] = {0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
                           0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

}  // namespace

PointTracker::PointTracker(std::span<const double> points) {
  order_.resize(points.size());
  std::iota(order_.begin(), order_.end(), std::size_t{0});
  std::vector<double> wrapped(points.size());
  for (std::size_t i = 0; i < points.size(); ++i) wrapped[i] = wrap01(points[i]);
  std::stable_sort(order_.begin(), order_.end(),
                   [&](std::size_t x, std::size_t y) { return wrapped[x] < wrapped[y]; });
  xs_.reserve(points.size());
  for (std::size_t i : order_) xs_.push_back(wrapped[i]);
  hit_at_.assign(points.size(), 0);
  alive_ = points.size();
}

void PointTracker::hit_range(double lo, double hi, std::uint64_t n) {
  for (auto it = std::upper_bound(xs_.begin(), xs_.end(), lo); it != xs_.end() && *it < hi; ++it) {
    auto& h = hit_at_[static_cast<std::size_t>(it - xs_.begin())];
    if (h == 0) {
      h = n;
      --alive_;
    }
  }
}

void PointTracker::hit(double start, double length, std::uint64_t n) {
  if (!(length > 0.0) || alive_ == 0) return;
  const double a = wrap01(start);
  const double b = a + std::min(length, 1.0);
  hit_range(a, std::min(b, 1.0), n);
  if (b > 1.0) hit_range(-1.0, b - 1.0, n);
}

std::vector<std::optional<std::uint64_t>> PointTracker::first_hits() const {
  std::vector<std::optional<std::uint64_t>> out(xs_.size());
  for (std::size_t i = 0; i < xs_.size(); ++i) {
    if (hit_at_[i] != 0) out[order_[i]] = hit_at_[i];
  }
  return out;
}

TrialPlan::TrialPlan(TrialConfig config) : config_(std::move(config)) {
  check_checkpoints(config_.checkpoints, config_.n_max);
  ell_ = config_.lengths.prefix(config_.n_max);
}

TrialResult TrialPlan::run(std::uint64_t seed) const {
  const CounterRng rng(seed);
  const PiecewisePolyDensity& f = config_.density;
  const auto& cps = config_.checkpoints;
  TrialResult r;
  r.seed = seed;
  CoverState state(config_.target);
  r.initial_uncovered = state.uncovered();
  if (state.covered()) r.cover_time = 0;
  std::size_t next = 0;
  for (std::uint64_t n = 1; n <= config_.n_max && !r.cover_time; ++n) {
    const double xi = f.inverse_cdf(rng.uniform(Stream::position, n));
    const double l = ell_[n - 1];
    state.apply(xi - 0.5 * l, l, n);
    r.steps = n;
    if (state.covered()) r.cover_time = n;
    while (next < cps.size() && cps[next] == n) {
      r.trajectory.push_back({n, state.uncovered()});
      ++next;
    }
  }
  for (; next < cps.size(); ++next) r.trajectory.push_back({cps[next], state.uncovered()});
  r.first_hits = state.first_hits();
  return r;
}

TrialResult run_trial(const TrialConfig& config) { return TrialPlan(config).run(config.seed); }

void parallel_for(std::uint64_t count, int threads, const std::function<void(std::uint64_t)>& body) {
  if (threads <= 1 || count <= 1) {
    for (std::uint64_t i = 0; i < count; ++i) body(i);
    return;
  }
  const auto workers = static_cast<std::uint64_t>(threads) < count ? static_cast<std::uint64_t>(threads) : count;
  std::atomic<std::uint64_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (std::uint64_t w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::uint64_t i = next.fetch_add(1); i < count; i = next.fetch_add(1)) {
        try {
          body(i);
        } catch (...) {
          const std::lock_guard<std::mutex> lock(error_mutex);
          if (!error) error = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

std::vector<TrialResult> run_trials(const TrialConfig& config, std::uint64_t trials, int threads) {
  const TrialPlan plan(config);
  std::vector<TrialResult> out(trials);
  parallel_for(trials, threads, [&](std::uint64_t i) { out[i] = plan.run(config.seed + i); });
  return out;
}

namespace {

// log prod_{n<=N_c} (1 - mu(B(t, r_n))) for every checkpoint N_c.
class LogProductEvaluator {
 public:
  static constexpr int kSeriesTerms = 6;
  static constexpr double kSeriesThreshold = 0.01;

  LogProductEvaluator(const PiecewisePolyDensity& f, std::vector<double> ell,
                      std::span<const std::uint64_t> checkpoints)
      : f_(f), ell_(std::move(ell)), cps_(checkpoints.begin(), checkpoints.end()) {
    for (double b : f_.breakpoints()) {
      bps_.push_back(b);
      bps_.push_back(b + 1.0);
    }
    bps_.push_back(f_.breakpoints().front() - 1.0);
    std::sort(bps_.begin(), bps_.end());
    const std::size_t n = ell_.size();
    for (auto& q : power_sums_) q.assign(n + 1, 0.0);
    for (int k = 0; k < kSeriesTerms; ++k) {
      long double acc = 0.0L;
      for (std::size_t i = 0; i < n; ++i) {
        acc += std::pow(static_cast<long double>(ell_[i]), k + 1);
        power_sums_[static_cast<std::size_t>(k)][i + 1] = static_cast<double>(acc);
      }
    }
  }

  [[nodiscard]] const std::vector<double>& ell() const { return ell_; }

  /// Distance from t to the nearest breakpoint.
  [[nodiscard]] double breakpoint_distance(double t) const {
    const auto it = std::lower_bound(bps_.begin(), bps_.end(), t);
    double d = std::numeric_limits<double>::infinity();
    if (it != bps_.end()) d = *it - t;
    if (it != bps_.begin()) d = std::min(d, t - *(it - 1));
    return d;
  }

  void eval(double t, std::vector<double>& out) const {
    t = wrap01(t);
    const std::size_t nc = cps_.size();
    const double d = breakpoint_distance(t);
    // balls of radius <= d lie inside one affine piece, where mu(B) = f(t) l_n exactly
    const auto inside = static_cast<std::size_t>(
        std::partition_point(ell_.begin(), ell_.end(), [&](double l) { return 0.5 * l > d; }) - ell_.begin());
    const double v = f_.value(t);
    const auto small = static_cast<std::size_t>(
        std::partition_point(ell_.begin(), ell_.end(), [&](double l) { return v * l > kSeriesThreshold; }) -
        ell_.begin());
    const std::size_t series_from = std::max(inside, small);
    double log_prod = 0.0;
    std::size_t c = 0;
    std::size_t i = 0;
    for (; c < nc && i < series_from; ++i) {
      const double l = ell_[i];
      const double p = i < inside ? f_.arc_mass(t - 0.5 * l, l) : v * l;
      log_prod += p < 1.0 ? std::log1p(-p) : kNegInf;
      if (cps_[c] == i + 1) out[c++] = log_prod;
    }
    if (c == nc) return;
    if (!std::isfinite(log_prod)) {
      for (; c < nc; ++c) out[c] = kNegInf;
      return;
    }
    // sum_{n > i} log(1 - v l_n) = -sum_k v^k / k * (Q_k(N) - Q_k(i))
    for (; c < nc; ++c) {
      const std::size_t top = cps_[c];
      double series = 0.0;
      double vk = 1.0;
      for (int k = 0; k < kSeriesTerms; ++k) {
        vk *= v;
        const auto& q = power_sums_[static_cast<std::size_t>(k)];
        series += vk / (k + 1) * (q[top] - q[i]);
      }
      out[c] = log_prod - series;
    }
  }

 private:
  const PiecewisePolyDensity& f_;
  std::vector<double> ell_;
  std::vector<std::uint64_t> cps_;
  std::vector<double> bps_;
  std::array<std::vector<double>, kSeriesTerms> power_sums_;
};

struct Panel {
  double a = 0.0;
  double b = 0.0;
  std::vector<double> value;
  std::vector<double> error;
  double priority = 0.0;
};

Panel integrate_panel(const LogProductEvaluator& ev, double a, double b, std::size_t nc, std::size_t& nodes) {
  Panel pn;
  pn.a = a;
  pn.b = b;
  pn.value.assign(nc, 0.0);
  pn.error.assign(nc, 0.0);
  std::vector<double> gauss(nc, 0.0);
  std::vector<double> logs(nc);
  const double center = 0.5 * (a + b);
  const double half = 0.5 * (b - a);
  for (int j = 0; j < 8; ++j) {
    for (int sgn : {-1, 1}) {
      if (j == 7 && sgn == 1) continue;
      ev.eval(center + sgn * half * kXgk[j], logs);
      ++nodes;
      for (std::size_t c = 0; c < nc; ++c) {
        const double fx = std::exp(logs[c]);
        pn.value[c] += kWgk[j] * fx;
        if (j % 2 == 1) gauss[c] += kWg[j / 2] * fx;
      }
    }
  }
  for (std::size_t c = 0; c < nc; ++c) {
    pn.error[c] = half * std::abs(pn.value[c] - gauss[c]);
    pn.value[c] *= half;
  }
  return pn;
}

}  // namespace

ExpectedUncovered expected_uncovered_exact(const PiecewisePolyDensity& f, const LengthSequence& seq,
                                           const ArcSet& target,
                                           std::span<const std::uint64_t> checkpoints,
                                           const QuadratureOptions& opts) {
  ExpectedUncovered out;
  out.checkpoints.assign(checkpoints.begin(), checkpoints.end());
  if (checkpoints.empty()) return out;
  const std::uint64_t n_max = checkpoints.back();
  check_checkpoints(checkpoints, n_max);
  std::vector<double> ell = seq.prefix(n_max);
  const std::size_t nc = checkpoints.size();
  out.values.assign(nc, 0.0);
  out.error_estimates.assign(nc, 0.0);
  if (target.measure() == 0.0) return out;

  const auto pieces = f.pieces();
  if (pieces.size() == 1 && pieces[0].is_constant()) {
    double log_prod = 0.0;
    std::size_t c = 0;
    for (std::uint64_t n = 1; c < nc; ++n) {
      log_prod += std::log1p(-ell[n - 1]);
      if (checkpoints[c] == n) out.values[c++] = target.measure() * std::exp(log_prod);
    }
    out.nodes = 1;
    return out;
  }

  const LogProductEvaluator ev(f, std::move(ell), checkpoints);
  const std::vector<double>& l = ev.ell();
  const std::size_t explicit_kinks = std::min<std::size_t>(l.size(), 64);

  // initial panels: breakpoints, the first kinks b +- r_n, and geometric grading toward breakpoints
  std::vector<double> cuts;
  std::vector<double> bps;
  for (double b : f.breakpoints()) {
    for (double shift : {-1.0, 0.0, 1.0, 2.0}) bps.push_back(b + shift);
  }
  std::vector<double> offsets;
  for (std::size_t n = 0; n < explicit_kinks; ++n) offsets.push_back(0.5 * l[n]);
  const double r_last = 0.5 * l.back();
  for (double r = 0.5 * l[explicit_kinks - 1]; r > r_last; r *= 0.5) offsets.push_back(r);
  offsets.push_back(r_last);
  for (const Arc& arc : target.arcs()) {
    if (!(arc.length > 0.0)) continue;
    const double lo = arc.start;
    const double hi = arc.end();
    std::vector<double> local{lo, hi};
    for (double b : bps) {
      if (b > lo && b < hi) local.push_back(b);
      for (double r : offsets) {
        for (double x : {b - r, b + r}) {
          if (x > lo && x < hi) local.push_back(x);
        }
      }
    }
    std::sort(local.begin(), local.end());
    for (std::size_t i = 0; i + 1 < local.size(); ++i) {
      if (local[i + 1] - local[i] > opts.min_panel) {
        cuts.push_back(local[i]);
        cuts.push_back(local[i + 1]);
      }
    }
  }

  std::size_t nodes = 0;
  std::vector<Panel> panels;
  for (std::size_t i = 0; i + 1 < cuts.size(); i += 2) panels.push_back(integrate_panel(ev, cuts[i], cuts[i + 1], nc, nodes));

  std::vector<double> total(nc);
  std::vector<double> err(nc);
  auto refresh = [&] {
    for (std::size_t c = 0; c < nc; ++c) {
      CompensatedSum v;
      CompensatedSum e;
      for (const Panel& p : panels) {
        v.add(p.value[c]);
        e.add(p.error[c]);
      }
      total[c] = v.value();
      err[c] = e.value();
    }
  };
  auto tolerance = [&](std::size_t c) { return std::max(opts.relative_tolerance * std::abs(total[c]), 1e-300); };
  auto priority = [&](const Panel& p) {
    double w = 0.0;
    for (std::size_t c = 0; c < nc; ++c) w = std::max(w, p.error[c] / tolerance(c));
    return p.b - p.a > opts.min_panel ? w : 0.0;
  };
  auto converged = [&] {
    for (std::size_t c = 0; c < nc; ++c) {
      if (err[c] > tolerance(c) && err[c] > 1e-15) return false;
    }
    return true;
  };

  refresh();
  while (!converged() && panels.size() < opts.max_panels) {
    // bisect the worst panels in one sweep, then rebalance
    for (Panel& p : panels) p.priority = priority(p);
    std::vector<std::size_t> order(panels.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    const std::size_t batch = std::max<std::size_t>(1, panels.size() / 8);
    std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(std::min(batch, order.size())),
                      order.end(), [&](std::size_t x, std::size_t y) { return panels[x].priority > panels[y].priority; });
    if (panels[order[0]].priority == 0.0) break;
    std::vector<Panel> next;
    std::vector<bool> split(panels.size(), false);
    for (std::size_t k = 0; k < std::min(batch, order.size()); ++k) {
      if (panels[order[k]].priority > 0.0) split[order[k]] = true;
    }
    for (std::size_t i = 0; i < panels.size(); ++i) {
      if (!split[i]) {
        next.push_back(std::move(panels[i]));
        continue;
      }
      const double mid = 0.5 * (panels[i].a + panels[i].b);
      next.push_back(integrate_panel(ev, panels[i].a, mid, nc, nodes));
      next.push_back(integrate_panel(ev, mid, panels[i].b, nc, nodes));
    }
    panels = std::move(next);
    refresh();
  }

  out.nodes = nodes;
  for (std::size_t c = 0; c < nc; ++c) {
    out.values[c] = total[c];
    out.error_estimates[c] = err[c];
    if (err[c] > tolerance(c) && err[c] > 1e-15) {
      throw InconclusiveError("expected_uncovered_exact: error estimate " + std::to_string(err[c]) +
                              " at N=" + std::to_string(checkpoints[c]) + " exceeds tolerance " +
                              std::to_string(tolerance(c)) + " after " + std::to_string(panels.size()) +
                              " panels");
    }
  }
  return out;
}

std::vector<BillardMoment> billard_moments(const BillardConfig& cfg) {
  if (ell2_classify(cfg.lengths) != Verdict::converges) {
    throw PreconditionError("billard_moments: sum of squared lengths must converge");
  }
  if (cfg.checkpoints.empty()) return {};
  const std::uint64_t n_max = cfg.checkpoints.back();
  check_checkpoints(cfg.checkpoints, n_max);
  const std::vector<double> ell = cfg.lengths.prefix(n_max);
  const std::vector<MeasureComponent> atoms = cfg.sigma.discretize(cfg.grid_width);
  const std::size_t nc = cfg.checkpoints.size();
  std::vector<double> xs;
  std::vector<std::vector<double>> log_w(atoms.size(), std::vector<double>(nc));
  for (std::size_t i = 0; i < atoms.size(); ++i) {
    xs.push_back(atoms[i].start);
    double acc = 0.0;
    std::size_t next = 0;
    for (std::uint64_t n = 1; next < nc; ++n) {
      const double l = ell[n - 1];
      const double p = cfg.density.arc_mass(atoms[i].start - 0.5 * l, l);
      if (!(p < 1.0)) throw PreconditionError("billard_moments: a ball carries full mass");
      acc -= std::log1p(-p);
      if (cfg.checkpoints[next] == n) log_w[i][next++] = acc;
    }
  }

  std::vector<std::vector<double>> m(cfg.trials, std::vector<double>(nc, 0.0));
  parallel_for(cfg.trials, cfg.threads, [&](std::uint64_t t) {
    const CounterRng rng(cfg.seed + t);
    PointTracker tracker(xs);
    std::size_t next = 0;
    for (std::uint64_t n = 1; next < nc; ++n) {
      if (tracker.alive() > 0) {
        const double xi = cfg.density.inverse_cdf(rng.uniform(Stream::position, n));
        const double l = ell[n - 1];
        tracker.hit(xi - 0.5 * l, l, n);
      }
      if (cfg.checkpoints[next] == n) {
        const auto hits = tracker.first_hits();
        CompensatedSum sum;
        for (std::size_t i = 0; i < atoms.size(); ++i) {
          if (!hits[i]) sum.add(atoms[i].weight * std::exp(log_w[i][next]));
        }
        m[t][next++] = sum.value();
        if (tracker.alive() == 0) break;
      }
    }
  });

  std::vector<BillardMoment> out;
  for (std::size_t c = 0; c < nc; ++c) {
    std::vector<double> first(cfg.trials);
    std::vector<double> second(cfg.trials);
    for (std::uint64_t t = 0; t < cfg.trials; ++t) {
      first[t] = m[t][c];
      second[t] = m[t][c] * m[t][c];
    }
    const MeanEstimate e1 = mean_and_stderr(first);
    const MeanEstimate e2 = mean_and_stderr(second);
    BillardMoment bm;
    bm.n = cfg.checkpoints[c];
    bm.mean = e1.mean;
    bm.mean_se = e1.std_error;
    bm.second = e2.mean;
    bm.second_se = e2.std_error;
    if (atoms.size() == 1) bm.second_closed_form = std::exp(log_w[0][c]);
    out.push_back(bm);
  }
  return out;
}

namespace {

std::vector<Piece> sum_pieces(std::span<const Piece> a, std::span<const Piece> b) {
  std::vector<Piece> neg(b.begin(), b.end());
  for (Piece& p : neg) {
    p.v_lo = -p.v_lo;
    p.v_hi = -p.v_hi;
  }
  return difference_pieces(a, neg);
}

std::optional<PiecewisePolyDensity> normalized_part(const std::vector<Piece>& pieces, double mass) {
  if (!(mass > 0.0)) return std::nullopt;
  if (mass == 1.0) return PiecewisePolyDensity::from_pieces(pieces);
  return PiecewisePolyDensity::normalized(pieces);
}

}  // namespace

CoupledModel CoupledModel::from_parts(std::vector<Piece> mu0, std::vector<Piece> mu1) {
  const double m0 = pieces_mass(mu0);
  const double m1 = pieces_mass(mu1);
  if (m0 < 0.0 || m1 < 0.0) throw ValidationError("coupled: negative part mass");
  std::vector<Piece> total = sum_pieces(mu0, mu1);
  CoupledModel model;
  model.mixture_ = PiecewisePolyDensity::from_pieces(std::move(total), "mixture");
  // mixture has unit mass
  model.alpha1_ = std::clamp(m1, 0.0, 1.0);
  model.part0_ = normalized_part(mu0, m0);
  model.part1_ = normalized_part(mu1, m1);
  if (!model.part0_ && !model.part1_) throw ValidationError("coupled: both parts are empty");
  if (!model.part0_) model.alpha1_ = 1.0;
  if (!model.part1_) model.alpha1_ = 0.0;
  return model;
}

CoupledModel CoupledModel::restrict_to(const PiecewisePolyDensity& f, const ArcSet& U) {
  return from_parts(restrict_pieces(f.pieces(), U, false), restrict_pieces(f.pieces(), U, true));
}

CoupledModel CoupledModel::comparison(const PiecewisePolyDensity& mu, const PiecewisePolyDensity& nu,
                                      const ArcSet& U) {
  if (!dominated_on(mu.pieces(), nu.pieces(), U)) {
    throw PreconditionError("comparison: mu <= nu fails on U");
  }
  std::vector<Piece> excess = restrict_pieces(difference_pieces(nu.pieces(), mu.pieces()), U, true);
  for (Piece& p : excess) {
    p.v_lo = std::max(p.v_lo, 0.0);
    p.v_hi = std::max(p.v_hi, 0.0);
  }
  std::vector<Piece> nu0 = sum_pieces(excess, restrict_pieces(nu.pieces(), U, false));
  return from_parts(std::move(nu0), restrict_pieces(mu.pieces(), U, true));
}

CoupledModel CoupledModel::trivial(const PiecewisePolyDensity& f) {
  CoupledModel model;
  model.mixture_ = f;
  model.part1_ = f;
  model.alpha1_ = 1.0;
  return model;
}

double CoupledModel::draw(const CounterRng& rng, std::uint64_t n, bool* mark) const {
  bool eps;
  if (!part0_) {
    eps = true;
  } else if (!part1_) {
    eps = false;
  } else {
    eps = rng.uniform(Stream::mark, n) < alpha1_;
  }
  if (mark) *mark = eps;
  const double u = rng.uniform(Stream::position, n);
  return eps ? part1_->inverse_cdf(u) : part0_->inverse_cdf(u);
}

CoupledTrialResult run_coupled_trial(const CoupledModel& model, const LengthSequence& lengths,
                                     std::uint64_t n_max, const Target& target, std::uint64_t seed,
                                     std::span<const std::uint64_t> checkpoints, bool record_marks) {
  check_checkpoints(checkpoints, n_max);
  const std::vector<double> ell = lengths.prefix(n_max);
  const CounterRng rng(seed);
  CoupledTrialResult out;
  out.full.seed = seed;
  CoverState full(target);
  CoverState lambda(target);
  out.full.initial_uncovered = full.uncovered();
  if (full.covered()) {
    out.full.cover_time = 0;
    out.lambda_cover_time = 0;
  }
  std::size_t next = 0;
  for (std::uint64_t n = 1; n <= n_max && !out.full.cover_time; ++n) {
    bool mark = false;
    const double xi = model.draw(rng, n, &mark);
    const double l = ell[n - 1];
    full.apply(xi - 0.5 * l, l, n);
    if (mark) {
      ++out.marked_steps;
      lambda.apply(xi - 0.5 * l, l, n);
      if (!out.lambda_cover_time && lambda.covered()) out.lambda_cover_time = n;
    }
    if (record_marks) out.marks.push_back(mark ? 1 : 0);
    out.full.steps = n;
    if (full.covered()) out.full.cover_time = n;
    while (next < checkpoints.size() && checkpoints[next] == n) {
      out.full.trajectory.push_back({n, full.uncovered()});
      out.lambda_trajectory.push_back({n, lambda.uncovered()});
      ++next;
    }
  }
  for (; next < checkpoints.size(); ++next) {
    out.full.trajectory.push_back({checkpoints[next], full.uncovered()});
    out.lambda_trajectory.push_back({checkpoints[next], lambda.uncovered()});
  }
  out.full.first_hits = full.first_hits();
  return out;
}

std::vector<double> coupled_samples(const CoupledModel& model, std::size_t count, std::uint64_t seed) {
  const CounterRng rng(seed);
  std::vector<double> out(count);
  for (std::size_t i = 0; i < count; ++i) out[i] = model.draw(rng, i + 1, nullptr);
  return out;
}

namespace {

bool inside_interior(const ArcSet& K, const ArcSet& U) {
  if (U.is_full()) return true;
  ArcSet closure_complement = ArcSet::full();
  for (const Arc& a : U.arcs()) closure_complement.subtract(a);
  for (const Arc& k : K.arcs()) {
    if (closure_complement.contains(k.start)) return false;
  }
  for (const Arc& c : closure_complement.arcs()) {
    if (K.contains(c.start)) return false;
  }
  return true;
}

}  // namespace

ComparisonReport comparison_experiment(const ComparisonConfig& cfg) {
  if (cfg.K.empty()) throw DomainError("comparison: K is empty");
  if (!inside_interior(cfg.K, cfg.U)) throw PreconditionError("comparison: K must lie inside U");
  if (cfg.checkpoints.empty()) throw DomainError("comparison: no checkpoints");
  const std::uint64_t n_max = cfg.checkpoints.back();
  check_checkpoints(cfg.checkpoints, n_max);
  const CoupledModel nu_model = CoupledModel::comparison(cfg.mu, cfg.nu, cfg.U);
  const CoupledModel mu_model = CoupledModel::restrict_to(cfg.mu, cfg.U);
  const Target target = cfg.K;
  const std::size_t nc = cfg.checkpoints.size();

  struct PerTrial {
    std::optional<std::uint64_t> mu_cover;
    std::optional<std::uint64_t> nu_cover;
    bool lambda_same = true;
  };
  std::vector<PerTrial> per(cfg.trials);
  parallel_for(cfg.trials, cfg.threads, [&](std::uint64_t t) {
    const auto a = run_coupled_trial(mu_model, cfg.lengths, n_max, target, cfg.seed + t, cfg.checkpoints);
    const auto b = run_coupled_trial(nu_model, cfg.lengths, n_max, target, cfg.seed + t, cfg.checkpoints);
    per[t].mu_cover = a.full.cover_time;
    per[t].nu_cover = b.full.cover_time;
    bool same = true;
    for (std::size_t c = 0; c < nc; ++c) {
      const std::uint64_t n = cfg.checkpoints[c];
      const bool both_running = (!a.full.cover_time || *a.full.cover_time >= n) &&
                                (!b.full.cover_time || *b.full.cover_time >= n);
      if (both_running && a.lambda_trajectory[c] != b.lambda_trajectory[c]) same = false;
    }
    per[t].lambda_same = same;
  });

  ComparisonReport rep;
  rep.alpha1 = mu_model.alpha1();
  for (std::size_t c = 0; c < nc; ++c) {
    const std::uint64_t n = cfg.checkpoints[c];
    std::vector<double> im(cfg.trials);
    std::vector<double> in(cfg.trials);
    std::vector<double> diff(cfg.trials);
    for (std::uint64_t t = 0; t < cfg.trials; ++t) {
      im[t] = per[t].mu_cover && *per[t].mu_cover <= n ? 1.0 : 0.0;
      in[t] = per[t].nu_cover && *per[t].nu_cover <= n ? 1.0 : 0.0;
      diff[t] = in[t] - im[t];
    }
    const MeanEstimate em = mean_and_stderr(im);
    const MeanEstimate en = mean_and_stderr(in);
    const MeanEstimate ed = mean_and_stderr(diff);
    ComparisonRow row;
    row.n = n;
    row.p_mu = em.mean;
    row.se_mu = em.std_error;
    row.p_nu = en.mean;
    row.se_nu = en.std_error;
    row.se_diff = ed.std_error;
    row.ordered = row.p_nu >= row.p_mu - 2.0 * row.se_diff;
    rep.all_ordered = rep.all_ordered && row.ordered;
    rep.rows.push_back(row);
  }
  for (const auto& p : per) rep.lambda_identical = rep.lambda_identical && p.lambda_same;
  return rep;
}

}  // namespace dvcover
