// Acceptance gate: one PASS/FAIL line per criterion, exit status 1 on any failure.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <thread>
#include <tuple>
#include <vector>

#include "../support/naive_arcs.hpp"
#include "dvcover/capacity.hpp"
#include "dvcover/config.hpp"
#include "dvcover/coversim.hpp"
#include "dvcover/density.hpp"
#include "dvcover/harness.hpp"
#include "dvcover/numerics.hpp"
#include "dvcover/sequences.hpp"

using namespace dvcover;

namespace {

int threads() { return static_cast<int>(std::max(1u, std::thread::hardware_concurrency())); }

struct Outcome {
  bool pass = true;
  std::string detail;

  void require(bool ok, const std::string& what) {
    if (!ok && pass) detail = what;
    pass = pass && ok;
  }
};

std::string fmt(const char* f, double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, x);
  return buf;
}

double rel_err(double got, double want) {
  if (got == want) return 0.0;
  return std::abs(got - want) / std::max(std::abs(want), 1e-300);
}

std::vector<std::uint64_t> window(std::uint64_t lo, std::uint64_t hi, int per_decade) {
  std::vector<std::uint64_t> out;
  for (std::uint64_t n : log_checkpoints(hi, per_decade)) {
    if (n >= lo) out.push_back(n);
  }
  return out;
}

double loglog_slope(std::span<const std::uint64_t> ns, std::span<const double> ys) {
  std::vector<double> lx, ly;
  for (std::size_t i = 0; i < ns.size(); ++i) {
    lx.push_back(std::log(static_cast<double>(ns[i])));
    ly.push_back(std::log(ys[i]));
  }
  return fit_line(lx, ly).slope;
}

Outcome c1_phase_transition() {
  Outcome o;
  const auto t0 = std::chrono::steady_clock::now();
  SweepConfig cfg;
  cfg.c_grid = {0.3, 0.5, 0.8};
  cfg.n_grid = log_checkpoints(100000, 1);
  cfg.trials = 1024;
  cfg.seed = 20240;
  cfg.threads = threads();
  const SweepResult r = phase_transition_sweep(cfg);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  for (const SweepCell& cell : r.cells) {
    double prod = 1.0;
    for (std::uint64_t n = 1; n <= cell.n; ++n) prod *= 1.0 - std::min(cell.c / static_cast<double>(n), kLengthCap);
    o.require(cell.exact && rel_err(*cell.exact, prod) < 1e-9, "exact value off the product at c=" + fmt("%g", cell.c));
    o.require(cell.mc_mean && std::abs(*cell.mc_mean - prod) <= 3.0 * *cell.mc_se + 1e-12,
              "MC outside 3 SE at c=" + fmt("%g", cell.c) + " N=" + std::to_string(cell.n));
  }
  const auto ns = window(1000, 100000, 8);
  double worst = 0.0;
  for (double c : cfg.c_grid) {
    std::vector<double> ys;
    for (std::uint64_t n : ns) {
      double prod = 1.0;
      for (std::uint64_t k = 1; k <= n; ++k) prod *= 1.0 - std::min(c / static_cast<double>(k), kLengthCap);
      ys.push_back(prod);
    }
    const double dev = std::abs(loglog_slope(ns, ys) + c);
    worst = std::max(worst, dev);
    o.require(dev <= 0.05, "slope off -c at c=" + fmt("%g", c));
    for (const SweepFit& f : r.fits) {
      if (f.c == c && f.source == "exact") o.require(std::abs(f.slope + c) <= 0.05, "sweep fit off at c=" + fmt("%g", c));
    }
  }
  o.require(secs < 60.0, "runtime " + fmt("%.1f s", secs));
  if (o.pass) o.detail = "worst slope deviation " + fmt("%.2e", worst) + ", runtime " + fmt("%.1f s", secs);
  return o;
}

Outcome c2_step_threshold() {
  Outcome o;
  const PiecewisePolyDensity step = step_density(0.5, 1.5, 0.5);
  const ArcSet half = ArcSet::single(0.0, 0.5);
  const auto ns = window(1000, 100000, 8);
  std::string slopes;
  for (double c : {1.0, 1.6}) {
    const ExpectedUncovered e = expected_uncovered_exact(step, LengthSequence::harmonic(c), half, ns);
    const double s = loglog_slope(ns, e.values);
    slopes += fmt(" %.4f", s);
    o.require(std::abs(s + c / 2.0) <= 0.05, "decay exponent " + fmt("%.4f", s) + " at c=" + fmt("%g", c));
  }
  TrialConfig cfg;
  cfg.density = step;
  cfg.lengths = LengthSequence::harmonic(2.2);
  cfg.n_max = 1000000;
  cfg.target = parse_target("grid:64:0:0.5");
  cfg.checkpoints = {cfg.n_max};
  cfg.seed = 7;
  const std::uint64_t trials = 1000;
  const auto rs = run_trials(cfg, trials, threads());
  const auto covered = std::count_if(rs.begin(), rs.end(), [](const TrialResult& r) { return r.cover_time.has_value(); });
  const double freq = static_cast<double>(covered) / static_cast<double>(trials);
  o.require(freq > 0.99, "cover frequency " + fmt("%.3f", freq));
  if (o.pass) o.detail = "slopes" + slopes + ", grid cover frequency " + fmt("%.3f", freq);
  return o;
}

Outcome c3_shepp() {
  Outcome o;
  struct Case {
    LengthSequence seq;
    double a;
    Verdict want;
  };
  const std::vector<Case> cases{
      {LengthSequence::harmonic(0.75), 1.0, Verdict::converges},
      {LengthSequence::harmonic(0.75), 4.0 / 3.0, Verdict::diverges},
      {LengthSequence::log_harmonic(), 0.5, Verdict::converges},
      {LengthSequence::log_harmonic(), 0.6, Verdict::diverges},
      {LengthSequence::harmonic(2.0), 0.5, Verdict::diverges},
      {LengthSequence::constant(0.3), 0.1, Verdict::diverges},
  };
  const std::uint64_t lo = 10000, hi = 100000;
  for (const Case& c : cases) {
    const std::string tag = c.seq.describe() + " a=" + fmt("%g", c.a);
    o.require(shepp_classify(c.seq, c.a) == c.want, "classification at " + tag);
    const double p_lo = shepp_log_partial(c.seq, c.a, lo);
    const double p_hi = shepp_log_partial(c.seq, c.a, hi);
    if (c.want == Verdict::converges) {
      const auto tail = shepp_tail_bound(c.seq, c.a, lo);
      o.require(tail && std::exp(p_hi) - std::exp(p_lo) <= *tail, "partials exceed the tail bound at " + tag);
    } else {
      const auto delta = shepp_growth_delta(c.seq, c.a);
      o.require(delta && std::exp(p_hi - p_lo) > 1.0 + *delta, "growth ratio too small at " + tag);
    }
  }
  if (o.pass) o.detail = "6 pairs agree with closed forms and N=1e5 partials";
  return o;
}

Outcome c4_kernel() {
  Outcome o;
  std::mt19937_64 gen(4);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::uniform_int_distribution<std::uint64_t> count(1, 10000);
  const std::vector<LengthSequence> seqs{LengthSequence::harmonic(1.5), LengthSequence::power(0.5, 0.7),
                                         LengthSequence::log_harmonic(), LengthSequence::constant(0.3)};
  double worst = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const LengthSequence& seq = seqs[static_cast<std::size_t>(i) % seqs.size()];
    const double u = unif(gen) * (i % 2 ? 0.05 : 1.0);
    const std::uint64_t n = count(gen);
    long double brute = 0.0L;
    for (std::uint64_t k = 1; k <= n; ++k) brute += std::max(static_cast<long double>(seq(k)) - u, 0.0L);
    const double got = kernel_sum(seq, u, n);
    const double err = brute == 0.0L ? std::abs(got) : rel_err(got, static_cast<double>(brute));
    worst = std::max(worst, err);
  }
  o.require(worst <= 1e-12, "kernel_sum relative error " + fmt("%.2e", worst));
  for (const auto& [seq, a, n] : std::vector<std::tuple<LengthSequence, double, std::uint64_t>>{
           {LengthSequence::harmonic(1.5), 1.0, 1000}, {LengthSequence::log_harmonic(), 0.5, 10000},
           {LengthSequence::power(0.5, 0.7), 2.0, 5000}}) {
    long double s = 0.0L;
    for (std::uint64_t k = 1; k <= n; ++k) s += seq(k);
    const EnergyEstimate e = energy(KernelPhi(a, seq, n), SupportMeasure::atom(0.37));
    const double err = rel_err(e.log_value, a * static_cast<double>(s));
    o.require(err <= 1e-12, "atom energy off exp(a S_N) for " + seq.describe());
  }
  if (o.pass) o.detail = "worst kernel_sum relative error " + fmt("%.2e", worst);
  return o;
}

Outcome c5_lemma33() {
  Outcome o;
  const ArcSet F = ArcSet::single(0.0, 0.5);
  const std::vector<std::uint64_t> t{1000, 10000, 100000};
  struct Case {
    LengthSequence seq;
    double a;
    Verdict want;
  };
  const std::vector<Case> cases{
      {LengthSequence::harmonic(0.5), 1.0, Verdict::converges},
      {LengthSequence::harmonic(2.0), 0.5, Verdict::diverges},
      {LengthSequence::harmonic(1.5), 0.5, Verdict::converges},
      {LengthSequence::harmonic(1.5), 1.0, Verdict::diverges},
  };
  int conv = 0, div = 0;
  for (const Case& c : cases) {
    const Lemma33Report r = lemma33_equiv(c.seq, c.a, F, t);
    const std::string tag = c.seq.describe() + " a=" + fmt("%g", c.a);
    o.require(r.agree, "energy and Shepp disagree at " + tag);
    o.require(r.energy.verdict == c.want && r.shepp.verdict == c.want, "ladder verdict wrong at " + tag);
    (c.want == Verdict::converges ? conv : div) += 1;
  }
  if (o.pass) o.detail = std::to_string(conv) + " bounded and " + std::to_string(div) + " unbounded pairs agree";
  return o;
}

Outcome c6_flatness() {
  Outcome o;
  const PiecewisePolyDensity tent = tent_density();
  const DensityAnalysis an = analyze(tent);
  double worst = 0.0;
  const std::vector<LengthSequence> seqs{LengthSequence::harmonic(1.0), LengthSequence::harmonic(0.5),
                                         LengthSequence::power(1.0, 0.6), LengthSequence::log_harmonic(),
                                         LengthSequence::power(0.5, 0.5)};
  const std::vector<std::uint64_t> cps{100, 1000, 10000};
  for (const LengthSequence& seq : seqs) {
    long double sum = 0.0L;
    std::size_t next = 0;
    std::vector<double> want;
    for (std::uint64_t n = 1; n <= cps.back(); ++n) {
      const double r = 0.5 * seq(n);
      const double term = flatness_term(tent, an.m_f, 0.0, seq(n));
      worst = std::max(worst, rel_err(term, r * r));
      sum += static_cast<long double>(r) * r;
      if (n == cps[next]) {
        want.push_back(static_cast<double>(sum));
        ++next;
      }
    }
    const FlatnessReport rep = flatness_partial(tent, an, 0.0, seq, cps);
    for (std::size_t i = 0; i < cps.size(); ++i) {
      o.require(rel_err(rep.partial_sums[i], want[i]) <= 1e-12, "flatness partial off for " + seq.describe());
    }
    if (ell2_classify(seq) == Verdict::converges) {
      o.require(rep.classification == Verdict::converges, "not convergent for " + seq.describe());
    }
  }
  o.require(worst <= 1e-12, "flatness term relative error " + fmt("%.2e", worst));
  if (o.pass) o.detail = "worst term error " + fmt("%.2e", worst);
  return o;
}

Outcome c7_billard() {
  Outcome o;
  auto make = [](const char* density, const SupportMeasure& sigma) {
    BillardConfig b;
    b.density = parse_density(density);
    b.lengths = LengthSequence::harmonic(0.5);
    b.sigma = sigma;
    b.checkpoints = {100, 1000, 10000};
    b.trials = 10000;
    b.seed = 31;
    b.threads = threads();
    return b;
  };
  const std::vector<BillardConfig> configs{
      make("uniform", SupportMeasure::atom(0.3)),
      make("uniform", SupportMeasure::lebesgue_on(ArcSet::full())),
      make("step:0.5:1.5:0.5", SupportMeasure::lebesgue_on(ArcSet::single(0.1, 0.3))),
  };
  double worst = 0.0;
  for (std::size_t i = 0; i < configs.size(); ++i) {
    for (const BillardMoment& m : billard_moments(configs[i])) {
      const double z = std::abs(m.mean - 1.0) / m.mean_se;
      worst = std::max(worst, z);
      o.require(z <= 3.0, "E[M] off 1 in config " + std::to_string(i) + " at N=" + std::to_string(m.n));
      if (i == 0) {
        double prod = 1.0;
        for (std::uint64_t n = 1; n <= m.n; ++n) prod /= 1.0 - configs[i].lengths(n);
        o.require(m.second_closed_form && rel_err(*m.second_closed_form, prod) < 1e-12, "closed form mismatch");
        o.require(std::abs(m.second - prod) <= 3.0 * m.second_se, "second moment off at N=" + std::to_string(m.n));
      }
    }
  }
  if (o.pass) o.detail = "largest |E[M]-1| " + fmt("%.2f", worst) + " SE";
  return o;
}

Outcome c8_coupling() {
  Outcome o;
  const PiecewisePolyDensity tent = tent_density();
  const PiecewisePolyDensity step = step_density(0.5, 1.5, 0.5);
  struct Case {
    CoupledModel model;
    const PiecewisePolyDensity* law;
  };
  const std::vector<Arc> two{{0.4, 0.2}, {0.9, 0.2}};
  const PiecewisePolyDensity uni = uniform_density();
  const std::vector<Case> cases{
      {CoupledModel::restrict_to(tent, ArcSet::single(0.2, 0.4)), &tent},
      {CoupledModel::restrict_to(step, ArcSet::from_arcs(two)), &step},
      {CoupledModel::comparison(step, uni, ArcSet::single(0.1, 0.3)), &uni},
  };
  double worst = 0.0;
  for (std::size_t i = 0; i < cases.size(); ++i) {
    const auto xs = coupled_samples(cases[i].model, 100000, 2026 + i);
    const double ks = ks_statistic(xs, [&](double x) { return cases[i].law->cdf(x); });
    const double ratio = ks / ks_critical_1pct(xs.size());
    worst = std::max(worst, ratio);
    o.require(ratio < 1.0, "KS above the 1% critical value for decomposition " + std::to_string(i));
  }
  TrialConfig cfg;
  cfg.density = tent;
  cfg.lengths = LengthSequence::harmonic(0.8);
  cfg.n_max = 5000;
  cfg.checkpoints = {10, 100, 1000, 5000};
  for (std::uint64_t seed : {0u, 1u, 99u}) {
    cfg.seed = seed;
    const CoupledModel m = CoupledModel::trivial(tent);
    const CoupledTrialResult c = run_coupled_trial(m, cfg.lengths, cfg.n_max, cfg.target, seed, cfg.checkpoints);
    o.require(m.alpha1() == 1.0 && c.full == run_trial(cfg), "alpha_1 = 1 differs from run_trial");
  }
  if (o.pass) o.detail = "largest KS / critical " + fmt("%.3f", worst);
  return o;
}

Outcome c9_comparison() {
  Outcome o;
  struct Pair {
    const char* mu;
    const char* nu;
    const char* U;
    const char* K;
  };
  int rows = 0;
  for (const Pair& p : {Pair{"uniform", "step:1.5:0.5:0.5", "arc:0.1:0.4", "arc:0.2:0.3"},
                        Pair{"tent", "uniform", "arc:0.05:0.2", "arc:0.1:0.15"},
                        Pair{"step:0.5:1.5:0.5", "uniform", "arc:0.1:0.4", "arc:0.2:0.3"}}) {
    ComparisonConfig cfg;
    cfg.mu = parse_density(p.mu);
    cfg.nu = parse_density(p.nu);
    cfg.U = parse_set(p.U);
    cfg.K = parse_set(p.K);
    cfg.lengths = LengthSequence::harmonic(1.5);
    cfg.checkpoints = log_checkpoints(10000, 2);
    cfg.trials = 2000;
    cfg.seed = 5;
    cfg.threads = threads();
    const ComparisonReport r = comparison_experiment(cfg);
    const std::string tag = std::string(p.mu) + " vs " + p.nu;
    o.require(r.lambda_identical, "marked-step coverings differ for " + tag);
    for (const ComparisonRow& row : r.rows) {
      o.require(row.p_nu >= row.p_mu - 2.0 * row.se_diff, tag + " out of order at N=" + std::to_string(row.n));
      ++rows;
    }
  }
  if (o.pass) o.detail = std::to_string(rows) + " checkpoints ordered over 3 pairs";
  return o;
}

Outcome c10_determinism() {
  Outcome o;
  TrialConfig cfg;
  cfg.density = tent_density();
  cfg.lengths = LengthSequence::harmonic(0.9);
  cfg.n_max = 20000;
  cfg.checkpoints = log_checkpoints(cfg.n_max, 4);
  cfg.seed = 123;
  auto jsonl = [&](int t) {
    std::ostringstream os;
    const auto rs = run_trials(cfg, 64, t);
    write_trials_jsonl(rs, os);
    return os.str();
  };
  o.require(jsonl(1) == jsonl(8), "JSONL differs between 1 and 8 threads");

  std::mt19937_64 gen(10);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  double worst = 0.0;
  for (int round = 0; round < 200 && o.pass; ++round) {
    ArcSet s = ArcSet::full();
    NaiveArcs ref = NaiveArcs::full();
    for (int i = 0; i < 500; ++i) {
      const double start = u(gen);
      const double len = 0.2 * u(gen) / (1.0 + i / 20.0);
      const double before = s.measure();
      const double overlap = s.overlap_length(Arc{start, len});
      s.subtract(Arc{start, len});
      ref.subtract(start, len);
      const double e = std::max({std::abs(s.measure() - ref.measure()), std::abs(s.measure() - (before - overlap)),
                                 std::abs(s.measure() - s.recomputed_measure())});
      worst = std::max(worst, e);
      const double x = u(gen);
      o.require(s.contains(x) == ref.contains(x), "membership differs from the reference");
    }
  }
  o.require(worst <= 1e-12, "measure accounting error " + fmt("%.2e", worst));
  if (o.pass) o.detail = "JSONL identical; 1e5 ArcSet operations, worst error " + fmt("%.2e", worst);
  return o;
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> gates{
      {"C1 phase-transition decay", c1_phase_transition},
      {"C2 step-density threshold", c2_step_threshold},
      {"C3 Shepp classification", c3_shepp},
      {"C4 kernel and energy exactness", c4_kernel},
      {"C5 energy/Shepp co-behavior", c5_lemma33},
      {"C6 flatness bound", c6_flatness},
      {"C7 martingale checks", c7_billard},
      {"C8 coupling laws", c8_coupling},
      {"C9 comparison principle", c9_comparison},
      {"C10 determinism and structure", c10_determinism},
  };
  int failed = 0;
  for (const auto& [name, run] : gates) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = run();
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail = std::string("exception: ") + e.what();
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::printf("%s %s: %s (%.1f s)\n", o.pass ? "PASS" : "FAIL", name, o.detail.c_str(), secs);
    std::fflush(stdout);
    failed += o.pass ? 0 : 1;
  }
  return failed == 0 ? 0 : 1;
}
