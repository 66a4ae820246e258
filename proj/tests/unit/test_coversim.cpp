#include <doctest.h>

#include <cmath>
#include <vector>

#include "dvcover/coversim.hpp"
#include "dvcover/errors.hpp"
#include "dvcover/numerics.hpp"

using namespace dvcover;

namespace {

TrialConfig uniform_config(double c, std::uint64_t n, std::vector<std::uint64_t> cps) {
  TrialConfig cfg;
  cfg.lengths = LengthSequence::harmonic(c);
  cfg.n_max = n;
  cfg.checkpoints = std::move(cps);
  return cfg;
}

}  // namespace

TEST_SUITE("coversim") {
  TEST_CASE("uniform exact product") {
    const std::vector<std::uint64_t> cps{1, 4};
    const ExpectedUncovered e =
        expected_uncovered_exact(uniform_density(), LengthSequence::harmonic(0.5), ArcSet::full(), cps);
    CHECK(e.values[0] == 0.5);
    CHECK(e.values[1] == doctest::Approx(0.2734375).epsilon(1e-15));
  }

  TEST_CASE("quadrature on an affine density matches the uniform-piece product") {
    // the tent is affine on [0.1, 0.4] and balls of radius <= 0.05 stay inside it
    const PiecewisePolyDensity tent = tent_density();
    const std::vector<double> table{0.1, 0.08, 0.05, 0.02};
    const LengthSequence seq = LengthSequence::explicit_table(table);
    const std::vector<std::uint64_t> cps{4};
    const ExpectedUncovered e = expected_uncovered_exact(tent, seq, ArcSet::single(0.2, 0.1), cps);
    // integral of prod(1 - (t + 3/4) l_n) over [0.2, 0.3], a polynomial in t, by 8-point Gauss-Legendre
    const double xg[4] = {0.1834346424956498, 0.5255324099163290, 0.7966664774136267, 0.9602898564975363};
    const double wg[4] = {0.3626837833783620, 0.3137066458778873, 0.2223810344533745, 0.1012285362903763};
    double want = 0.0;
    for (int j = 0; j < 4; ++j) {
      for (int s : {-1, 1}) {
        const double t = 0.25 + 0.05 * s * xg[j];
        double prod = 1.0;
        for (double l : table) prod *= 1.0 - (t + 0.75) * l;
        want += 0.05 * wg[j] * prod;
      }
    }
    CHECK(e.values[0] == doctest::Approx(want).epsilon(1e-12));
  }

  TEST_CASE("quadrature handles balls straddling breakpoints") {
    const PiecewisePolyDensity step = step_density(0.5, 1.5, 0.5);
    const std::vector<std::uint64_t> cps{20};
    const ExpectedUncovered e = expected_uncovered_exact(step, LengthSequence::harmonic(1.0), ArcSet::single(0.0, 0.5), cps);
    // independent composite midpoint rule on a fine grid
    const int m = 200000;
    double want = 0.0;
    for (int i = 0; i < m; ++i) {
      const double t = (i + 0.5) * 0.5 / m;
      double prod = 1.0;
      for (int n = 1; n <= 20; ++n) {
        const double l = std::min(1.0 / n, 0.99);
        prod *= 1.0 - step.arc_mass(t - 0.5 * l, l);
      }
      want += prod * 0.5 / m;
    }
    CHECK(e.values[0] == doctest::Approx(want).epsilon(1e-7));
    CHECK(e.error_estimates[0] <= 1e-6 * e.values[0] + 1e-15);
  }

  TEST_CASE("trials are reproducible and thread-count invariant") {
    const TrialConfig cfg = uniform_config(0.5, 2000, {10, 100, 2000});
    CHECK(run_trial(cfg) == run_trial(cfg));
    const auto one = run_trials(cfg, 16, 1);
    const auto four = run_trials(cfg, 16, 4);
    CHECK(one == four);
    CHECK(one[3].seed == cfg.seed + 3);
    for (const TrialResult& r : one) {
      REQUIRE(r.trajectory.size() == 3);
      CHECK(r.trajectory[0].uncovered >= r.trajectory[1].uncovered);
      CHECK(r.trajectory[1].uncovered >= r.trajectory[2].uncovered);
      CHECK(r.initial_uncovered == 1.0);
    }
  }

  TEST_CASE("uncovered measure is bounded by the exact expectation on average") {
    const TrialConfig cfg = uniform_config(0.5, 1000, {100, 1000});
    const auto trials = run_trials(cfg, 400, 2);
    std::vector<double> last;
    for (const auto& r : trials) last.push_back(r.trajectory.back().uncovered);
    const MeanEstimate est = mean_and_stderr(last);
    const std::vector<std::uint64_t> cps{1000};
    const double exact =
        expected_uncovered_exact(uniform_density(), cfg.lengths, ArcSet::full(), cps).values[0];
    CHECK(std::abs(est.mean - exact) < 4 * est.std_error);
  }

  TEST_CASE("constant lengths cover quickly and report a cover time") {
    TrialConfig cfg;
    cfg.lengths = LengthSequence::constant(0.3);
    cfg.n_max = 10000;
    cfg.checkpoints = {10000};
    const TrialResult r = run_trial(cfg);
    REQUIRE(r.cover_time.has_value());
    CHECK(r.steps == *r.cover_time);
    CHECK(r.trajectory[0].uncovered == 0.0);
  }

  TEST_CASE("point targets record first hits") {
    const std::vector<double> pts{0.1, 0.9, 0.5, 0.3};
    PointTracker tr(pts);
    tr.hit(0.85, 0.1, 3);
    tr.hit(0.95, 0.2, 4);
    const auto hits = tr.first_hits();
    CHECK(hits[1] == 3u);
    CHECK(hits[0] == 4u);
    CHECK_FALSE(hits[2].has_value());
    CHECK(tr.alive() == 2);
    tr.hit(0.3, 0.1, 5);  // open arc: the endpoint 0.3 survives
    CHECK(tr.alive() == 2);

    TrialConfig cfg = uniform_config(1.5, 1000, {1000});
    cfg.target = PointTarget{{0.0, 0.25, 0.5, 0.75}};
    const TrialResult r = run_trial(cfg);
    CHECK(r.first_hits.size() == 4);
    CHECK(r.initial_uncovered == 1.0);
  }

  TEST_CASE("bad configurations are rejected") {
    TrialConfig cfg = uniform_config(0.5, 10, {20});
    CHECK_THROWS_AS(run_trial(cfg), DomainError);
    cfg.checkpoints = {5, 5};
    CHECK_THROWS_AS(run_trial(cfg), DomainError);
    BillardConfig b;
    b.lengths = LengthSequence::constant(0.1);
    b.checkpoints = {10};
    CHECK_THROWS_AS(billard_moments(b), PreconditionError);
  }

  TEST_CASE("billard martingale has unit mean and the atom second moment") {
    BillardConfig b;
    b.sigma = SupportMeasure::atom(0.3);
    b.checkpoints = {10, 100};
    b.trials = 4000;
    b.threads = 2;
    const auto moments = billard_moments(b);
    REQUIRE(moments.size() == 2);
    for (const auto& m : moments) {
      CHECK(std::abs(m.mean - 1.0) < 4 * m.mean_se);
      REQUIRE(m.second_closed_form.has_value());
      CHECK(std::abs(m.second - *m.second_closed_form) < 4 * m.second_se);
    }
    double prod = 1.0;
    for (int n = 1; n <= 100; ++n) prod /= 1.0 - 0.5 / n;
    CHECK(*moments[1].second_closed_form == doctest::Approx(prod).epsilon(1e-12));
  }

  TEST_CASE("coupled model: trivial decomposition reproduces run_trial") {
    const TrialConfig cfg = uniform_config(0.8, 3000, {100, 3000});
    const CoupledModel m = CoupledModel::trivial(cfg.density);
    const CoupledTrialResult c = run_coupled_trial(m, cfg.lengths, cfg.n_max, cfg.target, cfg.seed, cfg.checkpoints);
    CHECK(c.full == run_trial(cfg));
    CHECK(c.marked_steps == c.full.steps);
  }

  TEST_CASE("coupled model: samples follow the mixture") {
    const PiecewisePolyDensity tent = tent_density();
    const CoupledModel m = CoupledModel::restrict_to(tent, ArcSet::single(0.2, 0.4));
    CHECK(m.alpha1() == doctest::Approx(tent.mass(ArcSet::single(0.2, 0.4))));
    const auto xs = coupled_samples(m, 20000, 9);
    CHECK(ks_statistic(xs, [&](double x) { return tent.cdf(x); }) < ks_critical_1pct(xs.size()));
    CHECK(m.mixture().cdf(0.5) == doctest::Approx(0.5));
  }

  TEST_CASE("comparison requires domination on U") {
    ComparisonConfig cfg;
    cfg.mu = step_density(1.5, 0.5, 0.5);
    cfg.nu = uniform_density();
    cfg.U = ArcSet::single(0.1, 0.3);
    cfg.K = ArcSet::single(0.2, 0.1);
    cfg.checkpoints = {100};
    CHECK_THROWS_AS(comparison_experiment(cfg), PreconditionError);
    cfg.mu = step_density(0.5, 1.5, 0.5);
    cfg.K = ArcSet::single(0.05, 0.1);
    CHECK_THROWS_AS(comparison_experiment(cfg), PreconditionError);
  }

  TEST_CASE("comparison: shared marks give identical lambda coverings") {
    ComparisonConfig cfg;
    cfg.mu = step_density(0.5, 1.5, 0.5);
    cfg.nu = uniform_density();
    cfg.U = ArcSet::single(0.1, 0.3);
    cfg.K = ArcSet::single(0.2, 0.1);
    cfg.lengths = LengthSequence::harmonic(1.5);
    cfg.checkpoints = {100, 1000};
    cfg.trials = 300;
    cfg.threads = 2;
    const ComparisonReport r = comparison_experiment(cfg);
    CHECK(r.alpha1 == doctest::Approx(0.15));
    CHECK(r.lambda_identical);
    CHECK(r.all_ordered);
    CHECK(r.rows.size() == 2);
  }
}
