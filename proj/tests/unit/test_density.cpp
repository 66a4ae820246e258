#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include "dvcover/density.hpp"
#include "dvcover/errors.hpp"

using namespace dvcover;

namespace {

// midpoint rule on a fine grid; independent of the piece bookkeeping
double numeric_arc_mass(const PiecewisePolyDensity& f, double start, double length) {
  const int n = 200000;
  double total = 0.0;
  for (int i = 0; i < n; ++i) total += f.value(start + (i + 0.5) * length / n);
  return total * length / n;
}

double step_cdf(double x) {
  const double k = std::floor(x);
  const double y = x - k;
  return k + (y < 0.5 ? 0.5 * y : 0.25 + 1.5 * (y - 0.5));
}

double tent_value(double x) {
  const double y = wrap01(x);
  return (y < 0.5 ? y : 1.0 - y) + 0.75;
}

}  // namespace

TEST_SUITE("density") {
  TEST_CASE("canonical densities have unit mass and the stated infima") {
    const std::vector<PiecewisePolyDensity> fs{uniform_density(), tent_density(), step_density(0.5, 1.5, 0.5),
                                               fat_cantor_density(3)};
    for (const auto& f : fs) {
      CHECK(f.integrate(0.0, 1.0) == doctest::Approx(1.0).epsilon(1e-14));
      CHECK(f.cdf(1.0) == doctest::Approx(1.0).epsilon(1e-14));
    }
    CHECK(fs[1].ess_inf() == 0.75);
    CHECK(fs[1].ess_sup() == 1.25);
    CHECK(fs[2].ess_inf() == 0.5);
    CHECK(fs[3].ess_inf() == doctest::Approx(fs[3].pieces()[0].v_lo));
    CHECK_FALSE(fs[3].caveats().empty());
  }

  TEST_CASE("tent values match |x| + 3/4") {
    const PiecewisePolyDensity f = tent_density();
    for (double x : {0.0, 0.1, 0.25, 0.5, 0.6, 0.99}) CHECK(f.value(x) == doctest::Approx(tent_value(x)));
  }

  TEST_CASE("arc mass matches numeric integration, including wrapping arcs") {
    const PiecewisePolyDensity tent = tent_density();
    const PiecewisePolyDensity step = step_density(0.5, 1.5, 0.5);
    std::mt19937_64 gen(11);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int i = 0; i < 20; ++i) {
      const double s = u(gen);
      const double l = u(gen);
      CHECK(tent.arc_mass(s, l) == doctest::Approx(numeric_arc_mass(tent, s, l)).epsilon(1e-8));
      CHECK(step.arc_mass(s, l) == doctest::Approx(step_cdf(s + l) - step_cdf(s)).epsilon(1e-13));
    }
    CHECK(step.arc_mass(0.9, 0.2) == doctest::Approx(0.1 * 1.5 + 0.1 * 0.5));
  }

  TEST_CASE("mu of a ball inside one affine piece is f(t) * 2r") {
    const PiecewisePolyDensity tent = tent_density();
    CHECK(mu_ball(tent, 0.2, 0.05) == doctest::Approx(tent.value(0.2) * 0.1).epsilon(1e-14));
    CHECK(mu_ball(tent, 0.0, 0.1) == doctest::Approx(0.75 * 0.2 + 0.01).epsilon(1e-14));
    CHECK_THROWS_AS(mu_ball(tent, 0.0, 0.5), DomainError);
  }

  TEST_CASE("inverse cdf inverts the cdf") {
    for (const auto& f : {tent_density(), step_density(0.5, 1.5, 0.5), fat_cantor_density(2)}) {
      for (int i = 0; i <= 100; ++i) {
        const double x = i / 100.0 * 0.999;
        CHECK(f.inverse_cdf(f.cdf(x)) == doctest::Approx(x).epsilon(1e-12));
      }
      CHECK(f.inverse_cdf(0.0) == 0.0);
    }
  }

  TEST_CASE("K_f and dom1 for canonical densities") {
    const DensityAnalysis tent = analyze(tent_density());
    CHECK(tent.m_f == 0.75);
    CHECK(tent.K_f.size() == 1);
    CHECK(tent.K_f.contains(0.0));
    CHECK(tent.K_f.measure() == 0.0);
    CHECK(tent.dom1_holds == TriState::yes);

    const DensityAnalysis step = analyze(step_density(0.5, 1.5, 0.5));
    CHECK(step.K_f.measure() == doctest::Approx(0.5));
    CHECK(step.K_f.contains(0.25));
    CHECK_FALSE(step.K_f.contains(0.75));

    const DensityAnalysis uni = analyze(uniform_density());
    CHECK(uni.K_f.is_full());
  }

  TEST_CASE("ess inf over intervals and local structure") {
    const PiecewisePolyDensity tent = tent_density();
    CHECK(ess_inf_interval(tent, Arc{0.2, 0.1}) == doctest::Approx(0.95));
    CHECK(ess_inf_interval(tent, Arc{0.9, 0.2}) == doctest::Approx(0.75));
    const LocalStructure ls = local_structure(tent, 0.0);
    CHECK(ls.at_breakpoint);
    CHECK(ls.left_slope == -1.0);
    CHECK(ls.right_slope == 1.0);
    CHECK(local_ess_inf(step_density(0.5, 1.5, 0.5), 0.5) == 0.5);
    CHECK(local_ess_sup(step_density(0.5, 1.5, 0.5), 0.5) == 1.5);
  }

  TEST_CASE("tent flatness term at 0 is r^2") {
    const PiecewisePolyDensity tent = tent_density();
    for (double ell : {0.5, 0.1, 1e-3, 1e-6}) {
      const double r = 0.5 * ell;
      CHECK(std::abs(flatness_term(tent, 0.75, 0.0, ell) - r * r) <= 1e-12 * r * r);
    }
    const DensityAnalysis a = analyze(tent);
    const std::vector<std::uint64_t> cps{10, 1000};
    const FlatnessReport conv = flatness_partial(tent, a, 0.0, LengthSequence::harmonic(0.5), cps);
    CHECK(conv.classification == Verdict::converges);
    const FlatnessReport div = flatness_partial(tent, a, 0.0, LengthSequence::power(0.5, 0.5), cps);
    CHECK(div.classification == Verdict::diverges);
  }

  TEST_CASE("flatness at a jump diverges with l1") {
    const PiecewisePolyDensity step = step_density(0.5, 1.5, 0.5);
    const DensityAnalysis a = analyze(step);
    const std::vector<std::uint64_t> cps{100};
    CHECK(flatness_partial(step, a, 0.0, LengthSequence::harmonic(1.0), cps).classification == Verdict::diverges);
    CHECK(flatness_partial(step, a, 0.25, LengthSequence::harmonic(1.0), cps).classification ==
          Verdict::converges);
  }

  TEST_CASE("borel-cantelli point series") {
    const PiecewisePolyDensity tent = tent_density();
    const PointSeriesReport r = borel_cantelli_point(tent, 0.0, LengthSequence::power(1.0, 2.0), 1000);
    CHECK(r.classification == Verdict::converges);
    double brute = 0.0;
    for (int k = 1; k <= 1000; ++k) brute += numeric_arc_mass(tent, -0.5 * std::min(1.0 / (k * k), 0.99),
                                                             std::min(1.0 / (k * k), 0.99));
    CHECK(r.partial_sum == doctest::Approx(brute).epsilon(1e-8));
    CHECK(borel_cantelli_point(tent, 0.0, LengthSequence::harmonic(1.0), 100).classification ==
          Verdict::diverges);
  }

  TEST_CASE("raw pieces, wrapping and validation") {
    const std::vector<RawPiece> raw{{0.75, 0.25, {0.5}}, {0.25, 0.75, {1.5}}};
    const PiecewisePolyDensity f = PiecewisePolyDensity::from_raw(raw);
    CHECK(f.value(0.9) == 0.5);
    CHECK(f.value(0.1) == 0.5);
    CHECK(f.value(0.5) == 1.5);
    const std::vector<RawPiece> slope{{0.0, 1.0, {0.5, 1.0}}};
    CHECK(PiecewisePolyDensity::from_raw(slope).value(0.5) == doctest::Approx(1.0));
    const std::vector<RawPiece> bad{{0.0, 1.0, {2.0}}};
    CHECK_THROWS_AS(PiecewisePolyDensity::from_raw(bad), ValidationError);
    const std::vector<RawPiece> quad{{0.0, 1.0, {1.0, 0.0, 0.1}}};
    CHECK_THROWS_AS(PiecewisePolyDensity::from_raw(quad), ValidationError);
    CHECK_THROWS_AS(step_density(0.5, 1.5, 1.0), DomainError);
  }

  TEST_CASE("piece algebra") {
    const std::vector<Piece> a{{0.0, 1.0, 1.0, 1.0}};
    const std::vector<Piece> b{{0.0, 0.5, 0.5, 0.5}, {0.5, 1.0, 1.5, 1.5}};
    const ArcSet U = ArcSet::single(0.6, 0.2);
    CHECK(dominated_on(a, b, U));
    CHECK_FALSE(dominated_on(a, b, ArcSet::single(0.1, 0.2)));
    const std::vector<Piece> d = difference_pieces(b, a);
    CHECK(pieces_mass(d) == doctest::Approx(0.0).epsilon(1e-15));
    const std::vector<Piece> in = restrict_pieces(a, U, true);
    CHECK(pieces_mass(in) == doctest::Approx(0.2));
    CHECK(pieces_mass(restrict_pieces(a, U, false)) == doctest::Approx(0.8));
  }
}
