#include <doctest.h>

#include <cmath>
#include <random>

#include "../support/naive_arcs.hpp"
#include "dvcover/arc_set.hpp"
#include "dvcover/errors.hpp"

using namespace dvcover;

TEST_SUITE("arc_set") {
  TEST_CASE("full circle minus one arc") {
    ArcSet s = ArcSet::full();
    CHECK(s.is_full());
    CHECK(s.measure() == 1.0);
    s.subtract(Arc{0.75, 0.5});
    CHECK_FALSE(s.is_full());
    CHECK(s.measure() == 0.5);
    CHECK(s.size() == 1);
    CHECK(s.contains(0.5));
    CHECK(s.contains(0.25));  // closed remnant
    CHECK(s.contains(0.75));
    CHECK_FALSE(s.contains(0.95));
    CHECK_FALSE(s.contains(0.05));
  }

  TEST_CASE("from_arcs merges and wraps") {
    const std::vector<Arc> arcs{{0.8, 0.3}, {0.05, 0.1}, {0.5, 0.1}};
    const ArcSet s = ArcSet::from_arcs(arcs);
    CHECK(s.size() == 2);
    CHECK(s.measure() == doctest::Approx(0.45));
    CHECK(s.contains(0.95));
    CHECK(s.contains(0.14));
    CHECK_FALSE(s.contains(0.2));
    CHECK(s.overlap_length(Arc{0.0, 0.2}) == doctest::Approx(0.15));
    CHECK(s.distance_to(0.3) == doctest::Approx(0.15));
    CHECK_THROWS_AS(ArcSet::single(0.1, -0.1), DomainError);
    CHECK(ArcSet::single(0.3, 1.0).is_full());
  }

  TEST_CASE("points survive subtraction only when outside the open arc") {
    const std::vector<double> pts{0.1, 0.2, 0.3};
    ArcSet s = ArcSet::from_points(pts);
    CHECK(s.size() == 3);
    CHECK(s.measure() == 0.0);
    s.subtract(Arc{0.1, 0.1});  // (0.1, 0.2) keeps both endpoints
    CHECK(s.size() == 3);
    s.subtract(Arc{0.15, 0.1});
    CHECK(s.size() == 2);
    CHECK_FALSE(s.contains(0.2));
    s.subtract(Arc{0.0, 1.0});
    CHECK(s.empty());
  }

  TEST_CASE("exact covering empties the set") {
    ArcSet s = ArcSet::single(0.2, 0.3);
    s.subtract(Arc{0.1, 0.25});
    s.subtract(Arc{0.3, 0.25});
    CHECK(s.empty());
    CHECK(s.measure() == 0.0);
  }

  TEST_CASE("randomized subtraction agrees with a naive reference") {
    std::mt19937_64 gen(2024);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int round = 0; round < 40; ++round) {
      ArcSet s = ArcSet::full();
      NaiveArcs ref = NaiveArcs::full();
      for (int i = 0; i < 500; ++i) {
        const double start = u(gen);
        const double len = 0.2 * u(gen) / (1.0 + i / 20.0);
        s.subtract(Arc{start, len});
        ref.subtract(start, len);
        REQUIRE(std::abs(s.measure() - ref.measure()) <= 1e-12);
        REQUIRE(std::abs(s.measure() - s.recomputed_measure()) <= 1e-12);
        const double x = u(gen);
        REQUIRE(s.contains(x) == ref.contains(x));
      }
    }
  }
}
