#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include "dvcover/errors.hpp"
#include "dvcover/numerics.hpp"

using namespace dvcover;

TEST_SUITE("numerics") {
  TEST_CASE("compensated sum recovers cancelled terms") {
    CompensatedSum s;
    s.add(1.0);
    s.add(1e100);
    s.add(1.0);
    s.add(-1e100);
    CHECK(s.value() == 2.0);

    CompensatedSum t;
    for (int i = 0; i < 1000000; ++i) t += 0.1;
    CHECK(std::abs(t.value() - 100000.0) < 1e-9);
  }

  TEST_CASE("log-sum-exp matches direct sums and survives overflow") {
    LogSumExp lse;
    CHECK(lse.empty());
    CHECK(lse.log_value() == kNegInf);
    lse.add_log(std::log(2.0));
    lse.add_log(std::log(3.0));
    lse.add_log(kNegInf);
    CHECK(lse.log_value() == doctest::Approx(std::log(5.0)).epsilon(1e-15));

    LogSumExp big;
    big.add_log(1000.0);
    big.add_log(1000.0);
    CHECK(big.log_value() == doctest::Approx(1000.0 + std::log(2.0)).epsilon(1e-15));
    CHECK(log_add(kNegInf, 3.0) == 3.0);
    CHECK(log_add(0.0, 0.0) == doctest::Approx(std::log(2.0)));
  }

  TEST_CASE("fit_line recovers an exact line") {
    std::vector<double> x{1, 2, 3, 4, 5};
    std::vector<double> y;
    for (double v : x) y.push_back(-0.5 * v + 2.0);
    const LinearFit fit = fit_line(x, y);
    CHECK(fit.slope == doctest::Approx(-0.5));
    CHECK(fit.intercept == doctest::Approx(2.0));
    CHECK(fit.slope_stderr < 1e-12);
    CHECK(fit.points == 5);
    const std::vector<double> one{1.0};
    CHECK_THROWS_AS(fit_line(one, one), ValidationError);
  }

  TEST_CASE("mean and standard error") {
    const std::vector<double> xs{1.0, 2.0, 3.0, 4.0};
    const MeanEstimate m = mean_and_stderr(xs);
    CHECK(m.mean == 2.5);
    CHECK(m.std_error == doctest::Approx(std::sqrt(5.0 / 3.0 / 4.0)));
    CHECK(mean_and_stderr(std::vector<double>{}).count == 0);
  }

  TEST_CASE("ks statistic: exact small case and uniform samples") {
    const std::vector<double> two{0.25, 0.75};
    CHECK(ks_statistic(two, [](double x) { return x; }) == doctest::Approx(0.25));

    std::mt19937_64 gen(7);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<double> xs(20000);
    for (double& x : xs) x = u(gen);
    CHECK(ks_statistic(xs, [](double x) { return x; }) < ks_critical_1pct(xs.size()));
    std::vector<double> skew = xs;
    for (double& x : skew) x = x * x;
    CHECK(ks_statistic(skew, [](double x) { return x; }) > ks_critical_1pct(xs.size()));
  }
}
