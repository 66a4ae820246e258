#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <span>
#include <vector>

namespace dvcover {

/// Neumaier compensated summation.
class CompensatedSum {
 public:
  CompensatedSum() = default;
  explicit CompensatedSum(double init) : sum_(init) {}

  void add(double x) {
    const double t = sum_ + x;
    if (std::abs(sum_) >= std::abs(x)) {
      comp_ += (sum_ - t) + x;
    } else {
      comp_ += (x - t) + sum_;
    }
    sum_ = t;
  }

  CompensatedSum& operator+=(double x) {
    add(x);
    return *this;
  }

  [[nodiscard]] double value() const { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();

/// Running log(sum(exp(x_i))), rescaled whenever a larger term arrives.
class LogSumExp {
 public:
  void add_log(double x);
  [[nodiscard]] double log_value() const;
  [[nodiscard]] bool empty() const { return max_ == kNegInf; }

 private:
  double max_ = kNegInf;
  CompensatedSum scaled_;
};

/// log(exp(x) + exp(y))
double log_add(double x, double y);

struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
  double slope_stderr = 0.0;
  std::size_t points = 0;
};

LinearFit fit_line(std::span<const double> x, std::span<const double> y);

/// Sup distance between the empirical CDF of `samples` and `cdf`.
double ks_statistic(std::vector<double> samples, const std::function<double(double)>& cdf);

/// Asymptotic one-sample KS critical value at level 1%.
double ks_critical_1pct(std::size_t n);

struct MeanEstimate {
  double mean = 0.0;
  double std_error = 0.0;
  std::size_t count = 0;
};

MeanEstimate mean_and_stderr(std::span<const double> xs);

}  // namespace dvcover
