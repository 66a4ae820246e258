#include "dvcover/numerics.hpp"

#include <algorithm>
#include <cmath>

#include "dvcover/errors.hpp"

namespace dvcover {

void LogSumExp::add_log(double x) {
  if (x == kNegInf) return;
  if (x > max_) {
    if (max_ != kNegInf) {
      const double scale = std::exp(max_ - x);
      scaled_ = CompensatedSum(scaled_.value() * scale);
    }
    max_ = x;
  }
  scaled_.add(std::exp(x - max_));
}

double LogSumExp::log_value() const {
  if (max_ == kNegInf) return kNegInf;
  return max_ + std::log(scaled_.value());
}

double log_add(double x, double y) {
  if (x < y) std::swap(x, y);
  if (y == kNegInf) return x;
  return x + std::log1p(std::exp(y - x));
}

LinearFit fit_line(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) {
    throw ValidationError("fit_line: need at least two paired points");
  }
  const auto n = static_cast<double>(x.size());
  double mx = 0.0;
  double my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0;
  double sxy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  if (sxx == 0.0) throw ValidationError("fit_line: degenerate abscissae");
  LinearFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  fit.points = x.size();
  if (x.size() > 2) {
    double rss = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      const double r = y[i] - (fit.intercept + fit.slope * x[i]);
      rss += r * r;
    }
    fit.slope_stderr = std::sqrt(rss / (n - 2.0) / sxx);
  }
  return fit;
}

double ks_statistic(std::vector<double> samples, const std::function<double(double)>& cdf) {
  if (samples.empty()) throw ValidationError("ks_statistic: no samples");
  std::sort(samples.begin(), samples.end());
  const auto n = static_cast<double>(samples.size());
  double d = 0.0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const double f = cdf(samples[i]);
    d = std::max(d, std::max(static_cast<double>(i + 1) / n - f, f - static_cast<double>(i) / n));
  }
  return d;
}

double ks_critical_1pct(std::size_t n) {
  // sqrt(-ln(0.005) / 2) = 1.62762
  return 1.6276236 / std::sqrt(static_cast<double>(n));
}

MeanEstimate mean_and_stderr(std::span<const double> xs) {
  MeanEstimate est;
  est.count = xs.size();
  if (xs.empty()) return est;
  CompensatedSum sum;
  for (double x : xs) sum.add(x);
  est.mean = sum.value() / static_cast<double>(xs.size());
  if (xs.size() > 1) {
    CompensatedSum ss;
    for (double x : xs) ss.add((x - est.mean) * (x - est.mean));
    const double var = ss.value() / static_cast<double>(xs.size() - 1);
    est.std_error = std::sqrt(var / static_cast<double>(xs.size()));
  }
  return est;
}

}  // namespace dvcover
