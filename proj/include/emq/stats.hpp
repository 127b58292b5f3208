#pragma once

#include <cstddef>
#include <functional>
#include <span>

namespace emq::stats {

double mean(std::span<const double> x);
/// Unbiased sample variance.
double variance(std::span<const double> x);

/// Two-sided Kolmogorov-Smirnov distance between the empirical distribution
/// of `samples` and a continuous reference CDF.
double ks_distance(std::span<const double> samples, const std::function<double(double)>& cdf);

/// Asymptotic critical value of the one-sample KS statistic at level alpha.
double ks_critical(std::size_t n, double alpha);

/// Standard error of the sample standard deviation of a correlated series,
/// estimated from the spread of per-block variances.
double blocked_std_error(std::span<const double> x, std::size_t blocks = 50);

/// Standard error of the mean of a correlated series by blocking.
double blocked_mean_error(std::span<const double> x, std::size_t blocks = 50);

/// Least-squares slope of log(err) against log(h); the observed convergence order.
double convergence_order(std::span<const double> h, std::span<const double> err);

}  // namespace emq::stats
