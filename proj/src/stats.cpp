#include "emq/stats.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "emq/errors.hpp"

namespace emq::stats {

double mean(std::span<const double> x) {
  if (x.empty()) throw InvalidArgument("mean of empty sample");
  double s = 0.0;
  for (double v : x) s += v;
  return s / static_cast<double>(x.size());
}

double variance(std::span<const double> x) {
  if (x.size() < 2) throw InvalidArgument("variance needs at least two samples");
  const double m = mean(x);
  double s = 0.0;
  for (double v : x) s += (v - m) * (v - m);
  return s / static_cast<double>(x.size() - 1);
}

double ks_distance(std::span<const double> samples, const std::function<double(double)>& cdf) {
  if (samples.empty()) throw InvalidArgument("KS distance of empty sample");
  std::vector<double> sorted(samples.begin(), samples.end());
  std::sort(sorted.begin(), sorted.end());
  const double n = static_cast<double>(sorted.size());
  double d = 0.0;
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    const double f = cdf(sorted[i]);
    d = std::max({d, static_cast<double>(i + 1) / n - f, f - static_cast<double>(i) / n});
  }
  return d;
}

double ks_critical(std::size_t n, double alpha) {
  return std::sqrt(-0.5 * std::log(alpha / 2.0)) / std::sqrt(static_cast<double>(n));
}

namespace {
std::vector<std::span<const double>> split(std::span<const double> x, std::size_t blocks) {
  if (blocks < 2 || x.size() < 2 * blocks) throw InvalidArgument("series too short for blocking");
  const std::size_t len = x.size() / blocks;
  std::vector<std::span<const double>> out;
  for (std::size_t b = 0; b < blocks; ++b) out.push_back(x.subspan(b * len, len));
  return out;
}
}  // namespace

double blocked_std_error(std::span<const double> x, std::size_t blocks) {
  std::vector<double> block_vars;
  for (auto blk : split(x, blocks)) block_vars.push_back(variance(blk));
  const double var_se = std::sqrt(variance(block_vars) / static_cast<double>(blocks));
  const double sd = std::sqrt(variance(x));
  return sd > 0.0 ? var_se / (2.0 * sd) : std::sqrt(var_se);
}

double blocked_mean_error(std::span<const double> x, std::size_t blocks) {
  std::vector<double> block_means;
  for (auto blk : split(x, blocks)) block_means.push_back(mean(blk));
  return std::sqrt(variance(block_means) / static_cast<double>(blocks));
}

double convergence_order(std::span<const double> h, std::span<const double> err) {
  if (h.size() != err.size() || h.size() < 2) throw InvalidArgument("convergence_order needs >= 2 paired samples");
  std::vector<double> lx, ly;
  for (std::size_t i = 0; i < h.size(); ++i) {
    lx.push_back(std::log(h[i]));
    ly.push_back(std::log(err[i]));
  }
  const double mx = mean(lx), my = mean(ly);
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    sxy += (lx[i] - mx) * (ly[i] - my);
    sxx += (lx[i] - mx) * (lx[i] - mx);
  }
  return sxy / sxx;
}

}  // namespace emq::stats
