#include "obser/kernel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "obser/errors.hpp"

namespace obser {

KernelConfig::KernelConfig(double temperature, KernelFamily family)
    : temperature_(temperature), family_(family) {
  if (!(temperature > 0.0) || !std::isfinite(temperature)) {
    throw DomainError("kernel temperature must be positive and finite");
  }
}

double KernelConfig::floor() const { return std::exp(-2.0 / temperature_); }

double log_kernel(const Embedding& a, const Embedding& b, const KernelConfig& cfg) {
  // Rounding can push a.b slightly past +-1; the kernel range is [floor, 1].
  const double c = std::clamp(a.dot(b), -1.0, 1.0);
  return (c - 1.0) / cfg.temperature();
}

double kernel(const Embedding& a, const Embedding& b, const KernelConfig& cfg) {
  return std::exp(log_kernel(a, b, cfg));
}

double log_kernel_density(const Embedding& x, std::span<const Embedding> samples,
                          const KernelConfig& cfg) {
  if (samples.empty()) throw EmptyInput("kernel density needs at least one sample");
  std::vector<double> logs(samples.size());
  for (std::size_t j = 0; j < samples.size(); ++j) logs[j] = log_kernel(x, samples[j], cfg);
  return numeric::log_sum_exp(logs) - std::log(static_cast<double>(samples.size()));
}

double kernel_density(const Embedding& x, std::span<const Embedding> samples,
                      const KernelConfig& cfg) {
  if (samples.empty()) throw EmptyInput("kernel density needs at least one sample");
  if (cfg.temperature() < KernelConfig::kLogDomainThreshold) {
    return std::exp(log_kernel_density(x, samples, cfg));
  }
  double sum = 0.0;
  for (const auto& s : samples) sum += kernel(x, s, cfg);
  return sum / static_cast<double>(samples.size());
}

double kernel_density(const Embedding& x, const ObservationSet& samples,
                      const KernelConfig& cfg) {
  return kernel_density(x, samples.embeddings(), cfg);
}

Embedding mean_direction(std::span<const Embedding> queries) {
  if (queries.empty()) throw EmptyInput("mean direction of an empty query list");
  const std::size_t d = queries.front().dim();
  std::vector<double> sum(d, 0.0);
  for (const auto& q : queries) {
    if (q.dim() != d) throw DimensionMismatch(d, q.dim());
    for (std::size_t i = 0; i < d; ++i) sum[i] += q[i];
  }
  double n2 = 0.0;
  for (double& v : sum) {
    v /= static_cast<double>(queries.size());
    n2 += v * v;
  }
  if (std::sqrt(n2) <= 1e-9) throw DegenerateResultant();
  return Embedding::normalize(std::move(sum));
}

DenseMatrix log_density_matrix(std::span<const Embedding> rows,
                               std::span<const Embedding> cols, const KernelConfig& cfg) {
  DenseMatrix m(rows.size(), cols.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < cols.size(); ++j) m(i, j) = log_kernel(rows[i], cols[j], cfg);
  }
  return m;
}

DenseMatrix density_matrix(std::span<const Embedding> rows, std::span<const Embedding> cols,
                           const KernelConfig& cfg) {
  DenseMatrix m(rows.size(), cols.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < cols.size(); ++j) m(i, j) = kernel(rows[i], cols[j], cfg);
  }
  return m;
}

DenseMatrix density_matrix(const ObservationSet& rows, const ObservationSet& cols,
                           const KernelConfig& cfg) {
  if (!rows.empty() && !cols.empty() && rows.dim() != cols.dim()) {
    throw DimensionMismatch(rows.dim(), cols.dim());
  }
  return density_matrix(rows.embeddings(), cols.embeddings(), cfg);
}

namespace numeric {

double log_sum_exp(std::span<const double> values) {
  if (values.empty()) return -std::numeric_limits<double>::infinity();
  const double m = *std::max_element(values.begin(), values.end());
  if (!std::isfinite(m)) return m;
  double s = 0.0;
  for (double v : values) s += std::exp(v - m);
  return m + std::log(s);
}

double log_add_exp(double a, double b) {
  const double hi = std::max(a, b);
  const double lo = std::min(a, b);
  if (!std::isfinite(hi)) return hi;
  return hi + std::log1p(std::exp(lo - hi));
}

double pairwise_sum(std::span<const double> values) {
  if (values.size() <= 8) {
    double s = 0.0;
    for (double v : values) s += v;
    return s;
  }
  const std::size_t half = values.size() / 2;
  return pairwise_sum(values.first(half)) + pairwise_sum(values.subspan(half));
}

double mean(std::span<const double> values) {
  if (values.empty()) throw EmptyInput("mean of an empty range");
  return pairwise_sum(values) / static_cast<double>(values.size());
}

}  // namespace numeric

}  // namespace obser
