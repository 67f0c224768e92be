#pragma once

#include <span>
#include <vector>

#include "obser/embedding.hpp"

namespace obser {

enum class KernelFamily { kCosineExponential };

/// Temperature and family of the similarity kernel
/// phi(a, b) = exp((a.b - 1) / tau).
class KernelConfig {
 public:
  explicit KernelConfig(double temperature,
                        KernelFamily family = KernelFamily::kCosineExponential);

  double temperature() const { return temperature_; }
  KernelFamily family() const { return family_; }

  /// Smallest kernel value between unit vectors, exp(-2 / tau).
  double floor() const;

  /// Below this temperature densities are accumulated in the log domain.
  static constexpr double kLogDomainThreshold = 0.05;

 private:
  double temperature_;
  KernelFamily family_;
};

/// Row-major dense matrix.
class DenseMatrix {
 public:
  DenseMatrix() = default;
  DenseMatrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
  double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }
  std::span<const double> row(std::size_t i) const {
    return std::span<const double>(data_).subspan(i * cols_, cols_);
  }

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

double kernel(const Embedding& a, const Embedding& b, const KernelConfig& cfg);

/// log phi(a, b) = (a.b - 1) / tau, never underflows.
double log_kernel(const Embedding& a, const Embedding& b, const KernelConfig& cfg);

/// Mean kernel value of x against the samples. Switches to a log-sum-exp
/// accumulation when tau < KernelConfig::kLogDomainThreshold.
double kernel_density(const Embedding& x, std::span<const Embedding> samples,
                      const KernelConfig& cfg);
double kernel_density(const Embedding& x, const ObservationSet& samples,
                      const KernelConfig& cfg);

/// log of kernel_density, always evaluated with log-sum-exp.
double log_kernel_density(const Embedding& x, std::span<const Embedding> samples,
                          const KernelConfig& cfg);

/// Normalized arithmetic mean of the queries.
Embedding mean_direction(std::span<const Embedding> queries);

/// Entry (i, j) is kernel(rows[i], cols[j]).
DenseMatrix density_matrix(std::span<const Embedding> rows, std::span<const Embedding> cols,
                           const KernelConfig& cfg);
DenseMatrix density_matrix(const ObservationSet& rows, const ObservationSet& cols,
                           const KernelConfig& cfg);

/// Entry (i, j) is log_kernel(rows[i], cols[j]).
DenseMatrix log_density_matrix(std::span<const Embedding> rows,
                               std::span<const Embedding> cols, const KernelConfig& cfg);

namespace numeric {

/// log(sum(exp(values))) with max shifting; -inf for an empty range.
double log_sum_exp(std::span<const double> values);

/// log(exp(a) + exp(b)), symmetric in its arguments.
double log_add_exp(double a, double b);

/// Recursive pairwise summation with a fixed split, so results do not depend
/// on anything but the input order.
double pairwise_sum(std::span<const double> values);

double mean(std::span<const double> values);

}  // namespace numeric

}  // namespace obser
