#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "obser/kernel.hpp"
#include "obser/labeled_set.hpp"

namespace obser {

/// (epsilon, delta) separability measured on a labeled sample.
///
/// delta_c is the trimmed mean of the leave-one-out within-class densities of
/// class c and epsilon_c the trimmed mean of the densities of class-c samples
/// against every other class. delta/epsilon are unweighted means over classes.
/// The *_worst fields are the extremes of the trimmed per-sample values and are
/// the ones the bounds consume.
struct EDSReport {
  std::map<std::string, double> per_class_delta;
  std::map<std::string, double> per_class_epsilon;
  double delta = 0.0;
  std::optional<double> epsilon;
  double delta_worst = 0.0;
  std::optional<double> epsilon_worst;
  /// Smallest trimmed cross-class density (lower side of the cross bound).
  std::optional<double> cross_min;
  std::optional<double> k;
  double trim_fraction = 0.0;
  double tau = 0.0;
  std::size_t num_classes = 0;
  std::size_t num_samples = 0;
  /// Classes with one member; they contribute no within-class density.
  std::vector<std::string> singleton_classes;
  /// Set when epsilon > delta or k < 1.
  bool ordering_violated = false;
};

inline constexpr double kDefaultTrimFraction = 0.05;

EDSReport measure_eds(const LabeledSet& data, const KernelConfig& cfg,
                      double trim_fraction = kDefaultTrimFraction);

/// Same measurement over an arbitrary precomputed log-kernel matrix between
/// the samples (entry (i, j) = log phi(x_i, x_j)). Used by the toy trainer for
/// its Euclidean ablation kernel.
EDSReport measure_eds(const DenseMatrix& log_kernel, std::span<const std::size_t> labels,
                      const std::vector<std::string>& class_names, double tau,
                      double trim_fraction = kDefaultTrimFraction);

/// Kernel-density Bayes posterior over the classes of data, keyed by class
/// name. Uses empirical class fractions as the prior.
std::map<std::string, double> bayes_classify(const Embedding& x, const LabeledSet& data,
                                             const KernelConfig& cfg);

struct JointGap {
  double value = 0.0;
  /// Mean of -log(Phi(x; rho_+) / Phi(x; mu)).
  double metric_term = 0.0;
  /// H(omega) of the empirical class fractions.
  double entropy_term = 0.0;
};

/// KL divergence between the true joint of (class, sample) and the kernel
/// Bayes joint. Phi(x; rho_+) is the leave-one-out density of the sample's
/// own class and Phi(x; mu) = sum_c omega_c Phi(x; rho_c) with the same
/// self-exclusion, so the value equals a mean cross entropy minus H(omega)
/// plus H(omega) and is nonnegative.
JointGap kl_joint_gap(const LabeledSet& data, const KernelConfig& cfg);

/// Upper bound log(1 + (num_classes - 1) / k) on the joint gap.
double theorem1_bound(const EDSReport& report, std::size_t num_classes);
double theorem1_bound(double k, std::size_t num_classes);

}  // namespace obser
