#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "obser/eds.hpp"
#include "obser/kernel.hpp"
#include "obser/labeled_set.hpp"

namespace obser {

struct RankedObservation {
  std::string id;
  std::size_t index = 0;  // position in the candidate set
  double belief = 0.0;
};

/// Candidates ranked by kernel to the query, best first; ties by ascending id.
std::vector<RankedObservation> retrieve_object(const Embedding& query,
                                               const ObservationSet& candidates,
                                               const KernelConfig& cfg, std::size_t top_k);

enum class OccurrenceMode { kAdaptive, kDirect };

struct OccurrenceEstimate {
  double value = 0.0;
  std::optional<double> tolerance;  // adaptive mode only
  Embedding query_mean;
  OccurrenceMode mode = OccurrenceMode::kAdaptive;
  std::size_t n = 0;  // environment size
  double tau = 0.0;
};

inline constexpr double kDefaultOccurrenceMultiplier = 0.25;

/// Fraction of environment samples whose kernel to the query mean direction
/// exceeds multiplier * (mean kernel of the queries to that direction).
OccurrenceEstimate estimate_occurrence(std::span<const Embedding> queries,
                                       const ObservationSet& env, const KernelConfig& cfg,
                                       double multiplier = kDefaultOccurrenceMultiplier);

/// Kernel density of the query mean direction in the environment.
OccurrenceEstimate estimate_occurrence_direct(std::span<const Embedding> queries,
                                              const ObservationSet& env,
                                              const KernelConfig& cfg);

struct KLEstimate {
  double value = 0.0;
  std::vector<double> per_sample_log_ratios;
  std::size_t n_mu = 0;
  std::size_t n_nu = 0;
  double tau = 0.0;
};

enum class SelfPairs { kInclude, kExclude };

/// Mean over x in mu of log Phi(x; mu) - log Phi(x; nu). By default the
/// self-pair stays in Phi(x; mu); kExclude gives the leave-one-out variant.
KLEstimate estimate_kl(std::span<const Embedding> mu, std::span<const Embedding> nu,
                       const KernelConfig& cfg, SelfPairs self_pairs = SelfPairs::kInclude);
KLEstimate estimate_kl(const ObservationSet& mu, const ObservationSet& nu,
                       const KernelConfig& cfg, SelfPairs self_pairs = SelfPairs::kInclude);

/// Closed-form divergence between two class mixtures with shared class
/// distributions: sum_c omega_mu(c) log(omega_mu(c) / omega_nu(c)).
double exact_kl(std::span<const double> omega_mu, std::span<const double> omega_nu);

/// Worst-case (epsilon, delta) realized by a set of per-sample class densities
/// such that delta <= own-class density <= 1 and
/// delta * epsilon <= cross-class density <= epsilon hold for every sample.
struct PointwiseBounds {
  double delta = 1.0;
  double epsilon = 0.0;
};

struct Theorem3Check {
  double estimate = 0.0;
  double center = 0.0;
  double slack = 0.0;
  PointwiseBounds bounds;
  bool holds = false;
};

/// Checks |KL_hat(mu || nu) - center| <= -log delta, where center is the
/// epsilon-smoothed class-fraction divergence.
Theorem3Check theorem3_check(const LabeledSet& mu, const LabeledSet& nu,
                             const KernelConfig& cfg);

struct Lemma2Check {
  std::vector<double> ratios;
  double min_ratio = 0.0;
  double max_ratio = 0.0;
  double omega = 0.0;
  PointwiseBounds bounds;
  bool holds = false;
};

/// Checks delta <= Phi(x; env) / (omega + epsilon (1 - omega)) <= 1 for every
/// sample x of the query class.
Lemma2Check lemma2_check(const std::string& query_class, const LabeledSet& env,
                         const KernelConfig& cfg);

/// Jensen-Shannon divergence between two sample sets, with the mixture density
/// taken over the pooled multiset.
double jensen_shannon(std::span<const Embedding> mu, std::span<const Embedding> nu,
                      const KernelConfig& cfg);
double jensen_shannon(const ObservationSet& mu, const ObservationSet& nu,
                      const KernelConfig& cfg);

/// Argmax cosine to each class mean direction; ties to the smaller class name.
std::vector<std::string> mean_classifier(const LabeledSet& train,
                                         std::span<const Embedding> test);

/// Majority vote of the k nearest training samples by cosine. Vote ties go to
/// the class with the larger summed kernel, then to the smaller class name.
std::vector<std::string> knn_classifier(const LabeledSet& train, std::span<const Embedding> test,
                                        std::size_t k, const KernelConfig& cfg);

}  // namespace obser
