#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <utility>
#include <vector>

#include "obser/embedding.hpp"
#include "obser/labeled_set.hpp"

namespace obser {

struct OccurrenceLaw {
  enum class Kind { kUniform, kZipf, kExplicit };
  Kind kind = Kind::kUniform;
  double alpha = 0.0;           // kZipf
  std::vector<double> weights;  // kExplicit, must sum to 1

  static OccurrenceLaw uniform() { return {}; }
  static OccurrenceLaw zipf(double alpha) { return {Kind::kZipf, alpha, {}}; }
  static OccurrenceLaw explicit_weights(std::vector<double> w) {
    return {Kind::kExplicit, 0.0, std::move(w)};
  }
};

enum class PrototypeLayout {
  /// Pick kOrthonormal when dim >= classes, else kOrthoplex.
  kAuto,
  /// Rows of a random orthogonal frame; pairwise cosine 0. Needs dim >= classes.
  kOrthonormal,
  /// +/- rows of a random orthogonal frame; pairwise cosine 0 or -1.
  /// Needs 2 * dim >= classes.
  kOrthoplex,
  /// Vertices of a regular simplex; pairwise cosine -1/(C-1). Needs dim >= classes - 1.
  kSimplex,
  /// Independent uniform directions.
  kRandom,
  kExplicit,
};

/// Class clusters share one concentration unless per_class_kappa is set.
struct SyntheticEnvSpec {
  std::size_t dim = 8;
  std::size_t num_classes = 10;
  OccurrenceLaw occurrence;
  double kappa = 100.0;
  std::size_t samples_per_env = 1000;
  PrototypeLayout layout = PrototypeLayout::kAuto;
  std::vector<Embedding> prototypes;  // kExplicit
  std::vector<double> per_class_kappa;

  void validate() const;
};

struct GroundTruth {
  std::vector<double> omega;
  std::vector<Embedding> prototypes;
  std::vector<double> realized_fractions;
  double kappa = 0.0;
  std::uint64_t seed = 0;
};

/// omega(c) proportional to c^(-alpha), c = 1..num_classes.
std::vector<double> zipf_occurrence(std::size_t num_classes, double alpha);

/// Shannon entropy in nats.
double entropy(std::span<const double> omega);

/// Draws one sample from vMF(mean, kappa) with Wood's rejection scheme.
/// kappa = 0 is uniform on the sphere, kappa = +inf returns the mean.
Embedding sample_vmf(const Embedding& mean, double kappa, std::mt19937_64& rng);

std::vector<Embedding> make_prototypes(std::size_t dim, std::size_t num_classes,
                                       PrototypeLayout layout, std::mt19937_64& rng);

/// Class name used for index c in generated data ("c00", "c01", ...).
std::string class_label(std::size_t c, std::size_t num_classes);

enum class Allocation {
  /// Classes drawn i.i.d. from omega.
  kIid,
  /// Largest-remainder rounding of n * omega.
  kExact,
};

/// Draws n labeled samples from the mixture sum_c omega_c vMF(prototype_c, kappa).
/// Class names come from class_label; ids are "<id_prefix><index>".
LabeledSet sample_mixture(std::span<const Embedding> prototypes, std::span<const double> omega,
                          std::span<const double> kappas, std::size_t n, Allocation allocation,
                          std::mt19937_64& rng, const std::string& id_prefix = "s");

std::pair<LabeledSet, GroundTruth> sample_environment(const SyntheticEnvSpec& spec,
                                                      std::uint64_t seed);

enum class Scenario {
  kS1,  // 2 classes, [0.5, 0.5] -> [0.1, 0.9]
  kS2,  // 2 classes, [0.2, 0.8] -> [0.8, 0.2]
  kC1,  // 10 classes in 5/5 groups, [0.4, 0.6] -> [0.6, 0.4], 1000 samples
  kC2,  // 10 classes in 5/5 groups, [0.2, 0.8] -> [0.8, 0.2], 1000 samples
  kC3,  // 40 classes in 20/20 groups, [0.2, 0.8] -> [0.8, 0.2], 4000 samples
};

/// Optional changes to a scenario's class count and sample count.
struct ScenarioOverrides {
  std::optional<std::size_t> num_classes;
  std::optional<std::size_t> samples;
};

struct ScenarioFixture {
  LabeledSet mu;
  LabeledSet nu;
  GroundTruth mu_truth;
  GroundTruth nu_truth;
  /// Group-level closed form, independent of the per-class omegas.
  double exact_kl = 0.0;
};

/// Two class mixtures over shared prototypes. Class counts are allocated
/// exactly, so realized fractions equal omega.
ScenarioFixture make_scenario(Scenario scenario, std::size_t dim, double kappa,
                              std::uint64_t seed, const ScenarioOverrides& overrides = {});

std::optional<Scenario> parse_scenario(const std::string& name);
std::string scenario_name(Scenario scenario);

}  // namespace obser
