#include "obser/synthenv.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numeric>

#include "obser/errors.hpp"

namespace obser {

namespace {

double uniform01(std::mt19937_64& rng) {
  // 53 random mantissa bits; never returns 0 so log(u) stays finite.
  return (static_cast<double>(rng() >> 11) + 0.5) * 0x1.0p-53;
}

std::vector<double> gaussian_vector(std::size_t dim, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<double> v(dim);
  for (double& x : v) x = normal(rng);
  return v;
}

// Rows of a random orthogonal matrix via Gram-Schmidt on Gaussian rows.
std::vector<std::vector<double>> random_frame(std::size_t dim, std::mt19937_64& rng) {
  std::vector<std::vector<double>> rows;
  while (rows.size() < dim) {
    auto v = gaussian_vector(dim, rng);
    for (int pass = 0; pass < 2; ++pass) {
      for (const auto& r : rows) {
        const double p = std::inner_product(v.begin(), v.end(), r.begin(), 0.0);
        for (std::size_t i = 0; i < dim; ++i) v[i] -= p * r[i];
      }
    }
    const double n = std::sqrt(std::inner_product(v.begin(), v.end(), v.begin(), 0.0));
    if (n < 1e-8) continue;
    for (double& x : v) x /= n;
    rows.push_back(std::move(v));
  }
  return rows;
}

std::vector<std::size_t> exact_counts(std::span<const double> omega, std::size_t n) {
  std::vector<std::size_t> counts(omega.size());
  std::vector<std::pair<double, std::size_t>> remainders;
  std::size_t assigned = 0;
  for (std::size_t c = 0; c < omega.size(); ++c) {
    const double share = omega[c] * double(n);
    counts[c] = static_cast<std::size_t>(std::floor(share + 1e-9));
    assigned += counts[c];
    remainders.emplace_back(share - double(counts[c]), c);
  }
  std::stable_sort(remainders.begin(), remainders.end(),
                   [](const auto& a, const auto& b) { return a.first > b.first; });
  for (std::size_t r = 0; assigned < n && r < remainders.size(); ++r, ++assigned) {
    ++counts[remainders[r].second];
  }
  return counts;
}

void check_occurrence(std::span<const double> omega, std::size_t num_classes) {
  if (omega.size() != num_classes) {
    throw DomainError("occurrence vector length differs from the number of classes");
  }
  double s = 0.0;
  for (double w : omega) {
    if (!(w >= 0.0)) throw DomainError("occurrence weights must be nonnegative");
    s += w;
  }
  if (std::abs(s - 1.0) > 1e-9) throw DomainError("occurrence weights must sum to 1");
}

// Fractions indexed by generator class index; absent classes get 0.
std::vector<double> realized_fractions(const LabeledSet& data, std::size_t num_classes) {
  std::vector<double> out(num_classes, 0.0);
  for (std::size_t c = 0; c < data.num_classes(); ++c) {
    // Labels are class_label(index), so the name maps back to the index.
    const std::size_t index = std::stoul(data.class_name(c).substr(1));
    out[index] = double(data.members(c).size()) / double(data.size());
  }
  return out;
}

}  // namespace

std::vector<double> zipf_occurrence(std::size_t num_classes, double alpha) {
  if (num_classes == 0) throw DomainError("Zipf law needs at least one class");
  if (!(alpha >= 0.0)) throw DomainError("Zipf exponent must be nonnegative");
  std::vector<double> w(num_classes);
  double total = 0.0;
  for (std::size_t c = 0; c < num_classes; ++c) {
    w[c] = std::pow(double(c + 1), -alpha);
    total += w[c];
  }
  for (double& v : w) v /= total;
  return w;
}

double entropy(std::span<const double> omega) {
  double h = 0.0;
  for (double w : omega) {
    if (w > 0.0) h -= w * std::log(w);
  }
  return h;
}

Embedding sample_vmf(const Embedding& mean, double kappa, std::mt19937_64& rng) {
  if (!(kappa >= 0.0)) throw DomainError("vMF concentration must be nonnegative");
  const std::size_t d = mean.dim();
  if (std::isinf(kappa)) return mean;
  if (kappa == 0.0) return Embedding::normalize(gaussian_vector(d, rng));

  const double dm1 = double(d - 1);
  // Wood (1994). b written to avoid cancellation at large kappa.
  const double b = dm1 / (2.0 * kappa + std::sqrt(4.0 * kappa * kappa + dm1 * dm1));
  const double x0 = (1.0 - b) / (1.0 + b);
  const double c = kappa * x0 + dm1 * std::log(4.0 * b / ((1.0 + b) * (1.0 + b)));
  std::gamma_distribution<double> gamma(dm1 / 2.0, 1.0);

  double w = 0.0;
  for (;;) {
    const double g1 = gamma(rng);
    const double g2 = gamma(rng);
    const double z = g1 / (g1 + g2);
    w = (1.0 - (1.0 + b) * z) / (1.0 - (1.0 - b) * z);
    const double u = uniform01(rng);
    if (kappa * w + dm1 * std::log(1.0 - x0 * w) - c >= std::log(u)) break;
  }

  auto v = gaussian_vector(d, rng);
  double p = 0.0;
  for (std::size_t i = 0; i < d; ++i) p += v[i] * mean[i];
  double n2 = 0.0;
  for (std::size_t i = 0; i < d; ++i) {
    v[i] -= p * mean[i];
    n2 += v[i] * v[i];
  }
  const double s = std::sqrt(std::max(0.0, 1.0 - w * w)) / std::sqrt(n2);
  std::vector<double> x(d);
  for (std::size_t i = 0; i < d; ++i) x[i] = w * mean[i] + s * v[i];
  return Embedding::normalize(std::move(x));
}

std::vector<Embedding> make_prototypes(std::size_t dim, std::size_t num_classes,
                                       PrototypeLayout layout, std::mt19937_64& rng) {
  if (dim < 2) throw DomainError("prototype dimension must be at least 2");
  if (num_classes == 0) throw DomainError("need at least one class");
  if (layout == PrototypeLayout::kAuto) {
    layout = dim >= num_classes ? PrototypeLayout::kOrthonormal : PrototypeLayout::kOrthoplex;
  }

  std::vector<Embedding> out;
  switch (layout) {
    case PrototypeLayout::kOrthonormal: {
      if (dim < num_classes) throw DomainError("orthonormal layout needs dim >= classes");
      auto frame = random_frame(dim, rng);
      for (std::size_t c = 0; c < num_classes; ++c) out.push_back(Embedding::normalize(frame[c]));
      break;
    }
    case PrototypeLayout::kOrthoplex: {
      if (2 * dim < num_classes) throw DomainError("orthoplex layout needs 2 * dim >= classes");
      auto frame = random_frame(dim, rng);
      for (std::size_t c = 0; c < num_classes; ++c) {
        auto row = frame[c % dim];
        if (c >= dim) {
          for (double& x : row) x = -x;
        }
        out.push_back(Embedding::normalize(std::move(row)));
      }
      break;
    }
    case PrototypeLayout::kSimplex: {
      if (num_classes == 1) return make_prototypes(dim, 1, PrototypeLayout::kOrthonormal, rng);
      if (dim + 1 < num_classes) throw DomainError("simplex layout needs dim >= classes - 1");
      const std::size_t m = num_classes;
      // Orthonormal basis of the complement of (1, ..., 1) in R^m.
      std::vector<std::vector<double>> basis;
      for (std::size_t k = 0; k < m && basis.size() < m - 1; ++k) {
        std::vector<double> v(m, -1.0 / double(m));
        v[k] += 1.0;
        for (const auto& r : basis) {
          const double p = std::inner_product(v.begin(), v.end(), r.begin(), 0.0);
          for (std::size_t i = 0; i < m; ++i) v[i] -= p * r[i];
        }
        const double n = std::sqrt(std::inner_product(v.begin(), v.end(), v.begin(), 0.0));
        if (n < 1e-9) continue;
        for (double& x : v) x /= n;
        basis.push_back(std::move(v));
      }
      auto frame = random_frame(dim, rng);
      for (std::size_t c = 0; c < m; ++c) {
        std::vector<double> x(dim, 0.0);
        for (std::size_t k = 0; k < basis.size(); ++k) {
          // Coordinate of (e_c - centroid) along basis k is basis[k][c].
          for (std::size_t i = 0; i < dim; ++i) x[i] += basis[k][c] * frame[k][i];
        }
        out.push_back(Embedding::normalize(std::move(x)));
      }
      break;
    }
    case PrototypeLayout::kRandom:
      for (std::size_t c = 0; c < num_classes; ++c) {
        out.push_back(Embedding::normalize(gaussian_vector(dim, rng)));
      }
      break;
    case PrototypeLayout::kExplicit:
    case PrototypeLayout::kAuto:
      throw DomainError("explicit prototypes must be supplied by the caller");
  }
  return out;
}

std::string class_label(std::size_t c, std::size_t num_classes) {
  int width = 2;
  for (std::size_t v = num_classes > 0 ? num_classes - 1 : 0; v >= 100; v /= 10) ++width;
  return make_id("c", c, width);
}

LabeledSet sample_mixture(std::span<const Embedding> prototypes, std::span<const double> omega,
                          std::span<const double> kappas, std::size_t n, Allocation allocation,
                          std::mt19937_64& rng, const std::string& id_prefix) {
  const std::size_t num_classes = prototypes.size();
  check_occurrence(omega, num_classes);
  if (kappas.size() != num_classes) throw DomainError("one concentration per class required");

  std::vector<std::size_t> classes;
  classes.reserve(n);
  if (allocation == Allocation::kExact) {
    const auto counts = exact_counts(omega, n);
    for (std::size_t c = 0; c < num_classes; ++c) classes.insert(classes.end(), counts[c], c);
  } else {
    std::vector<double> cumulative(num_classes);
    std::partial_sum(omega.begin(), omega.end(), cumulative.begin());
    for (std::size_t i = 0; i < n; ++i) {
      const double u = uniform01(rng) * cumulative.back();
      auto it = std::upper_bound(cumulative.begin(), cumulative.end(), u);
      std::size_t c = std::min<std::size_t>(it - cumulative.begin(), num_classes - 1);
      while (omega[c] == 0.0 && c > 0) --c;  // u landed exactly on a boundary
      classes.push_back(c);
    }
  }

  std::vector<Embedding> embeddings;
  std::vector<std::string> labels;
  embeddings.reserve(n);
  labels.reserve(n);
  for (std::size_t c : classes) {
    embeddings.push_back(sample_vmf(prototypes[c], kappas[c], rng));
    labels.push_back(class_label(c, num_classes));
  }
  return LabeledSet(std::move(embeddings), std::move(labels), id_prefix);
}

void SyntheticEnvSpec::validate() const {
  if (dim < 2) throw DomainError("dim must be at least 2");
  if (num_classes == 0) throw DomainError("num_classes must be at least 1");
  if (!(kappa >= 0.0)) throw DomainError("kappa must be nonnegative");
  if (samples_per_env == 0) throw DomainError("samples_per_env must be positive");
  if (occurrence.kind == OccurrenceLaw::Kind::kZipf && !(occurrence.alpha >= 0.0)) {
    throw DomainError("Zipf alpha must be nonnegative");
  }
  if (occurrence.kind == OccurrenceLaw::Kind::kExplicit) {
    check_occurrence(occurrence.weights, num_classes);
  }
  if (layout == PrototypeLayout::kExplicit) {
    if (prototypes.size() != num_classes) throw DomainError("one explicit prototype per class");
    for (const auto& p : prototypes) {
      if (p.dim() != dim) throw DimensionMismatch(dim, p.dim());
    }
  }
  if (!per_class_kappa.empty()) {
    if (per_class_kappa.size() != num_classes) throw DomainError("one kappa per class");
    for (double k : per_class_kappa) {
      if (!(k >= 0.0)) throw DomainError("kappa must be nonnegative");
    }
  }
}

std::pair<LabeledSet, GroundTruth> sample_environment(const SyntheticEnvSpec& spec,
                                                      std::uint64_t seed) {
  spec.validate();
  std::mt19937_64 rng(seed);

  GroundTruth truth;
  truth.seed = seed;
  truth.kappa = spec.kappa;
  truth.prototypes = spec.layout == PrototypeLayout::kExplicit
                         ? spec.prototypes
                         : make_prototypes(spec.dim, spec.num_classes, spec.layout, rng);
  switch (spec.occurrence.kind) {
    case OccurrenceLaw::Kind::kUniform:
      truth.omega.assign(spec.num_classes, 1.0 / double(spec.num_classes));
      break;
    case OccurrenceLaw::Kind::kZipf:
      truth.omega = zipf_occurrence(spec.num_classes, spec.occurrence.alpha);
      break;
    case OccurrenceLaw::Kind::kExplicit:
      truth.omega = spec.occurrence.weights;
      break;
  }
  std::vector<double> kappas =
      spec.per_class_kappa.empty() ? std::vector<double>(spec.num_classes, spec.kappa)
                                   : spec.per_class_kappa;

  LabeledSet data = sample_mixture(truth.prototypes, truth.omega, kappas, spec.samples_per_env,
                                   Allocation::kIid, rng);
  truth.realized_fractions = realized_fractions(data, spec.num_classes);
  return {std::move(data), std::move(truth)};
}

ScenarioFixture make_scenario(Scenario scenario, std::size_t dim, double kappa,
                              std::uint64_t seed, const ScenarioOverrides& overrides) {
  std::size_t num_classes = 2;
  std::size_t samples = 1000;
  std::array<double, 2> group_mu{};
  std::array<double, 2> group_nu{};
  switch (scenario) {
    case Scenario::kS1:
      group_mu = {0.5, 0.5};
      group_nu = {0.1, 0.9};
      break;
    case Scenario::kS2:
      group_mu = {0.2, 0.8};
      group_nu = {0.8, 0.2};
      break;
    case Scenario::kC1:
      num_classes = 10;
      group_mu = {0.4, 0.6};
      group_nu = {0.6, 0.4};
      break;
    case Scenario::kC2:
      num_classes = 10;
      group_mu = {0.2, 0.8};
      group_nu = {0.8, 0.2};
      break;
    case Scenario::kC3:
      num_classes = 40;
      samples = 4000;
      group_mu = {0.2, 0.8};
      group_nu = {0.8, 0.2};
      break;
  }
  if (overrides.num_classes) num_classes = *overrides.num_classes;
  if (overrides.samples) samples = *overrides.samples;
  if (num_classes < 2 || num_classes % 2 != 0) {
    throw DomainError("scenario class count must be even and at least 2");
  }
  if (samples == 0) throw DomainError("scenario sample count must be positive");

  const std::size_t group = num_classes / 2;
  auto class_omega = [&](const std::array<double, 2>& g) {
    std::vector<double> w(num_classes);
    for (std::size_t c = 0; c < num_classes; ++c) w[c] = g[c < group ? 0 : 1] / double(group);
    return w;
  };

  std::mt19937_64 rng(seed);
  ScenarioFixture fx;
  const auto prototypes = make_prototypes(dim, num_classes, PrototypeLayout::kAuto, rng);
  const std::vector<double> kappas(num_classes, kappa);
  for (auto* truth : {&fx.mu_truth, &fx.nu_truth}) {
    truth->prototypes = prototypes;
    truth->kappa = kappa;
    truth->seed = seed;
  }
  fx.mu_truth.omega = class_omega(group_mu);
  fx.nu_truth.omega = class_omega(group_nu);
  fx.mu = sample_mixture(prototypes, fx.mu_truth.omega, kappas, samples, Allocation::kExact, rng,
                         "m");
  fx.nu = sample_mixture(prototypes, fx.nu_truth.omega, kappas, samples, Allocation::kExact, rng,
                         "n");
  fx.mu_truth.realized_fractions = realized_fractions(fx.mu, num_classes);
  fx.nu_truth.realized_fractions = realized_fractions(fx.nu, num_classes);

  fx.exact_kl = 0.0;
  for (std::size_t g = 0; g < 2; ++g) {
    if (group_mu[g] > 0.0) fx.exact_kl += group_mu[g] * std::log(group_mu[g] / group_nu[g]);
  }
  return fx;
}

std::optional<Scenario> parse_scenario(const std::string& name) {
  if (name == "S1") return Scenario::kS1;
  if (name == "S2") return Scenario::kS2;
  if (name == "C-Scenario1") return Scenario::kC1;
  if (name == "C-Scenario2") return Scenario::kC2;
  if (name == "C-Scenario3") return Scenario::kC3;
  return std::nullopt;
}

std::string scenario_name(Scenario scenario) {
  switch (scenario) {
    case Scenario::kS1: return "S1";
    case Scenario::kS2: return "S2";
    case Scenario::kC1: return "C-Scenario1";
    case Scenario::kC2: return "C-Scenario2";
    case Scenario::kC3: return "C-Scenario3";
  }
  return "?";
}

}  // namespace obser
