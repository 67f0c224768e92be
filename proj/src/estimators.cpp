#include "obser/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "obser/errors.hpp"

namespace obser {

namespace {

void require_same_dim(std::span<const Embedding> a, std::span<const Embedding> b) {
  if (!a.empty() && !b.empty() && a.front().dim() != b.front().dim()) {
    throw DimensionMismatch(a.front().dim(), b.front().dim());
  }
}

double clamped_cosine(const Embedding& a, const Embedding& b) {
  return std::clamp(a.dot(b), -1.0, 1.0);
}

// Row i holds log Phi(x_i; rho_c) for every class c of ref (classes without
// members get -inf).
DenseMatrix class_log_densities(std::span<const Embedding> xs, const LabeledSet& ref,
                                const KernelConfig& cfg) {
  DenseMatrix out(xs.size(), ref.num_classes());
  std::vector<double> logs;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    for (std::size_t c = 0; c < ref.num_classes(); ++c) {
      const auto members = ref.members(c);
      logs.clear();
      for (std::size_t j : members) logs.push_back(log_kernel(xs[i], ref.embedding(j), cfg));
      out(i, c) = numeric::log_sum_exp(logs) - std::log(double(members.size()));
    }
  }
  return out;
}

// Tightest (epsilon, delta) for which every listed sample satisfies the
// pointwise separability inequalities, given its own-class and cross-class
// densities. delta is lowered until delta * epsilon stays below every
// cross-class density.
struct BoundAccumulator {
  double own_min = 1.0;
  double cross_max = 0.0;
  double cross_min = std::numeric_limits<double>::infinity();

  void add_own(double v) { own_min = std::min(own_min, v); }
  void add_cross(double v) {
    cross_max = std::max(cross_max, v);
    cross_min = std::min(cross_min, v);
  }
  PointwiseBounds finish() const {
    PointwiseBounds b;
    b.epsilon = cross_max;
    b.delta = std::min(own_min, 1.0);
    if (cross_max > 0.0) b.delta = std::min(b.delta, cross_min / cross_max);
    return b;
  }
};

void accumulate_bounds(const DenseMatrix& log_dens, std::span<const std::size_t> own_class,
                       BoundAccumulator& acc) {
  for (std::size_t i = 0; i < log_dens.rows(); ++i) {
    for (std::size_t c = 0; c < log_dens.cols(); ++c) {
      const double v = std::exp(log_dens(i, c));
      if (c == own_class[i]) {
        acc.add_own(v);
      } else {
        acc.add_cross(v);
      }
    }
  }
}

}  // namespace

std::vector<RankedObservation> retrieve_object(const Embedding& query,
                                               const ObservationSet& candidates,
                                               const KernelConfig& cfg, std::size_t top_k) {
  if (candidates.empty()) throw EmptyInput("no candidates to retrieve from");
  if (top_k == 0 || top_k > candidates.size()) {
    throw DomainError("top_k must lie in [1, " + std::to_string(candidates.size()) + "]");
  }
  if (query.dim() != candidates.dim()) throw DimensionMismatch(candidates.dim(), query.dim());

  // Ranking on the cosine keeps the order independent of tau even where the
  // kernel itself underflows.
  std::vector<double> cosines(candidates.size());
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    cosines[i] = clamped_cosine(query, candidates.embedding(i));
  }
  std::vector<std::size_t> order(candidates.size());
  std::iota(order.begin(), order.end(), 0);
  auto better = [&](std::size_t a, std::size_t b) {
    if (cosines[a] != cosines[b]) return cosines[a] > cosines[b];
    return candidates[a].id < candidates[b].id;
  };
  std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(top_k),
                    order.end(), better);

  std::vector<RankedObservation> out;
  out.reserve(top_k);
  for (std::size_t r = 0; r < top_k; ++r) {
    const std::size_t i = order[r];
    out.push_back({candidates[i].id, i, std::exp((cosines[i] - 1.0) / cfg.temperature())});
  }
  return out;
}

OccurrenceEstimate estimate_occurrence(std::span<const Embedding> queries,
                                       const ObservationSet& env, const KernelConfig& cfg,
                                       double multiplier) {
  if (env.empty()) throw EmptyInput("occurrence estimation needs environment samples");
  if (!(multiplier > 0.0) || !std::isfinite(multiplier)) {
    throw DomainError("occurrence multiplier must be positive");
  }
  const Embedding mean = mean_direction(queries);
  if (mean.dim() != env.dim()) throw DimensionMismatch(env.dim(), mean.dim());

  // Threshold comparison in the log domain: log phi(x, mean) > log tol.
  std::vector<double> query_logs(queries.size());
  for (std::size_t q = 0; q < queries.size(); ++q) query_logs[q] = log_kernel(queries[q], mean, cfg);
  const double log_tol = std::log(multiplier) + numeric::log_sum_exp(query_logs) -
                         std::log(double(queries.size()));

  std::size_t hits = 0;
  for (const auto& x : env.embeddings()) {
    if (log_kernel(x, mean, cfg) > log_tol) ++hits;
  }

  OccurrenceEstimate est;
  est.value = double(hits) / double(env.size());
  est.tolerance = std::exp(log_tol);
  est.query_mean = mean;
  est.mode = OccurrenceMode::kAdaptive;
  est.n = env.size();
  est.tau = cfg.temperature();
  return est;
}

OccurrenceEstimate estimate_occurrence_direct(std::span<const Embedding> queries,
                                              const ObservationSet& env,
                                              const KernelConfig& cfg) {
  if (env.empty()) throw EmptyInput("occurrence estimation needs environment samples");
  const Embedding mean = mean_direction(queries);
  if (mean.dim() != env.dim()) throw DimensionMismatch(env.dim(), mean.dim());

  OccurrenceEstimate est;
  est.value = kernel_density(mean, env, cfg);
  est.query_mean = mean;
  est.mode = OccurrenceMode::kDirect;
  est.n = env.size();
  est.tau = cfg.temperature();
  return est;
}

KLEstimate estimate_kl(std::span<const Embedding> mu, std::span<const Embedding> nu,
                       const KernelConfig& cfg, SelfPairs self_pairs) {
  if (mu.empty() || nu.empty()) throw EmptyInput("KL estimation needs two nonempty sets");
  require_same_dim(mu, nu);
  if (self_pairs == SelfPairs::kExclude && mu.size() < 2) {
    throw DomainError("leave-one-out KL estimation needs at least two samples in mu");
  }

  KLEstimate est;
  est.n_mu = mu.size();
  est.n_nu = nu.size();
  est.tau = cfg.temperature();
  est.per_sample_log_ratios.resize(mu.size());

  std::vector<double> logs_mu(mu.size());
  std::vector<double> logs_nu(nu.size());
  for (std::size_t i = 0; i < mu.size(); ++i) {
    for (std::size_t j = 0; j < mu.size(); ++j) logs_mu[j] = log_kernel(mu[i], mu[j], cfg);
    double log_mu;
    if (self_pairs == SelfPairs::kInclude) {
      log_mu = numeric::log_sum_exp(logs_mu) - std::log(double(mu.size()));
    } else {
      logs_mu[i] = -std::numeric_limits<double>::infinity();
      log_mu = numeric::log_sum_exp(logs_mu) - std::log(double(mu.size() - 1));
    }
    for (std::size_t j = 0; j < nu.size(); ++j) logs_nu[j] = log_kernel(mu[i], nu[j], cfg);
    const double log_nu = numeric::log_sum_exp(logs_nu) - std::log(double(nu.size()));
    est.per_sample_log_ratios[i] = log_mu - log_nu;
  }
  est.value = numeric::mean(est.per_sample_log_ratios);
  return est;
}

KLEstimate estimate_kl(const ObservationSet& mu, const ObservationSet& nu,
                       const KernelConfig& cfg, SelfPairs self_pairs) {
  return estimate_kl(mu.embeddings(), nu.embeddings(), cfg, self_pairs);
}

double exact_kl(std::span<const double> omega_mu, std::span<const double> omega_nu) {
  if (omega_mu.size() != omega_nu.size()) {
    throw DimensionMismatch(omega_mu.size(), omega_nu.size());
  }
  if (omega_mu.empty()) throw EmptyInput("occurrence vectors are empty");
  auto check = [](std::span<const double> w, const char* name) {
    double s = 0.0;
    for (double v : w) {
      if (!(v >= 0.0)) throw DomainError(std::string(name) + " has a negative entry");
      s += v;
    }
    if (std::abs(s - 1.0) > 1e-9) throw DomainError(std::string(name) + " does not sum to 1");
  };
  check(omega_mu, "omega_mu");
  check(omega_nu, "omega_nu");

  double kl = 0.0;
  for (std::size_t c = 0; c < omega_mu.size(); ++c) {
    if (omega_mu[c] == 0.0) continue;
    if (omega_nu[c] == 0.0) {
      throw DomainError("infinite divergence: omega_nu is zero where omega_mu is positive");
    }
    kl += omega_mu[c] * std::log(omega_mu[c] / omega_nu[c]);
  }
  return kl;
}

Theorem3Check theorem3_check(const LabeledSet& mu, const LabeledSet& nu,
                             const KernelConfig& cfg) {
  if (mu.empty() || nu.empty()) throw EmptyInput("theorem check needs two nonempty sets");
  if (mu.class_names() != nu.class_names()) {
    throw DomainError("class universe mismatch between mu and nu");
  }
  require_same_dim(mu.embeddings(), nu.embeddings());

  // The estimator's densities decompose exactly into these per-class
  // densities (Phi(x; mu) = sum_c omega_c Phi(x; rho_c), self-pair included),
  // so bounding them bounds every log-ratio it averages.
  BoundAccumulator acc;
  accumulate_bounds(class_log_densities(mu.embeddings(), mu, cfg), mu.class_indices(), acc);
  accumulate_bounds(class_log_densities(mu.embeddings(), nu, cfg), mu.class_indices(), acc);

  Theorem3Check check;
  check.bounds = acc.finish();
  const double eps = check.bounds.epsilon;
  const auto w_mu = mu.class_fractions();
  const auto w_nu = nu.class_fractions();
  check.center = 0.0;
  for (std::size_t c = 0; c < w_mu.size(); ++c) {
    const double a = w_mu[c] + (1.0 - w_mu[c]) * eps;
    const double b = w_nu[c] + (1.0 - w_nu[c]) * eps;
    check.center += w_mu[c] * std::log(a / b);
  }
  check.slack = -std::log(check.bounds.delta);
  check.estimate = estimate_kl(mu.observations(), nu.observations(), cfg).value;
  check.holds = std::abs(check.estimate - check.center) <= check.slack + 1e-6;
  return check;
}

Lemma2Check lemma2_check(const std::string& query_class, const LabeledSet& env,
                         const KernelConfig& cfg) {
  if (env.empty()) throw EmptyInput("lemma check needs environment samples");
  const std::size_t qc = env.class_id(query_class);

  BoundAccumulator acc;
  accumulate_bounds(class_log_densities(env.embeddings(), env, cfg), env.class_indices(), acc);

  Lemma2Check check;
  check.bounds = acc.finish();
  check.omega = env.class_fractions()[qc];
  const double denom = check.omega + check.bounds.epsilon * (1.0 - check.omega);
  for (std::size_t i : env.members(qc)) {
    check.ratios.push_back(kernel_density(env.embedding(i), env.embeddings(), cfg) / denom);
  }
  check.min_ratio = *std::min_element(check.ratios.begin(), check.ratios.end());
  check.max_ratio = *std::max_element(check.ratios.begin(), check.ratios.end());
  check.holds = check.bounds.delta - 1e-6 <= check.min_ratio && check.max_ratio <= 1.0 + 1e-6;
  return check;
}

double jensen_shannon(std::span<const Embedding> mu, std::span<const Embedding> nu,
                      const KernelConfig& cfg) {
  if (mu.empty() || nu.empty()) throw EmptyInput("JSD needs two nonempty sets");
  require_same_dim(mu, nu);
  const double log_n_mu = std::log(double(mu.size()));
  const double log_n_nu = std::log(double(nu.size()));
  const double log_n = std::log(double(mu.size() + nu.size()));

  // The pooled density is a count-weighted mixture of the two set densities;
  // log_add_exp keeps the result symmetric in (mu, nu).
  auto half = [&](std::span<const Embedding> own, std::span<const Embedding> other,
                  double log_n_own, double log_n_other) {
    std::vector<double> ratios(own.size());
    for (std::size_t i = 0; i < own.size(); ++i) {
      const double l_own = log_kernel_density(own[i], own, cfg);
      const double l_other = log_kernel_density(own[i], other, cfg);
      const double l_pool = numeric::log_add_exp(log_n_own + l_own, log_n_other + l_other) - log_n;
      ratios[i] = l_own - l_pool;
    }
    return numeric::mean(ratios);
  };
  return 0.5 * half(mu, nu, log_n_mu, log_n_nu) + 0.5 * half(nu, mu, log_n_nu, log_n_mu);
}

double jensen_shannon(const ObservationSet& mu, const ObservationSet& nu,
                      const KernelConfig& cfg) {
  return jensen_shannon(mu.embeddings(), nu.embeddings(), cfg);
}

std::vector<std::string> mean_classifier(const LabeledSet& train,
                                         std::span<const Embedding> test) {
  if (train.empty()) throw EmptyInput("classifier needs training samples");
  std::vector<Embedding> means;
  for (std::size_t c = 0; c < train.num_classes(); ++c) {
    means.push_back(mean_direction(train.class_embeddings(c)));
  }
  std::vector<std::string> out;
  out.reserve(test.size());
  for (const auto& x : test) {
    std::size_t best = 0;
    double best_cos = -std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < means.size(); ++c) {
      const double cs = x.dot(means[c]);
      if (cs > best_cos) {
        best_cos = cs;
        best = c;
      }
    }
    out.push_back(train.class_name(best));
  }
  return out;
}

std::vector<std::string> knn_classifier(const LabeledSet& train, std::span<const Embedding> test,
                                        std::size_t k, const KernelConfig& cfg) {
  if (train.empty()) throw EmptyInput("classifier needs training samples");
  if (k == 0 || k > train.size()) {
    throw DomainError("k must lie in [1, " + std::to_string(train.size()) + "]");
  }
  std::vector<std::string> out;
  out.reserve(test.size());
  std::vector<double> cosines(train.size());
  std::vector<std::size_t> order(train.size());
  for (const auto& x : test) {
    for (std::size_t i = 0; i < train.size(); ++i) cosines[i] = clamped_cosine(x, train.embedding(i));
    std::iota(order.begin(), order.end(), 0);
    std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k), order.end(),
                      [&](std::size_t a, std::size_t b) {
                        if (cosines[a] != cosines[b]) return cosines[a] > cosines[b];
                        return train.observations()[a].id < train.observations()[b].id;
                      });
    std::vector<std::size_t> votes(train.num_classes(), 0);
    std::vector<double> mass(train.num_classes(), 0.0);
    for (std::size_t r = 0; r < k; ++r) {
      const std::size_t i = order[r];
      ++votes[train.class_of(i)];
      mass[train.class_of(i)] += std::exp((cosines[i] - 1.0) / cfg.temperature());
    }
    std::size_t best = 0;
    for (std::size_t c = 1; c < votes.size(); ++c) {
      if (votes[c] > votes[best] || (votes[c] == votes[best] && mass[c] > mass[best])) best = c;
    }
    out.push_back(train.class_name(best));
  }
  return out;
}

}  // namespace obser
