#include "obser/eds.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "obser/errors.hpp"
#include "obser/synthenv.hpp"

namespace obser {

namespace {

// LSE of row entries over the listed columns, optionally skipping one column.
double row_lse(std::span<const double> row, std::span<const std::size_t> cols,
               std::size_t skip = std::numeric_limits<std::size_t>::max()) {
  double m = -std::numeric_limits<double>::infinity();
  for (std::size_t j : cols) {
    if (j != skip) m = std::max(m, row[j]);
  }
  if (!std::isfinite(m)) return m;
  double s = 0.0;
  for (std::size_t j : cols) {
    if (j != skip) s += std::exp(row[j] - m);
  }
  return m + std::log(s);
}

std::vector<std::vector<std::size_t>> partition(std::span<const std::size_t> labels,
                                                std::size_t num_classes) {
  std::vector<std::vector<std::size_t>> members(num_classes);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] >= num_classes) throw DomainError("label index out of range");
    members[labels[i]].push_back(i);
  }
  return members;
}

}  // namespace

EDSReport measure_eds(const DenseMatrix& log_kernel, std::span<const std::size_t> labels,
                      const std::vector<std::string>& class_names, double tau,
                      double trim_fraction) {
  const std::size_t n = labels.size();
  if (n == 0) throw EmptyInput("EDS measurement needs labeled samples");
  if (log_kernel.rows() != n || log_kernel.cols() != n) {
    throw DimensionMismatch(n, log_kernel.rows());
  }
  if (!(trim_fraction >= 0.0 && trim_fraction <= 0.2)) {
    throw DomainError("trim fraction must lie in [0, 0.2]");
  }
  const std::size_t num_classes = class_names.size();
  const auto members = partition(labels, num_classes);

  EDSReport report;
  report.trim_fraction = trim_fraction;
  report.tau = tau;
  report.num_classes = num_classes;
  report.num_samples = n;

  std::vector<std::vector<double>> within(num_classes);
  std::vector<std::vector<double>> cross(num_classes);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t c = labels[i];
    const auto row = log_kernel.row(i);
    for (std::size_t c2 = 0; c2 < num_classes; ++c2) {
      const auto& cols = members[c2];
      if (cols.empty()) continue;
      if (c2 == c) {
        if (cols.size() < 2) continue;
        const double lse = row_lse(row, cols, i);
        within[c].push_back(std::exp(lse - std::log(double(cols.size() - 1))));
      } else {
        const double lse = row_lse(row, cols);
        cross[c].push_back(std::exp(lse - std::log(double(cols.size()))));
      }
    }
  }

  double delta_sum = 0.0;
  std::size_t delta_classes = 0;
  double eps_sum = 0.0;
  std::size_t eps_classes = 0;
  double delta_worst = std::numeric_limits<double>::infinity();
  double eps_worst = -std::numeric_limits<double>::infinity();
  double cross_min = std::numeric_limits<double>::infinity();

  for (std::size_t c = 0; c < num_classes; ++c) {
    if (members[c].empty()) continue;
    if (members[c].size() == 1) report.singleton_classes.push_back(class_names[c]);

    auto& w = within[c];
    if (!w.empty()) {
      std::sort(w.begin(), w.end());
      const auto drop = static_cast<std::size_t>(std::floor(trim_fraction * double(w.size())));
      std::span<const double> kept(w.data() + drop, w.size() - drop);
      const double d = numeric::mean(kept);
      report.per_class_delta[class_names[c]] = d;
      delta_sum += d;
      ++delta_classes;
      delta_worst = std::min(delta_worst, kept.front());
    }

    auto& x = cross[c];
    if (!x.empty()) {
      std::sort(x.begin(), x.end());
      const auto drop = static_cast<std::size_t>(std::floor(trim_fraction * double(x.size())));
      std::span<const double> kept(x.data(), x.size() - drop);
      const double e = numeric::mean(kept);
      report.per_class_epsilon[class_names[c]] = e;
      eps_sum += e;
      ++eps_classes;
      eps_worst = std::max(eps_worst, kept.back());
      cross_min = std::min(cross_min, kept.front());
    }
  }

  if (delta_classes == 0) throw DomainError("no class has two or more members");
  report.delta = delta_sum / double(delta_classes);
  report.delta_worst = delta_worst;
  if (eps_classes > 0) {
    report.epsilon = eps_sum / double(eps_classes);
    report.epsilon_worst = eps_worst;
    report.cross_min = cross_min;
    if (eps_worst > 0.0) {
      report.k = delta_worst / eps_worst;
    } else {
      report.k = std::numeric_limits<double>::infinity();
    }
    report.ordering_violated = *report.epsilon > report.delta || *report.k < 1.0;
  }
  return report;
}

EDSReport measure_eds(const LabeledSet& data, const KernelConfig& cfg, double trim_fraction) {
  if (data.empty()) throw EmptyInput("EDS measurement needs labeled samples");
  const auto logk = log_density_matrix(data.embeddings(), data.embeddings(), cfg);
  return measure_eds(logk, data.class_indices(), data.class_names(), cfg.temperature(),
                     trim_fraction);
}

std::map<std::string, double> bayes_classify(const Embedding& x, const LabeledSet& data,
                                             const KernelConfig& cfg) {
  if (data.empty()) throw EmptyInput("Bayes classifier needs labeled samples");
  // log(omega_c * Phi(x; rho_c)) = LSE_{j in c} log phi(x, x_j) - log N.
  std::vector<double> scores(data.num_classes());
  std::vector<double> logs;
  for (std::size_t c = 0; c < data.num_classes(); ++c) {
    logs.clear();
    for (std::size_t j : data.members(c)) logs.push_back(log_kernel(x, data.embedding(j), cfg));
    scores[c] = numeric::log_sum_exp(logs);
  }
  const double norm = numeric::log_sum_exp(scores);
  std::map<std::string, double> posterior;
  for (std::size_t c = 0; c < scores.size(); ++c) {
    posterior[data.class_name(c)] = std::exp(scores[c] - norm);
  }
  return posterior;
}

JointGap kl_joint_gap(const LabeledSet& data, const KernelConfig& cfg) {
  if (data.empty()) throw EmptyInput("joint gap needs labeled samples");
  const std::size_t n = data.size();
  const std::size_t num_classes = data.num_classes();
  for (std::size_t c = 0; c < num_classes; ++c) {
    if (data.members(c).size() < 2) {
      throw DomainError("class '" + data.class_name(c) +
                        "' has a single member; its leave-one-out density is undefined");
    }
  }
  const auto omega = data.class_fractions();
  const auto logk = log_density_matrix(data.embeddings(), data.embeddings(), cfg);

  std::vector<double> per_sample(n);
  std::vector<double> mix(num_classes);
  for (std::size_t i = 0; i < n; ++i) {
    const auto row = logk.row(i);
    const std::size_t own = data.class_of(i);
    double log_own = 0.0;
    for (std::size_t c = 0; c < num_classes; ++c) {
      const auto cols = data.members(c);
      double log_phi;
      if (c == own) {
        log_phi = row_lse(row, cols, i) - std::log(double(cols.size() - 1));
        log_own = log_phi;
      } else {
        log_phi = row_lse(row, cols) - std::log(double(cols.size()));
      }
      mix[c] = std::log(omega[c]) + log_phi;
    }
    per_sample[i] = numeric::log_sum_exp(mix) - log_own;
  }

  JointGap gap;
  gap.metric_term = numeric::mean(per_sample);
  gap.entropy_term = entropy(omega);
  gap.value = gap.metric_term + gap.entropy_term;
  return gap;
}

double theorem1_bound(double k, std::size_t num_classes) {
  if (num_classes == 0) throw DomainError("number of classes must be positive");
  if (!(k >= 1.0)) throw DomainError("bound requires k >= 1");
  if (std::isinf(k)) return 0.0;
  return std::log1p(double(num_classes - 1) / k);
}

double theorem1_bound(const EDSReport& report, std::size_t num_classes) {
  if (!report.k) throw DomainError("k is undefined for a single-class report");
  return theorem1_bound(*report.k, num_classes);
}

}  // namespace obser
