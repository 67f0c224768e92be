#include "obser/toytrain.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>

#include "obser/errors.hpp"
#include "obser/synthenv.hpp"

namespace obser::toy {

namespace {

double uniform01(std::mt19937_64& rng) {
  return (static_cast<double>(rng() >> 11) + 0.5) * 0x1.0p-53;
}

template <typename T>
void shuffle_in_place(std::vector<T>& v, std::mt19937_64& rng) {
  for (std::size_t i = v.size(); i > 1; --i) {
    const auto j = static_cast<std::size_t>(uniform01(rng) * double(i));
    std::swap(v[i - 1], v[std::min(j, i - 1)]);
  }
}

constexpr std::size_t kLayers = ToyNet::kWidths.size() - 1;
constexpr double kInitBias = 0.2;

}  // namespace

ToyDataset generate_toy(ToyKind kind, std::size_t n, double noise, std::uint64_t seed) {
  if (n < 4) throw DomainError("toy datasets need at least 4 points");
  if (!(noise >= 0.0)) throw DomainError("noise must be nonnegative");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);

  ToyDataset data;
  data.kind = kind;
  data.noise = noise;
  const std::size_t n_first = (n + 1) / 2;
  const std::size_t n_second = n - n_first;

  if (kind == ToyKind::kMoons) {
    auto arc = [](std::size_t i, std::size_t count) {
      return count > 1 ? std::numbers::pi * double(i) / double(count - 1) : 0.0;
    };
    for (std::size_t i = 0; i < n_first; ++i) {
      const double t = arc(i, n_first);
      data.points.push_back({std::cos(t), std::sin(t)});
      data.labels.push_back(0);
    }
    for (std::size_t i = 0; i < n_second; ++i) {
      const double t = arc(i, n_second);
      data.points.push_back({1.0 - std::cos(t), 0.5 - std::sin(t)});
      data.labels.push_back(1);
    }
  } else {
    // Corners (0,0), (1,1) carry label 0 and (1,0), (0,1) label 1, cycled so
    // each label gets half the points.
    static constexpr std::array<Point, 4> kCorners = {
        Point{0.0, 0.0}, Point{1.0, 0.0}, Point{1.0, 1.0}, Point{0.0, 1.0}};
    for (std::size_t i = 0; i < n; ++i) {
      const Point& p = kCorners[i % 4];
      data.points.push_back(p);
      data.labels.push_back(static_cast<std::size_t>(p[0] != p[1]));
    }
  }
  if (noise > 0.0) {
    for (auto& p : data.points) {
      p[0] += noise * normal(rng);
      p[1] += noise * normal(rng);
    }
  }

  // Shuffle points and labels together.
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  shuffle_in_place(order, rng);
  ToyDataset shuffled = data;
  for (std::size_t i = 0; i < n; ++i) {
    shuffled.points[i] = data.points[order[i]];
    shuffled.labels[i] = data.labels[order[i]];
  }
  return shuffled;
}

double ToyKernel::log_value(const Point& a, const Point& b) const {
  if (head == Head::kHypersphere) return (a[0] * b[0] + a[1] * b[1] - 1.0) / tau;
  const double dx = a[0] - b[0];
  const double dy = a[1] - b[1];
  return -(dx * dx + dy * dy) / tau;
}

Point ToyKernel::grad_first(const Point& a, const Point& b) const {
  if (head == Head::kHypersphere) return {b[0] / tau, b[1] / tau};
  return {-2.0 * (a[0] - b[0]) / tau, -2.0 * (a[1] - b[1]) / tau};
}

ToyNet::ToyNet(Head head, std::uint64_t seed) : head_(head) {
  std::size_t total = 0;
  for (std::size_t l = 0; l < kLayers; ++l) total += kWidths[l + 1] * (kWidths[l] + 1);
  params_.assign(total, 0.0);

  // Glorot-uniform weights. Biases are small but nonzero: with zero biases
  // the input (0, 0) maps to y = 0, where the sphere head is undefined.
  std::mt19937_64 rng(seed);
  for (std::size_t l = 0; l < kLayers; ++l) {
    const double limit = std::sqrt(6.0 / double(kWidths[l] + kWidths[l + 1]));
    const std::size_t off = weight_offset(l);
    for (std::size_t k = 0; k < kWidths[l] * kWidths[l + 1]; ++k) {
      params_[off + k] = limit * (2.0 * uniform01(rng) - 1.0);
    }
    for (std::size_t k = 0; k < kWidths[l + 1]; ++k) {
      params_[bias_offset(l) + k] = kInitBias * (2.0 * uniform01(rng) - 1.0);
    }
  }
}

std::size_t ToyNet::weight_offset(std::size_t layer) const {
  std::size_t off = 0;
  for (std::size_t l = 0; l < layer; ++l) off += kWidths[l + 1] * (kWidths[l] + 1);
  return off;
}

std::size_t ToyNet::bias_offset(std::size_t layer) const {
  return weight_offset(layer) + kWidths[layer] * kWidths[layer + 1];
}

ToyNet::Activations ToyNet::run(const Point& x) const {
  Activations a;
  const double* w0 = params_.data() + weight_offset(0);
  const double* b0 = params_.data() + bias_offset(0);
  for (std::size_t o = 0; o < 8; ++o) a.h1[o] = std::tanh(w0[o * 2] * x[0] + w0[o * 2 + 1] * x[1] + b0[o]);

  const double* w1 = params_.data() + weight_offset(1);
  const double* b1 = params_.data() + bias_offset(1);
  for (std::size_t o = 0; o < 4; ++o) {
    double s = b1[o];
    for (std::size_t i = 0; i < 8; ++i) s += w1[o * 8 + i] * a.h1[i];
    a.h2[o] = std::tanh(s);
  }

  const double* w2 = params_.data() + weight_offset(2);
  const double* b2 = params_.data() + bias_offset(2);
  for (std::size_t o = 0; o < 2; ++o) {
    double s = b2[o];
    for (std::size_t i = 0; i < 4; ++i) s += w2[o * 4 + i] * a.h2[i];
    a.y[o] = s;
  }

  a.z = a.y;
  if (head_ == Head::kHypersphere) {
    const double n = std::hypot(a.y[0], a.y[1]);
    a.z = {a.y[0] / n, a.y[1] / n};
  }
  return a;
}

Point ToyNet::forward(const Point& x) const { return run(x).z; }

std::vector<Point> ToyNet::forward(std::span<const Point> xs) const {
  std::vector<Point> out;
  out.reserve(xs.size());
  for (const auto& x : xs) out.push_back(forward(x));
  return out;
}

void ToyNet::backward(const Point& x, const Point& grad_output, std::span<double> grad) const {
  const Activations a = run(x);

  Point gy = grad_output;
  if (head_ == Head::kHypersphere) {
    // d(y/|y|)/dy = (I - z z^T) / |y|
    const double n = std::hypot(a.y[0], a.y[1]);
    const double proj = a.z[0] * grad_output[0] + a.z[1] * grad_output[1];
    gy = {(grad_output[0] - a.z[0] * proj) / n, (grad_output[1] - a.z[1] * proj) / n};
  }

  std::array<double, 4> gpre2{};
  {
    double* gw = grad.data() + weight_offset(2);
    double* gb = grad.data() + bias_offset(2);
    const double* w = params_.data() + weight_offset(2);
    for (std::size_t o = 0; o < 2; ++o) {
      for (std::size_t i = 0; i < 4; ++i) gw[o * 4 + i] += gy[o] * a.h2[i];
      gb[o] += gy[o];
    }
    for (std::size_t i = 0; i < 4; ++i) {
      const double g = w[i] * gy[0] + w[4 + i] * gy[1];
      gpre2[i] = g * (1.0 - a.h2[i] * a.h2[i]);
    }
  }

  std::array<double, 8> gpre1{};
  {
    double* gw = grad.data() + weight_offset(1);
    double* gb = grad.data() + bias_offset(1);
    const double* w = params_.data() + weight_offset(1);
    for (std::size_t o = 0; o < 4; ++o) {
      for (std::size_t i = 0; i < 8; ++i) gw[o * 8 + i] += gpre2[o] * a.h1[i];
      gb[o] += gpre2[o];
    }
    for (std::size_t i = 0; i < 8; ++i) {
      double g = 0.0;
      for (std::size_t o = 0; o < 4; ++o) g += w[o * 8 + i] * gpre2[o];
      gpre1[i] = g * (1.0 - a.h1[i] * a.h1[i]);
    }
  }

  double* gw = grad.data() + weight_offset(0);
  double* gb = grad.data() + bias_offset(0);
  for (std::size_t o = 0; o < 8; ++o) {
    gw[o * 2] += gpre1[o] * x[0];
    gw[o * 2 + 1] += gpre1[o] * x[1];
    gb[o] += gpre1[o];
  }
}

LossResult batch_loss(const ToyNet& net, std::span<const Point> points,
                      std::span<const std::size_t> labels, const ToyKernel& kernel,
                      bool with_gradient) {
  const std::size_t b = points.size();
  if (b == 0 || labels.size() != b) throw DomainError("batch points and labels must match");
  std::size_t num_classes = 0;
  for (std::size_t l : labels) num_classes = std::max(num_classes, l + 1);
  std::vector<std::size_t> counts(num_classes, 0);
  for (std::size_t l : labels) ++counts[l];
  for (std::size_t c = 0; c < num_classes; ++c) {
    if (counts[c] == 1) {
      throw DomainError("batch too small: class " + std::to_string(c) +
                        " needs at least two members");
    }
  }

  const auto z = net.forward(points);
  const double inv_b = 1.0 / double(b);
  std::vector<double> log_weight(num_classes);  // log a_ij for same-class columns
  for (std::size_t c = 0; c < num_classes; ++c) {
    if (counts[c] > 1) log_weight[c] = std::log(double(counts[c]) / (double(b) * double(counts[c] - 1)));
  }
  const double log_other = std::log(inv_b);

  LossResult out;
  if (with_gradient) out.grad.assign(net.num_parameters(), 0.0);
  std::vector<Point> grad_z(b, Point{0.0, 0.0});
  std::vector<double> s(b);
  std::vector<double> pos(b);
  std::vector<double> mix(b);
  double total = 0.0;

  for (std::size_t i = 0; i < b; ++i) {
    const std::size_t c = labels[i];
    double pos_max = -std::numeric_limits<double>::infinity();
    double mix_max = -std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < b; ++j) {
      if (j == i) continue;
      s[j] = kernel.log_value(z[i], z[j]);
      const bool same = labels[j] == c;
      mix[j] = s[j] + (same ? log_weight[c] : log_other);
      mix_max = std::max(mix_max, mix[j]);
      if (same) pos_max = std::max(pos_max, s[j]);
    }
    double pos_sum = 0.0;
    double mix_sum = 0.0;
    for (std::size_t j = 0; j < b; ++j) {
      if (j == i) continue;
      mix_sum += std::exp(mix[j] - mix_max);
      if (labels[j] == c) pos_sum += std::exp(s[j] - pos_max);
    }
    // log M - log P; the (n_c - 1) normalizer of P cancels into log_weight.
    const double log_pos = pos_max + std::log(pos_sum) - std::log(double(counts[c] - 1));
    const double log_mix = mix_max + std::log(mix_sum);
    total += log_mix - log_pos;

    if (!with_gradient) continue;
    for (std::size_t j = 0; j < b; ++j) {
      if (j == i) continue;
      double g = std::exp(mix[j] - log_mix);
      if (labels[j] == c) g -= std::exp(s[j] - pos_max) / pos_sum;
      g *= inv_b;
      const Point gi = kernel.grad_first(z[i], z[j]);
      const Point gj = kernel.grad_first(z[j], z[i]);
      grad_z[i][0] += g * gi[0];
      grad_z[i][1] += g * gi[1];
      grad_z[j][0] += g * gj[0];
      grad_z[j][1] += g * gj[1];
    }
  }
  out.loss = total * inv_b;

  std::vector<double> fractions;
  for (std::size_t c = 0; c < num_classes; ++c) {
    if (counts[c] > 0) fractions.push_back(double(counts[c]) * inv_b);
  }
  out.lower_bound = -entropy(fractions);

  if (with_gradient) {
    for (std::size_t i = 0; i < b; ++i) net.backward(points[i], grad_z[i], out.grad);
  }
  return out;
}

double grad_check(const ToyNet& net, std::span<const Point> points,
                  std::span<const std::size_t> labels, const ToyKernel& kernel, double step) {
  const auto analytic = batch_loss(net, points, labels, kernel, true).grad;
  ToyNet probe = net;
  double worst = 0.0;
  for (std::size_t p = 0; p < probe.num_parameters(); ++p) {
    const double saved = probe.parameters()[p];
    probe.parameters()[p] = saved + step;
    const double up = batch_loss(probe, points, labels, kernel, false).loss;
    probe.parameters()[p] = saved - step;
    const double down = batch_loss(probe, points, labels, kernel, false).loss;
    probe.parameters()[p] = saved;
    const double numeric = (up - down) / (2.0 * step);
    // Absolute floor keeps vanishing gradients from dividing roundoff by ~0.
    const double denom = std::max({std::abs(analytic[p]), std::abs(numeric), 1e-6});
    worst = std::max(worst, std::abs(analytic[p] - numeric) / denom);
  }
  return worst;
}

EDSReport evaluate_eds(const ToyNet& net, const ToyDataset& data, double tau,
                       double trim_fraction) {
  const auto z = net.forward(data.points);
  const ToyKernel kernel{net.head(), tau};
  const std::size_t n = z.size();
  DenseMatrix logk(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      double v = kernel.log_value(z[i], z[j]);
      if (net.head() == Head::kHypersphere) v = std::clamp(v, -2.0 / tau, 0.0);
      logk(i, j) = v;
    }
  }
  return measure_eds(logk, data.labels, {"0", "1"}, tau, trim_fraction);
}

std::pair<ToyNet, TrainTrace> train(const ToyDataset& data, Head head,
                                    const TrainOptions& options) {
  const std::size_t n = data.points.size();
  if (n != data.labels.size()) throw DomainError("dataset points and labels differ in length");
  std::array<std::vector<std::size_t>, 2> by_class;
  for (std::size_t i = 0; i < n; ++i) {
    if (data.labels[i] > 1) throw DomainError("toy labels must be 0 or 1");
    by_class[data.labels[i]].push_back(i);
  }
  if (by_class[0].size() < 2 || by_class[1].size() < 2) {
    throw DomainError("training needs two classes with at least two members each");
  }
  if (options.batch_size < 4) {
    throw DomainError("batch too small: each class needs two members per batch");
  }
  if (!(options.train_tau >= kMinTrainTemperature)) {
    throw DomainError("training temperature must be at least 0.05");
  }
  if (!(options.learning_rate > 0.0)) throw DomainError("learning rate must be positive");
  if (options.epochs == 0) throw DomainError("epochs must be positive");

  ToyNet net(head, options.seed);
  const ToyKernel kernel{head, options.train_tau};
  std::mt19937_64 rng(options.seed ^ 0x9e3779b97f4a7c15ULL);

  TrainTrace trace;
  std::vector<Point> batch_points;
  std::vector<std::size_t> batch_labels;
  for (std::size_t epoch = 1; epoch <= options.epochs; ++epoch) {
    // Round-robin over shuffled classes keeps every batch balanced.
    for (auto& members : by_class) shuffle_in_place(members, rng);
    std::vector<std::size_t> order;
    order.reserve(n);
    const std::size_t longest = std::max(by_class[0].size(), by_class[1].size());
    for (std::size_t r = 0; r < longest; ++r) {
      for (const auto& members : by_class) {
        if (r < members.size()) order.push_back(members[r]);
      }
    }
    const std::size_t num_batches = std::max<std::size_t>(1, n / options.batch_size);

    double loss_sum = 0.0;
    for (std::size_t bi = 0; bi < num_batches; ++bi) {
      const std::size_t begin = bi * options.batch_size;
      const std::size_t end = bi + 1 == num_batches ? n : begin + options.batch_size;
      batch_points.clear();
      batch_labels.clear();
      for (std::size_t k = begin; k < end; ++k) {
        batch_points.push_back(data.points[order[k]]);
        batch_labels.push_back(data.labels[order[k]]);
      }
      const auto result = batch_loss(net, batch_points, batch_labels, kernel, true);
      auto params = net.parameters();
      for (std::size_t p = 0; p < params.size(); ++p) {
        params[p] -= options.learning_rate * result.grad[p];
      }
      loss_sum += result.loss;
    }

    const EDSReport report = evaluate_eds(net, data, options.eval_tau, options.trim_fraction);
    EpochRecord record;
    record.epoch = epoch;
    record.loss = loss_sum / double(num_batches);
    record.delta = report.delta;
    record.epsilon = report.epsilon.value_or(0.0);
    record.k = report.k.value_or(0.0);
    trace.epochs.push_back(record);
    trace.final_report = report;
  }
  return {std::move(net), std::move(trace)};
}

}  // namespace obser::toy
