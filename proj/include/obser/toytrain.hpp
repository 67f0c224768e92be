#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "obser/eds.hpp"

namespace obser::toy {

enum class ToyKind { kMoons, kXor };
enum class Head {
  /// L2-normalized output, cosine-exponential kernel.
  kHypersphere,
  /// Raw output, Gaussian kernel exp(-|z - z'|^2 / tau).
  kEuclidean,
};

using Point = std::array<double, 2>;

struct ToyDataset {
  std::vector<Point> points;
  std::vector<std::size_t> labels;  // 0 or 1
  ToyKind kind = ToyKind::kMoons;
  double noise = 0.0;
};

/// Two-moons or four-corner XOR data with exactly balanced classes. With
/// noise = 0, moons lie on the two half-circle arcs and XOR points sit on the
/// unit-square corners labeled by coordinate parity.
ToyDataset generate_toy(ToyKind kind, std::size_t n, double noise, std::uint64_t seed);

/// Similarity kernel in the output space of a ToyNet.
struct ToyKernel {
  Head head = Head::kHypersphere;
  double tau = 0.1;

  /// log phi(a, b) and its gradient with respect to a (the gradient with
  /// respect to b follows from symmetry of the kernel).
  double log_value(const Point& a, const Point& b) const;
  Point grad_first(const Point& a, const Point& b) const;
};

/// Fully connected (2, 8, 4, 2) network with tanh hidden layers.
class ToyNet {
 public:
  static constexpr std::array<std::size_t, 4> kWidths = {2, 8, 4, 2};

  ToyNet(Head head, std::uint64_t seed);

  Head head() const { return head_; }
  std::span<const double> parameters() const { return params_; }
  std::span<double> parameters() { return params_; }
  std::size_t num_parameters() const { return params_.size(); }

  Point forward(const Point& x) const;
  std::vector<Point> forward(std::span<const Point> xs) const;

  /// Accumulates d(objective)/d(params) into grad given d(objective)/d(output)
  /// for the input x.
  void backward(const Point& x, const Point& grad_output, std::span<double> grad) const;

  /// Offsets of layer l's weight matrix (rows = output units) and bias.
  std::size_t weight_offset(std::size_t layer) const;
  std::size_t bias_offset(std::size_t layer) const;

 private:
  struct Activations {
    std::array<double, 8> h1{};
    std::array<double, 4> h2{};
    Point y{};
    Point z{};
  };
  Activations run(const Point& x) const;

  Head head_;
  std::vector<double> params_;
};

struct LossResult {
  double loss = 0.0;
  std::vector<double> grad;
  /// -H of the batch class fractions; the loss never goes below it.
  double lower_bound = 0.0;
};

/// Batch estimate of E[-log Phi(x; rho_+) / Phi(x; mu)], with self-pairs
/// excluded and Phi(x; mu) = sum_c omega_c Phi(x; rho_c). Every class in the
/// batch needs at least two members.
LossResult batch_loss(const ToyNet& net, std::span<const Point> points,
                      std::span<const std::size_t> labels, const ToyKernel& kernel,
                      bool with_gradient = true);

/// Max relative error between the analytic gradient and central differences.
double grad_check(const ToyNet& net, std::span<const Point> points,
                  std::span<const std::size_t> labels, const ToyKernel& kernel,
                  double step = 1e-5);

/// Smallest training temperature; keeps kernel derivatives finite.
inline constexpr double kMinTrainTemperature = 0.05;

struct TrainOptions {
  // Defaults from the seeded sweep in tests/fixtures/toy_sweep.csv.
  std::size_t epochs = 300;
  double learning_rate = 2.0;
  std::size_t batch_size = 128;
  std::uint64_t seed = 0;
  double train_tau = 0.5;
  double eval_tau = 0.07;
  double trim_fraction = kDefaultTrimFraction;
};

struct EpochRecord {
  std::size_t epoch = 0;
  double loss = 0.0;
  double epsilon = 0.0;
  double delta = 0.0;
  double k = 0.0;
};

struct TrainTrace {
  std::vector<EpochRecord> epochs;
  EDSReport final_report;
};

/// EDS of the network's outputs on the dataset at the given temperature.
EDSReport evaluate_eds(const ToyNet& net, const ToyDataset& data, double tau,
                       double trim_fraction = kDefaultTrimFraction);

/// Plain minibatch SGD on batch_loss with class-balanced batches.
std::pair<ToyNet, TrainTrace> train(const ToyDataset& data, Head head,
                                    const TrainOptions& options);

}  // namespace obser::toy
