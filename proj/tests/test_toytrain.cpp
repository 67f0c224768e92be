#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "obser/errors.hpp"
#include "obser/synthenv.hpp"
#include "obser/toytrain.hpp"

using namespace obser;
using namespace obser::toy;

namespace {

// Direct evaluation of mean_i -log(P_i / M_i) from the network outputs.
double naive_loss(const std::vector<Point>& z, const std::vector<std::size_t>& labels,
                  const ToyKernel& k) {
  const std::size_t b = z.size();
  std::vector<double> count(2, 0.0);
  for (auto l : labels) count[l] += 1;
  double total = 0.0;
  for (std::size_t i = 0; i < b; ++i) {
    std::vector<double> sum(2, 0.0);
    for (std::size_t j = 0; j < b; ++j) {
      if (j != i) sum[labels[j]] += std::exp(k.log_value(z[i], z[j]));
    }
    const std::size_t c = labels[i];
    std::vector<double> phi(2);
    for (std::size_t c2 = 0; c2 < 2; ++c2) phi[c2] = sum[c2] / (count[c2] - (c2 == c ? 1 : 0));
    const double m = count[0] / b * phi[0] + count[1] / b * phi[1];
    total += -std::log(phi[c] / m);
  }
  return total / b;
}

std::pair<std::vector<Point>, std::vector<std::size_t>> batch_of(const ToyDataset& d, std::size_t n) {
  std::vector<Point> p(d.points.begin(), d.points.begin() + n);
  std::vector<std::size_t> l(d.labels.begin(), d.labels.begin() + n);
  return {p, l};
}

}  // namespace

TEST(GenerateToy, XorCorners) {
  const auto d = generate_toy(ToyKind::kXor, 4, 0.0, 1);
  ASSERT_EQ(d.points.size(), 4u);
  int seen = 0;
  for (std::size_t i = 0; i < 4; ++i) {
    const auto& p = d.points[i];
    EXPECT_TRUE((p[0] == 0.0 || p[0] == 1.0) && (p[1] == 0.0 || p[1] == 1.0));
    EXPECT_EQ(d.labels[i], std::size_t(p[0] != p[1]));
    seen |= 1 << int(p[0] * 2 + p[1]);
  }
  EXPECT_EQ(seen, 15);
}

TEST(GenerateToy, MoonsOnArcs) {
  const auto d = generate_toy(ToyKind::kMoons, 101, 0.0, 2);
  for (std::size_t i = 0; i < d.points.size(); ++i) {
    const auto& p = d.points[i];
    if (d.labels[i] == 0) {
      EXPECT_NEAR(std::hypot(p[0], p[1]), 1.0, 1e-12);
      EXPECT_GE(p[1], -1e-12);
    } else {
      EXPECT_NEAR(std::hypot(p[0] - 1.0, p[1] - 0.5), 1.0, 1e-12);
      EXPECT_LE(p[1], 0.5 + 1e-12);
    }
  }
}

TEST(GenerateToy, BalancedAndDeterministic) {
  const auto d = generate_toy(ToyKind::kMoons, 500, 0.1, 3);
  std::size_t ones = 0;
  for (auto l : d.labels) ones += l;
  EXPECT_EQ(ones, 250u);
  const auto e = generate_toy(ToyKind::kMoons, 500, 0.1, 3);
  EXPECT_EQ(d.points, e.points);
  EXPECT_EQ(d.labels, e.labels);
  EXPECT_THROW(generate_toy(ToyKind::kXor, 3, 0.1, 0), DomainError);
  EXPECT_THROW(generate_toy(ToyKind::kXor, 10, -0.1, 0), DomainError);
}

TEST(ToyNet, HypersphereOutputsAreUnit) {
  const ToyNet net(Head::kHypersphere, 4);
  std::mt19937_64 rng(4);
  std::normal_distribution<double> n(0.0, 2.0);
  for (int i = 0; i < 200; ++i) {
    const auto z = net.forward(Point{n(rng), n(rng)});
    EXPECT_NEAR(std::hypot(z[0], z[1]), 1.0, 1e-9);
  }
  EXPECT_EQ(net.num_parameters(), 2u * 8 + 8 + 8 * 4 + 4 + 4 * 2 + 2);
}

TEST(BatchLoss, MatchesNaiveEvaluation) {
  for (auto head : {Head::kHypersphere, Head::kEuclidean}) {
    const auto d = generate_toy(ToyKind::kMoons, 60, 0.1, 5);
    const ToyNet net(head, 5);
    const ToyKernel k{head, 0.3};
    const auto r = batch_loss(net, d.points, d.labels, k, false);
    EXPECT_NEAR(r.loss, naive_loss(net.forward(d.points), d.labels, k), 1e-12);
    EXPECT_TRUE(r.grad.empty());
  }
}

TEST(BatchLoss, NeverBelowNegativeEntropy) {
  std::mt19937_64 rng(6);
  for (int t = 0; t < 30; ++t) {
    const auto head = t % 2 ? Head::kEuclidean : Head::kHypersphere;
    const auto d = generate_toy(t % 3 ? ToyKind::kMoons : ToyKind::kXor, 80, 0.05 * (t % 4), 100 + t);
    const std::size_t b = 6 + rng() % 60;
    auto [p, l] = batch_of(d, b);
    std::size_t ones = 0;
    for (auto x : l) ones += x;
    if (ones < 2 || b - ones < 2) continue;
    const ToyNet net(head, 200 + t);
    const auto r = batch_loss(net, p, l, ToyKernel{head, 0.05 + 0.1 * (t % 5)}, false);
    const double w = double(ones) / b;
    EXPECT_NEAR(r.lower_bound, w * std::log(w) + (1 - w) * std::log(1 - w), 1e-12);
    EXPECT_GE(r.loss - r.lower_bound, -1e-6);
  }
}

TEST(BatchLoss, SingleMemberClassRejected) {
  const std::vector<Point> p{{0, 0}, {1, 1}, {0, 1}};
  const std::vector<std::size_t> l{0, 0, 1};
  const ToyNet net(Head::kHypersphere, 1);
  EXPECT_THROW(batch_loss(net, p, l, ToyKernel{Head::kHypersphere, 0.1}), DomainError);
}

TEST(GradCheck, FreshNetworks) {
  for (std::uint64_t seed = 0; seed < 6; ++seed) {
    for (auto head : {Head::kHypersphere, Head::kEuclidean}) {
      const auto d = generate_toy(seed % 2 ? ToyKind::kXor : ToyKind::kMoons, 200, 0.1, seed);
      auto [p, l] = batch_of(d, 48);
      const ToyNet net(head, seed);
      EXPECT_LE(grad_check(net, p, l, ToyKernel{head, 0.5}), 1e-4) << seed;
      EXPECT_LE(grad_check(net, p, l, ToyKernel{head, 0.1}), 1e-4) << seed;
    }
  }
}

TEST(Train, OptionValidation) {
  const auto d = generate_toy(ToyKind::kMoons, 40, 0.1, 0);
  TrainOptions o;
  o.train_tau = 0.01;
  EXPECT_THROW(train(d, Head::kHypersphere, o), DomainError);
  o = {};
  o.batch_size = 3;
  EXPECT_THROW(train(d, Head::kHypersphere, o), DomainError);
  o = {};
  o.epochs = 0;
  EXPECT_THROW(train(d, Head::kHypersphere, o), DomainError);
}

TEST(Train, DeterministicTrace) {
  const auto d = generate_toy(ToyKind::kXor, 200, 0.1, 7);
  TrainOptions o;
  o.epochs = 4;
  o.seed = 7;
  const auto [net_a, a] = train(d, Head::kHypersphere, o);
  const auto [net_b, b] = train(d, Head::kHypersphere, o);
  ASSERT_EQ(a.epochs.size(), 4u);
  for (std::size_t i = 0; i < 4; ++i) {
    EXPECT_EQ(a.epochs[i].loss, b.epochs[i].loss);
    EXPECT_EQ(a.epochs[i].delta, b.epochs[i].delta);
    EXPECT_EQ(a.epochs[i].epoch, i + 1);
    EXPECT_TRUE(std::isfinite(a.epochs[i].loss));
  }
  EXPECT_EQ(std::vector<double>(net_a.parameters().begin(), net_a.parameters().end()),
            std::vector<double>(net_b.parameters().begin(), net_b.parameters().end()));
}

TEST(Train, MoonsDeltaSettlesOverFinalEpochs) {
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    TrainOptions o;
    o.seed = seed;
    const auto d = generate_toy(ToyKind::kMoons, 400, 0.1, seed + 100);
    const auto [net, trace] = train(d, Head::kHypersphere, o);
    ASSERT_GE(trace.epochs.size(), 10u);
    const std::size_t start = trace.epochs.size() - 10;
    double best = trace.epochs[start].delta;
    for (std::size_t e = start; e < trace.epochs.size(); ++e) {
      EXPECT_GE(trace.epochs[e].delta, best - 0.02) << "seed " << seed << " epoch " << e + 1;
      best = std::max(best, trace.epochs[e].delta);
      EXPECT_TRUE(std::isfinite(trace.epochs[e].loss));
    }
    const ToyKernel k{Head::kHypersphere, o.train_tau};
    auto [p, l] = batch_of(d, 64);
    EXPECT_LE(grad_check(net, p, l, k), 1e-4) << seed;
    const auto loss = batch_loss(net, p, l, k, false);
    EXPECT_GE(loss.loss - loss.lower_bound, -1e-6);
  }
}
