#pragma once

#include <cmath>
#include <random>
#include <string>
#include <vector>

#include "obser/embedding.hpp"
#include "obser/labeled_set.hpp"

namespace testutil {

inline obser::Embedding unit(std::vector<double> v) { return obser::Embedding::normalize(std::move(v)); }

inline obser::Embedding basis(std::size_t dim, std::size_t i, double sign = 1.0) {
  std::vector<double> v(dim, 0.0);
  v[i] = sign;
  return obser::Embedding::normalize(v);
}

inline obser::Embedding random_unit(std::size_t dim, std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  std::vector<double> v(dim);
  for (auto& x : v) x = n(rng);
  return obser::Embedding::normalize(v);
}

inline std::vector<obser::Embedding> repeat(const obser::Embedding& e, std::size_t n) {
  return std::vector<obser::Embedding>(n, e);
}

// Classes collapsed onto given points; counts[c] copies of points[c].
inline obser::LabeledSet point_masses(const std::vector<obser::Embedding>& points,
                                      const std::vector<std::size_t>& counts) {
  std::vector<obser::Embedding> e;
  std::vector<std::string> labels;
  for (std::size_t c = 0; c < points.size(); ++c) {
    for (std::size_t i = 0; i < counts[c]; ++i) {
      e.push_back(points[c]);
      labels.push_back("k" + std::to_string(c));
    }
  }
  return obser::LabeledSet(std::move(e), std::move(labels));
}

// (a.b - 1) / tau computed from raw coordinates.
inline double phi(const obser::Embedding& a, const obser::Embedding& b, double tau) {
  double dot = 0.0;
  for (std::size_t i = 0; i < a.dim(); ++i) dot += a[i] * b[i];
  return std::exp((dot - 1.0) / tau);
}

inline double density(const obser::Embedding& x, const std::vector<obser::Embedding>& s, double tau) {
  double sum = 0.0;
  for (const auto& y : s) sum += phi(x, y, tau);
  return sum / double(s.size());
}

}  // namespace testutil
