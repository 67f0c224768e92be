#include "obser/embedding.hpp"

#include <cmath>
#include <cstdio>
#include <limits>

#include "obser/errors.hpp"

namespace obser {

namespace {

double norm_of(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

void check_dim(const std::vector<double>& coords) {
  if (coords.size() < 2) {
    throw DomainError("embedding dimension must be at least 2, got " +
                      std::to_string(coords.size()));
  }
}

}  // namespace

Embedding Embedding::from_coords(std::vector<double> coords) {
  check_dim(coords);
  for (double x : coords) {
    if (!std::isfinite(x)) throw DomainError("embedding has a non-finite coordinate");
  }
  const double n = norm_of(coords);
  if (std::abs(n - 1.0) > kNormIngestTolerance) {
    char buf[96];
    std::snprintf(buf, sizeof(buf), "embedding norm %.6g deviates from 1 by more than %g", n,
                  kNormIngestTolerance);
    throw DomainError(buf);
  }
  // Vectors that are unit up to rounding are kept bit-for-bit, so a saved set
  // reloads unchanged.
  if (std::abs(n - 1.0) > 4 * std::numeric_limits<double>::epsilon()) {
    for (double& x : coords) x /= n;
  }
  return Embedding(std::move(coords));
}

Embedding Embedding::normalize(std::vector<double> coords) {
  check_dim(coords);
  const double n = norm_of(coords);
  if (!(n > 0.0) || !std::isfinite(n)) throw DegenerateResultant();
  for (double& x : coords) x /= n;
  return Embedding(std::move(coords));
}

double Embedding::dot(const Embedding& other) const {
  if (other.dim() != dim()) throw DimensionMismatch(dim(), other.dim());
  double s = 0.0;
  for (std::size_t i = 0; i < coords_.size(); ++i) s += coords_[i] * other.coords_[i];
  return s;
}

Embedding Embedding::operator-() const {
  std::vector<double> c(coords_);
  for (double& x : c) x = -x;
  return Embedding(std::move(c));
}

ObservationSet::ObservationSet(std::vector<Observation> observations) {
  observations_.reserve(observations.size());
  embeddings_.reserve(observations.size());
  for (auto& o : observations) add(std::move(o));
}

ObservationSet ObservationSet::from_embeddings(std::vector<Embedding> embeddings,
                                               const std::string& id_prefix) {
  ObservationSet set;
  for (std::size_t i = 0; i < embeddings.size(); ++i) {
    set.add(Observation{make_id(id_prefix, i), std::move(embeddings[i]), {}, {}, {}});
  }
  return set;
}

void ObservationSet::add(Observation observation) {
  const std::size_t d = observation.vec.dim();
  if (d == 0) throw DomainError("observation '" + observation.id + "' has no vector");
  if (embeddings_.empty()) {
    dim_ = d;
  } else if (d != dim_) {
    throw DimensionMismatch(dim_, d);
  }
  embeddings_.push_back(observation.vec);
  observations_.push_back(std::move(observation));
}

bool ObservationSet::fully_labeled() const {
  for (const auto& o : observations_) {
    if (!o.label) return false;
  }
  return true;
}

std::string make_id(const std::string& prefix, std::size_t index, int width) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%0*zu", width, index);
  return prefix + buf;
}

}  // namespace obser
