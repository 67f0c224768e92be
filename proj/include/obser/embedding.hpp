#pragma once

#include <array>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace obser {

/// Largest deviation of |v| from 1 that ingestion silently repairs.
inline constexpr double kNormIngestTolerance = 1e-3;

/// Unit vector on the (d-1)-sphere, d >= 2.
class Embedding {
 public:
  Embedding() = default;

  /// Applies the ingestion rule: vectors whose norm is within
  /// kNormIngestTolerance of 1 are renormalized, anything else throws
  /// DomainError.
  static Embedding from_coords(std::vector<double> coords);

  /// Normalizes an arbitrary nonzero vector. Used for generated data.
  static Embedding normalize(std::vector<double> coords);

  std::span<const double> coords() const { return coords_; }
  std::size_t dim() const { return coords_.size(); }
  double operator[](std::size_t i) const { return coords_[i]; }

  double dot(const Embedding& other) const;
  Embedding operator-() const;

  friend bool operator==(const Embedding&, const Embedding&) = default;

 private:
  explicit Embedding(std::vector<double> coords) : coords_(std::move(coords)) {}

  std::vector<double> coords_;
};

using Position = std::array<double, 3>;

/// One observation together with the metadata carried through the JSONL
/// format. Metadata is never interpreted by the estimators.
struct Observation {
  std::string id;
  Embedding vec;
  std::optional<std::string> label;
  std::optional<std::string> region;
  std::optional<Position> pos;
};

/// Empirical distribution of a sub-environment: a list of observations that
/// share one dimension.
class ObservationSet {
 public:
  ObservationSet() = default;
  explicit ObservationSet(std::vector<Observation> observations);

  /// Builds a set with generated ids "<prefix><index>" (zero padded).
  static ObservationSet from_embeddings(std::vector<Embedding> embeddings,
                                        const std::string& id_prefix = "o");

  void add(Observation observation);

  std::size_t size() const { return embeddings_.size(); }
  bool empty() const { return embeddings_.empty(); }
  std::size_t dim() const { return dim_; }

  std::span<const Embedding> embeddings() const { return embeddings_; }
  const Embedding& embedding(std::size_t i) const { return embeddings_[i]; }
  const Observation& operator[](std::size_t i) const { return observations_[i]; }
  const std::vector<Observation>& observations() const { return observations_; }

  /// True when every observation carries a label.
  bool fully_labeled() const;

 private:
  std::vector<Observation> observations_;
  // Mirrors observations_[i].vec so kernels can take a contiguous span.
  std::vector<Embedding> embeddings_;
  std::size_t dim_ = 0;
};

/// Zero-padded id such as "o000042".
std::string make_id(const std::string& prefix, std::size_t index, int width = 6);

}  // namespace obser
