#pragma once

#include <span>
#include <string>
#include <vector>

#include "obser/embedding.hpp"

namespace obser {

/// Observations with exactly one class label each. Classes are indexed in
/// ascending order of their names.
class LabeledSet {
 public:
  LabeledSet() = default;

  /// Every observation must carry a label.
  explicit LabeledSet(ObservationSet observations);
  LabeledSet(std::vector<Embedding> embeddings, std::vector<std::string> labels,
             const std::string& id_prefix = "o");

  std::size_t size() const { return observations_.size(); }
  bool empty() const { return observations_.empty(); }
  std::size_t dim() const { return observations_.dim(); }
  std::size_t num_classes() const { return class_names_.size(); }

  const ObservationSet& observations() const { return observations_; }
  std::span<const Embedding> embeddings() const { return observations_.embeddings(); }
  const Embedding& embedding(std::size_t i) const { return observations_.embedding(i); }

  std::size_t class_of(std::size_t i) const { return class_index_[i]; }
  std::span<const std::size_t> class_indices() const { return class_index_; }
  const std::string& class_name(std::size_t c) const { return class_names_[c]; }
  const std::vector<std::string>& class_names() const { return class_names_; }
  /// Throws DomainError for an unknown name.
  std::size_t class_id(const std::string& name) const;

  std::span<const std::size_t> members(std::size_t c) const { return members_[c]; }
  std::vector<Embedding> class_embeddings(std::size_t c) const;

  /// Empirical class fractions, indexed like class_names().
  std::vector<double> class_fractions() const;

 private:
  void index_classes(const std::vector<std::string>& labels);

  ObservationSet observations_;
  std::vector<std::size_t> class_index_;
  std::vector<std::string> class_names_;
  std::vector<std::vector<std::size_t>> members_;
};

}  // namespace obser
