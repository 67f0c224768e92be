#include "obser/labeled_set.hpp"

#include <algorithm>
#include <map>

#include "obser/errors.hpp"

namespace obser {

LabeledSet::LabeledSet(ObservationSet observations) : observations_(std::move(observations)) {
  std::vector<std::string> labels;
  labels.reserve(observations_.size());
  for (const auto& o : observations_.observations()) {
    if (!o.label) throw DomainError("observation '" + o.id + "' has no label");
    labels.push_back(*o.label);
  }
  index_classes(labels);
}

LabeledSet::LabeledSet(std::vector<Embedding> embeddings, std::vector<std::string> labels,
                       const std::string& id_prefix) {
  if (embeddings.size() != labels.size()) {
    throw DomainError("embedding and label counts differ");
  }
  for (std::size_t i = 0; i < embeddings.size(); ++i) {
    observations_.add(
        Observation{make_id(id_prefix, i), std::move(embeddings[i]), labels[i], {}, {}});
  }
  index_classes(labels);
}

void LabeledSet::index_classes(const std::vector<std::string>& labels) {
  class_names_ = labels;
  std::sort(class_names_.begin(), class_names_.end());
  class_names_.erase(std::unique(class_names_.begin(), class_names_.end()), class_names_.end());
  std::map<std::string, std::size_t> lookup;
  for (std::size_t c = 0; c < class_names_.size(); ++c) lookup[class_names_[c]] = c;
  members_.assign(class_names_.size(), {});
  class_index_.resize(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) {
    class_index_[i] = lookup[labels[i]];
    members_[class_index_[i]].push_back(i);
  }
}

std::size_t LabeledSet::class_id(const std::string& name) const {
  auto it = std::lower_bound(class_names_.begin(), class_names_.end(), name);
  if (it == class_names_.end() || *it != name) throw DomainError("unknown class '" + name + "'");
  return static_cast<std::size_t>(it - class_names_.begin());
}

std::vector<Embedding> LabeledSet::class_embeddings(std::size_t c) const {
  std::vector<Embedding> out;
  out.reserve(members_[c].size());
  for (std::size_t i : members_[c]) out.push_back(embedding(i));
  return out;
}

std::vector<double> LabeledSet::class_fractions() const {
  std::vector<double> w(class_names_.size());
  for (std::size_t c = 0; c < w.size(); ++c) {
    w[c] = static_cast<double>(members_[c].size()) / static_cast<double>(size());
  }
  return w;
}

}  // namespace obser
