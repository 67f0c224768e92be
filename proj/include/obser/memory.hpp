#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "obser/estimators.hpp"
#include "obser/kernel.hpp"

namespace obser {

/// One stored sub-environment: its observations and region id. Positions are
/// carried through but never interpreted.
struct MemoryEntry {
  ObservationSet observations;
  std::string region;
  std::vector<Position> positions;
};

/// Ordered collection of entries with unique region ids.
///
/// Not internally synchronized: callers may run any number of concurrent
/// readers, or a single writer, but not both.
class EpisodicMemory {
 public:
  EpisodicMemory() = default;
  explicit EpisodicMemory(std::vector<MemoryEntry> entries);

  /// Throws DomainError on a duplicate region and EmptyInput on no observations.
  void add(MemoryEntry entry);

  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }
  const MemoryEntry& operator[](std::size_t i) const { return entries_[i]; }
  const std::vector<MemoryEntry>& entries() const { return entries_; }
  std::optional<std::size_t> find(const std::string& region) const;

 private:
  std::vector<MemoryEntry> entries_;
};

/// The agent's environment: sub-environments plus optional reachability.
/// A region missing from the reachability map may reach every region.
struct Environment {
  EpisodicMemory regions;
  std::optional<std::map<std::string, std::vector<std::string>>> reachability;

  std::vector<std::size_t> candidates_for(const std::string& region) const;
};

enum class RecallMode {
  /// Density of the query mean direction.
  kMeanDirection,
  /// Mean of the per-query densities.
  kPerQueryAverage,
};

struct RecallResult {
  std::size_t index = 0;
  std::string region;
  double score = 0.0;
};

RecallResult recall(std::span<const Embedding> query, const EpisodicMemory& memory,
                    const KernelConfig& cfg, RecallMode mode = RecallMode::kMeanDirection);

struct RankedRegion {
  std::string region;
  std::size_t index = 0;  // position in the environment
  double kl = 0.0;
};

/// Reachable regions ordered by estimated KL from the entry, ascending; ties by
/// region id.
std::vector<RankedRegion> retrieve_subenv(const MemoryEntry& entry, const Environment& env,
                                          const KernelConfig& cfg, std::size_t top_k);

struct FoundObject {
  std::string region;
  std::string id;
  double belief = 0.0;
};

std::vector<FoundObject> find_object(const Embedding& query, const std::string& region,
                                     const Environment& env, const KernelConfig& cfg,
                                     std::size_t top_k);

struct ChainedResult {
  RecallResult recalled;
  std::vector<RankedRegion> regions;
  std::vector<FoundObject> objects;
};

/// recall -> retrieve_subenv (rooms_k) -> find_object pooled over those rooms.
/// The object step uses the query mean direction.
ChainedResult chained_inference(std::span<const Embedding> query, const EpisodicMemory& memory,
                                const Environment& env, const KernelConfig& cfg,
                                std::size_t rooms_k, std::size_t objects_k,
                                RecallMode mode = RecallMode::kMeanDirection);

struct Segment {
  std::size_t start = 0;
  std::size_t end = 0;  // exclusive
  std::size_t pivot = 0;
  friend bool operator==(const Segment&, const Segment&) = default;
};

/// Splits a waypoint sequence whenever the KL estimate from the current pivot
/// exceeds threshold (strictly).
std::vector<Segment> segment_trajectory(std::span<const ObservationSet> waypoints,
                                        double threshold, const KernelConfig& cfg);

}  // namespace obser
