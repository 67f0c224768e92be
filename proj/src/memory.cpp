#include "obser/memory.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "obser/errors.hpp"

namespace obser {

EpisodicMemory::EpisodicMemory(std::vector<MemoryEntry> entries) {
  for (auto& e : entries) add(std::move(e));
}

void EpisodicMemory::add(MemoryEntry entry) {
  if (entry.observations.empty()) {
    throw EmptyInput("memory entry '" + entry.region + "' has no observations");
  }
  if (find(entry.region)) throw DomainError("duplicate region id '" + entry.region + "'");
  if (!entries_.empty() && entries_.front().observations.dim() != entry.observations.dim()) {
    throw DimensionMismatch(entries_.front().observations.dim(), entry.observations.dim());
  }
  entries_.push_back(std::move(entry));
}

std::optional<std::size_t> EpisodicMemory::find(const std::string& region) const {
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    if (entries_[i].region == region) return i;
  }
  return std::nullopt;
}

std::vector<std::size_t> Environment::candidates_for(const std::string& region) const {
  std::vector<std::size_t> out;
  if (reachability) {
    auto it = reachability->find(region);
    if (it != reachability->end()) {
      for (const auto& r : it->second) {
        auto idx = regions.find(r);
        if (!idx) throw DomainError("reachability names unknown region '" + r + "'");
        out.push_back(*idx);
      }
      return out;
    }
  }
  for (std::size_t i = 0; i < regions.size(); ++i) out.push_back(i);
  return out;
}

RecallResult recall(std::span<const Embedding> query, const EpisodicMemory& memory,
                    const KernelConfig& cfg, RecallMode mode) {
  if (memory.empty()) throw EmptyInput("episodic memory is empty");
  if (query.empty()) throw EmptyInput("recall needs at least one query");

  std::optional<Embedding> mean;
  if (mode == RecallMode::kMeanDirection) mean = mean_direction(query);

  RecallResult best;
  double best_log = -std::numeric_limits<double>::infinity();
  std::vector<double> per_query(query.size());
  for (std::size_t m = 0; m < memory.size(); ++m) {
    const auto samples = memory[m].observations.embeddings();
    double score;
    if (mean) {
      score = log_kernel_density(*mean, samples, cfg);
    } else {
      for (std::size_t q = 0; q < query.size(); ++q) {
        per_query[q] = log_kernel_density(query[q], samples, cfg);
      }
      score = numeric::log_sum_exp(per_query) - std::log(double(query.size()));
    }
    if (m == 0 || score > best_log) {
      best_log = score;
      best.index = m;
    }
  }
  best.region = memory[best.index].region;
  best.score = std::exp(best_log);
  return best;
}

std::vector<RankedRegion> retrieve_subenv(const MemoryEntry& entry, const Environment& env,
                                          const KernelConfig& cfg, std::size_t top_k) {
  if (top_k == 0) throw DomainError("top_k must be positive");
  const auto candidates = env.candidates_for(entry.region);
  if (candidates.empty()) throw EmptyInput("no candidate regions reachable from '" + entry.region + "'");

  std::vector<RankedRegion> ranked;
  ranked.reserve(candidates.size());
  for (std::size_t idx : candidates) {
    const auto& region = env.regions[idx];
    ranked.push_back(
        {region.region, idx, estimate_kl(entry.observations, region.observations, cfg).value});
  }
  std::sort(ranked.begin(), ranked.end(), [](const RankedRegion& a, const RankedRegion& b) {
    if (a.kl != b.kl) return a.kl < b.kl;
    return a.region < b.region;
  });
  if (ranked.size() > top_k) ranked.resize(top_k);
  return ranked;
}

std::vector<FoundObject> find_object(const Embedding& query, const std::string& region,
                                     const Environment& env, const KernelConfig& cfg,
                                     std::size_t top_k) {
  if (top_k == 0) throw DomainError("top_k must be positive");
  const auto idx = env.regions.find(region);
  if (!idx) throw DomainError("unknown region '" + region + "'");
  const auto& obs = env.regions[*idx].observations;
  const auto hits = retrieve_object(query, obs, cfg, std::min(top_k, obs.size()));
  std::vector<FoundObject> out;
  out.reserve(hits.size());
  for (const auto& h : hits) out.push_back({region, h.id, h.belief});
  return out;
}

ChainedResult chained_inference(std::span<const Embedding> query, const EpisodicMemory& memory,
                                const Environment& env, const KernelConfig& cfg,
                                std::size_t rooms_k, std::size_t objects_k, RecallMode mode) {
  if (objects_k == 0) throw DomainError("objects_k must be positive");
  ChainedResult result;
  result.recalled = recall(query, memory, cfg, mode);
  result.regions = retrieve_subenv(memory[result.recalled.index], env, cfg, rooms_k);

  const Embedding mean = mean_direction(query);
  for (const auto& r : result.regions) {
    auto found = find_object(mean, r.region, env, cfg, objects_k);
    result.objects.insert(result.objects.end(), found.begin(), found.end());
  }
  std::sort(result.objects.begin(), result.objects.end(),
            [](const FoundObject& a, const FoundObject& b) {
              if (a.belief != b.belief) return a.belief > b.belief;
              if (a.region != b.region) return a.region < b.region;
              return a.id < b.id;
            });
  if (result.objects.size() > objects_k) result.objects.resize(objects_k);
  return result;
}

std::vector<Segment> segment_trajectory(std::span<const ObservationSet> waypoints,
                                        double threshold, const KernelConfig& cfg) {
  if (waypoints.empty()) throw EmptyInput("trajectory has no waypoints");
  if (!(threshold >= 0.0)) throw DomainError("segmentation threshold must be nonnegative");
  for (std::size_t w = 0; w < waypoints.size(); ++w) {
    if (waypoints[w].empty()) {
      throw EmptyInput("waypoint " + std::to_string(w) + " has no observations");
    }
  }

  std::vector<Segment> segments;
  std::size_t start = 0;
  std::size_t pivot = 0;
  for (std::size_t w = 1; w < waypoints.size(); ++w) {
    const double kl = estimate_kl(waypoints[pivot], waypoints[w], cfg).value;
    if (kl > threshold) {
      segments.push_back({start, w, pivot});
      start = w;
      pivot = w;
    }
  }
  segments.push_back({start, waypoints.size(), pivot});
  return segments;
}

}  // namespace obser
