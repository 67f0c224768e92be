#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "obser/embedding.hpp"
#include "obser/labeled_set.hpp"
#include "obser/memory.hpp"

namespace obser::io {

/// Reads an embedding JSONL file. One object per line:
///   {"id": str, "region": str|null, "label": str|null, "pos": [x,y,z]?, "vec": [...]}
/// Blank lines are skipped. Throws FormatError (with line number) on malformed
/// lines, DimensionMismatch on inconsistent lengths, DomainError on norm
/// deviation or duplicate ids, and EmptyInput on a file without records.
ObservationSet load_embeddings(const std::filesystem::path& path);

/// load_embeddings followed by the label requirement.
LabeledSet load_labeled(const std::filesystem::path& path);

/// Serializes one record per line with 17 significant digits.
std::string to_jsonl(const ObservationSet& set);
void save_embeddings(const std::filesystem::path& path, const ObservationSet& set);

/// Writes content to a sibling temporary file and renames it into place.
void write_file_atomic(const std::filesystem::path& path, const std::string& content);
std::string read_file(const std::filesystem::path& path);

/// "%.17g" rendering used by every CSV writer.
std::string format_double(double value);

inline constexpr int kManifestVersion = 1;

/// A directory of sub-environments: manifest.json plus one JSONL per region.
/// The manifest lists regions in creation order with their file, count and
/// dimension, and optionally a reachability map.
void save_regions(const std::filesystem::path& dir, const EpisodicMemory& regions,
                  const std::optional<std::map<std::string, std::vector<std::string>>>&
                      reachability = std::nullopt);
EpisodicMemory load_regions(const std::filesystem::path& dir);
Environment load_environment(const std::filesystem::path& dir);

}  // namespace obser::io
