#include "obser/io.hpp"

#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>
#include <system_error>

#include <json.hpp>

#include "obser/errors.hpp"

namespace obser::io {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::vector<double> parse_reals(const json& array, const std::string& path, std::size_t line,
                                const char* field) {
  if (!array.is_array()) throw FormatError(path, line, std::string(field) + " must be an array");
  std::vector<double> out;
  out.reserve(array.size());
  for (const auto& v : array) {
    if (!v.is_number()) throw FormatError(path, line, std::string(field) + " must hold numbers");
    out.push_back(v.get<double>());
  }
  return out;
}

std::optional<std::string> optional_string(const json& record, const char* key,
                                           const std::string& path, std::size_t line) {
  auto it = record.find(key);
  if (it == record.end() || it->is_null()) return std::nullopt;
  if (!it->is_string()) throw FormatError(path, line, std::string(key) + " must be a string or null");
  return it->get<std::string>();
}

std::string quoted(const std::string& s) { return json(s).dump(); }

void append_reals(std::string& out, std::span<const double> values) {
  out += '[';
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) out += ',';
    out += format_double(values[i]);
  }
  out += ']';
}

json read_json(const fs::path& path) {
  try {
    return json::parse(read_file(path));
  } catch (const json::parse_error& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

}  // namespace

std::string format_double(double value) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", value);
  return buf;
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file_atomic(const fs::path& path, const std::string& content) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write '" + tmp.string() + "'");
    out << content;
    out.flush();
    if (!out) throw Error("write failed for '" + tmp.string() + "'");
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) {
    fs::remove(tmp);
    throw Error("cannot rename into '" + path.string() + "': " + ec.message());
  }
}

ObservationSet load_embeddings(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open '" + path.string() + "'");
  const std::string name = path.string();

  ObservationSet set;
  std::set<std::string> seen;
  std::string text;
  std::size_t line = 0;
  while (std::getline(in, text)) {
    ++line;
    if (!text.empty() && text.back() == '\r') text.pop_back();
    if (text.find_first_not_of(" \t") == std::string::npos) continue;

    json record;
    try {
      record = json::parse(text);
    } catch (const json::parse_error&) {
      throw FormatError(name, line, "malformed JSON");
    }
    if (!record.is_object()) throw FormatError(name, line, "record must be a JSON object");
    auto id = record.find("id");
    if (id == record.end() || !id->is_string()) throw FormatError(name, line, "missing string id");
    auto vec = record.find("vec");
    if (vec == record.end()) throw FormatError(name, line, "missing vec");

    Observation obs;
    obs.id = id->get<std::string>();
    if (!seen.insert(obs.id).second) {
      throw DomainError(name + ":" + std::to_string(line) + ": duplicate id '" + obs.id + "'");
    }
    auto coords = parse_reals(*vec, name, line, "vec");
    if (coords.empty()) throw FormatError(name, line, "vec is empty");
    if (!set.empty() && coords.size() != set.dim()) throw DimensionMismatch(set.dim(), coords.size());
    try {
      obs.vec = Embedding::from_coords(std::move(coords));
    } catch (const DomainError& e) {
      throw DomainError(name + ":" + std::to_string(line) + ": " + e.what());
    }
    obs.label = optional_string(record, "label", name, line);
    obs.region = optional_string(record, "region", name, line);
    auto pos = record.find("pos");
    if (pos != record.end() && !pos->is_null()) {
      auto p = parse_reals(*pos, name, line, "pos");
      if (p.size() != 3) throw FormatError(name, line, "pos must have 3 entries");
      obs.pos = Position{p[0], p[1], p[2]};
    }
    set.add(std::move(obs));
  }
  if (set.empty()) throw EmptyInput("no records in '" + name + "'");
  return set;
}

LabeledSet load_labeled(const fs::path& path) { return LabeledSet(load_embeddings(path)); }

std::string to_jsonl(const ObservationSet& set) {
  std::string out;
  for (const auto& o : set.observations()) {
    out += "{\"id\":" + quoted(o.id);
    out += ",\"region\":" + (o.region ? quoted(*o.region) : std::string("null"));
    out += ",\"label\":" + (o.label ? quoted(*o.label) : std::string("null"));
    if (o.pos) {
      out += ",\"pos\":";
      append_reals(out, *o.pos);
    }
    out += ",\"vec\":";
    append_reals(out, o.vec.coords());
    out += "}\n";
  }
  return out;
}

void save_embeddings(const fs::path& path, const ObservationSet& set) {
  write_file_atomic(path, to_jsonl(set));
}

void save_regions(const fs::path& dir, const EpisodicMemory& regions,
                  const std::optional<std::map<std::string, std::vector<std::string>>>&
                      reachability) {
  fs::create_directories(dir);
  nlohmann::ordered_json manifest;
  manifest["version"] = kManifestVersion;
  manifest["regions"] = nlohmann::ordered_json::array();
  for (std::size_t i = 0; i < regions.size(); ++i) {
    const auto& entry = regions[i];
    char file[32];
    std::snprintf(file, sizeof file, "region_%04zu.jsonl", i);
    save_embeddings(dir / file, entry.observations);
    nlohmann::ordered_json item;
    item["region"] = entry.region;
    item["file"] = file;
    item["count"] = entry.observations.size();
    item["dim"] = entry.observations.dim();
    if (!entry.positions.empty()) item["positions"] = entry.positions;
    manifest["regions"].push_back(std::move(item));
  }
  if (reachability) manifest["reachability"] = *reachability;
  write_file_atomic(dir / "manifest.json", manifest.dump(2) + "\n");
}

namespace {

struct LoadedDir {
  EpisodicMemory regions;
  std::optional<std::map<std::string, std::vector<std::string>>> reachability;
};

LoadedDir load_dir(const fs::path& dir) {
  const fs::path manifest_path = dir / "manifest.json";
  if (!fs::exists(manifest_path)) throw Error("missing manifest '" + manifest_path.string() + "'");
  const json manifest = read_json(manifest_path);
  const std::string name = manifest_path.string();
  try {
    if (manifest.at("version").get<int>() != kManifestVersion) {
      throw FormatError(name + ": unsupported manifest version");
    }
    LoadedDir out;
    for (const auto& item : manifest.at("regions")) {
      MemoryEntry entry;
      entry.region = item.at("region").get<std::string>();
      entry.observations = load_embeddings(dir / item.at("file").get<std::string>());
      if (entry.observations.size() != item.at("count").get<std::size_t>()) {
        throw FormatError(name + ": count mismatch for region '" + entry.region + "'");
      }
      if (auto p = item.find("positions"); p != item.end()) {
        entry.positions = p->get<std::vector<Position>>();
      }
      out.regions.add(std::move(entry));
    }
    if (auto r = manifest.find("reachability"); r != manifest.end() && !r->is_null()) {
      out.reachability = r->get<std::map<std::string, std::vector<std::string>>>();
    }
    if (out.regions.empty()) throw EmptyInput("no regions in '" + name + "'");
    return out;
  } catch (const json::exception& e) {
    throw FormatError(name + ": " + e.what());
  }
}

}  // namespace

EpisodicMemory load_regions(const fs::path& dir) { return load_dir(dir).regions; }

Environment load_environment(const fs::path& dir) {
  LoadedDir loaded = load_dir(dir);
  Environment env{std::move(loaded.regions), std::move(loaded.reachability)};
  if (env.reachability) {
    for (const auto& [from, to] : *env.reachability) {
      if (!env.regions.find(from)) throw DomainError("reachability names unknown region '" + from + "'");
      for (const auto& r : to) {
        if (!env.regions.find(r)) throw DomainError("reachability names unknown region '" + r + "'");
      }
    }
  }
  return env;
}

}  // namespace obser::io
