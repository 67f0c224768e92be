#pragma once

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

// Golden CLI pipeline shared by test_cli and the acceptance binary. Every
// command writes into a work directory; the returned files are compared
// byte for byte against tests/golden/expected.
namespace golden {

namespace fs = std::filesystem;

struct Step {
  std::string args;
  std::string stdout_name;  // empty when the command writes with --out
};

inline std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// {in} and {w} are replaced by the input and work directories.
inline std::vector<Step> steps() {
  return {
      {"synth --spec {in}/env_spec.json --seed 3 --out {w}/env", ""},
      {"synth --spec {in}/scenario_spec.json --seed 4 --out {w}/s2", ""},
      {"eds --data {w}/env/data.jsonl --sweep-tau 0.1,0.2 --out {w}/eds.csv", ""},
      {"eds --data {w}/env/data.jsonl --tau 0.2 --trim 0 --out {w}/eds.json", ""},
      {"kldiv --mu {w}/s2/mu.jsonl --nu {w}/s2/nu.jsonl --tau 0.15 --check-bounds --out {w}/kl.json", ""},
      {"occurrence --query {w}/s2/mu.jsonl --env {w}/s2/nu.jsonl --tau 0.2", "occurrence.json"},
      {"jsd-matrix --envs {in}/rooms --tau 0.1 --out {w}/jsd.csv", ""},
      {"retrieve --query {in}/query.jsonl --memory {in}/rooms --env {in}/rooms --tau 0.1 --rooms-k 2 "
       "--objects-k 3",
       "retrieve.json"},
      {"segment --trajectory {in}/rooms --threshold 0.5 --tau 0.1", "segment.json"},
      {"train-toy --kind moons --epochs 4 --n 60 --batch 16 --seed 2 --out {w}/toy", ""},
  };
}

inline std::vector<std::string> outputs() {
  return {"env/data.jsonl", "env/ground_truth.json", "s2/mu.jsonl",   "s2/nu.jsonl",
          "s2/ground_truth.json", "eds.csv",         "eds.json",      "kl.json",
          "occurrence.json", "jsd.csv",              "retrieve.json", "segment.json",
          "toy/trace.csv",   "toy/weights.json",     "toy/eds.json"};
}

inline std::string substitute(std::string s, const std::string& key, const std::string& value) {
  for (std::size_t p = s.find(key); p != std::string::npos; p = s.find(key, p + value.size())) {
    s.replace(p, key.size(), value);
  }
  return s;
}

// Runs every step; returns an error description or "" on success.
inline std::string run_pipeline(const std::string& cli, const fs::path& inputs, const fs::path& work) {
  fs::remove_all(work);
  fs::create_directories(work);
  for (const auto& step : steps()) {
    std::string args = substitute(substitute(step.args, "{in}", inputs.string()), "{w}", work.string());
    std::string cmd = "env -u OBSER_SEED '" + cli + "' " + args;
    if (!step.stdout_name.empty()) cmd += " > '" + (work / step.stdout_name).string() + "'";
    cmd += " 2> '" + (work / "stderr.txt").string() + "'";
    const int status = std::system(cmd.c_str());
    if (!WIFEXITED(status) || WEXITSTATUS(status) != 0) {
      return "command failed: " + args + ": " + slurp(work / "stderr.txt");
    }
  }
  return "";
}

// Compares two runs with each other and with the expected files. When
// update is set the expected files are rewritten from the first run.
inline std::vector<std::string> compare(const fs::path& first, const fs::path& second,
                                        const fs::path& expected, bool update) {
  std::vector<std::string> problems;
  for (const auto& name : outputs()) {
    const std::string a = slurp(first / name);
    if (a.empty()) problems.push_back(name + ": missing or empty");
    if (a != slurp(second / name)) problems.push_back(name + ": differs between runs");
    const fs::path gold = expected / name;
    if (update) {
      fs::create_directories(gold.parent_path());
      std::ofstream(gold, std::ios::binary) << a;
    } else if (!fs::exists(gold)) {
      problems.push_back(name + ": no expected file");
    } else if (a != slurp(gold)) {
      problems.push_back(name + ": differs from expected");
    }
  }
  return problems;
}

}  // namespace golden
