#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "obser/eds.hpp"
#include "obser/errors.hpp"
#include "obser/estimators.hpp"
#include "obser/io.hpp"
#include "obser/memory.hpp"
#include "obser/reports.hpp"
#include "obser/synthenv.hpp"
#include "obser/toytrain.hpp"

namespace fs = std::filesystem;
using obser::report::Json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitBoundFailed = 1;
constexpr int kExitUsage = 2;


std::uint64_t effective_seed(std::uint64_t flag) {
  const char* env = std::getenv("OBSER_SEED");
  if (!env || !*env) return flag;
  char* end = nullptr;
  errno = 0;
  const unsigned long long v = std::strtoull(env, &end, 10);
  if (errno != 0 || *end != '\0' || env[0] == '-') {
    throw obser::DomainError(std::string("OBSER_SEED is not a nonnegative integer: '") + env + "'");
  }
  return v;
}

void emit(const std::string& content, const std::string& out) {
  if (out.empty() || out == "-") {
    std::cout << content;
  } else {
    obser::io::write_file_atomic(out, content);
  }
}

std::string extension(const std::string& path) { return fs::path(path).extension().string(); }

// ---- synth ----------------------------------------------------------------

obser::PrototypeLayout parse_layout(const std::string& s) {
  static const std::map<std::string, obser::PrototypeLayout> kNames = {
      {"auto", obser::PrototypeLayout::kAuto},
      {"orthonormal", obser::PrototypeLayout::kOrthonormal},
      {"orthoplex", obser::PrototypeLayout::kOrthoplex},
      {"simplex", obser::PrototypeLayout::kSimplex},
      {"random", obser::PrototypeLayout::kRandom}};
  auto it = kNames.find(s);
  if (it == kNames.end()) throw obser::DomainError("unknown layout '" + s + "'");
  return it->second;
}

obser::OccurrenceLaw parse_occurrence(const nlohmann::json& j) {
  if (j.is_string()) {
    if (j.get<std::string>() == "uniform") return obser::OccurrenceLaw::uniform();
    throw obser::DomainError("unknown occurrence law '" + j.get<std::string>() + "'");
  }
  if (j.contains("zipf")) return obser::OccurrenceLaw::zipf(j.at("zipf").get<double>());
  if (j.contains("weights")) {
    return obser::OccurrenceLaw::explicit_weights(j.at("weights").get<std::vector<double>>());
  }
  throw obser::DomainError("occurrence must be \"uniform\", {\"zipf\": a} or {\"weights\": [...]}");
}

void check_keys(const nlohmann::json& spec, const std::vector<std::string>& allowed) {
  for (const auto& [key, value] : spec.items()) {
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
      throw obser::DomainError("unknown spec key '" + key + "'");
    }
  }
}

int run_synth(const std::string& spec_path, std::uint64_t seed_flag, const std::string& out) {
  const std::uint64_t seed = effective_seed(seed_flag);
  nlohmann::json spec;
  try {
    spec = nlohmann::json::parse(obser::io::read_file(spec_path));
  } catch (const nlohmann::json::parse_error&) {
    throw obser::FormatError(spec_path + ": malformed JSON");
  }
  if (!spec.is_object()) throw obser::FormatError(spec_path + ": spec must be a JSON object");
  const fs::path dir(out);

  try {
    if (spec.contains("scenario")) {
      check_keys(spec, {"scenario", "dim", "kappa", "num_classes", "samples"});
      const auto name = spec.at("scenario").get<std::string>();
      const auto scenario = obser::parse_scenario(name);
      if (!scenario) throw obser::DomainError("unknown scenario '" + name + "'");
      obser::ScenarioOverrides overrides;
      if (spec.contains("num_classes")) overrides.num_classes = spec["num_classes"].get<std::size_t>();
      if (spec.contains("samples")) overrides.samples = spec["samples"].get<std::size_t>();
      const auto fx = obser::make_scenario(*scenario, spec.value("dim", std::size_t{16}),
                                           spec.value("kappa", 200.0), seed, overrides);
      obser::io::save_embeddings(dir / "mu.jsonl", fx.mu.observations());
      obser::io::save_embeddings(dir / "nu.jsonl", fx.nu.observations());
      Json truth;
      truth["scenario"] = obser::scenario_name(*scenario);
      truth["exact_kl"] = fx.exact_kl;
      truth["mu"] = obser::report::ground_truth_json(fx.mu_truth);
      truth["nu"] = obser::report::ground_truth_json(fx.nu_truth);
      obser::io::write_file_atomic(dir / "ground_truth.json", obser::report::dump(truth));
      return kExitOk;
    }

    check_keys(spec, {"dim", "num_classes", "kappa", "samples", "occurrence", "layout",
                      "per_class_kappa"});
    obser::SyntheticEnvSpec env;
    env.dim = spec.value("dim", env.dim);
    env.num_classes = spec.value("num_classes", env.num_classes);
    env.kappa = spec.value("kappa", env.kappa);
    env.samples_per_env = spec.value("samples", env.samples_per_env);
    if (spec.contains("occurrence")) env.occurrence = parse_occurrence(spec["occurrence"]);
    if (spec.contains("layout")) env.layout = parse_layout(spec["layout"].get<std::string>());
    if (spec.contains("per_class_kappa")) {
      env.per_class_kappa = spec["per_class_kappa"].get<std::vector<double>>();
    }
    const auto [data, truth] = obser::sample_environment(env, seed);
    obser::io::save_embeddings(dir / "data.jsonl", data.observations());
    obser::io::write_file_atomic(dir / "ground_truth.json",
                                 obser::report::dump(obser::report::ground_truth_json(truth)));
    return kExitOk;
  } catch (const nlohmann::json::exception& e) {
    throw obser::FormatError(spec_path + ": " + e.what());
  }
}

// ---- eds ------------------------------------------------------------------

int run_eds(const std::string& data_path, double tau, double trim, const std::string& out,
            const std::vector<double>& sweep) {
  const auto data = obser::io::load_labeled(data_path);
  std::vector<double> taus = sweep.empty() ? std::vector<double>{tau} : sweep;
  std::vector<obser::EDSReport> reports;
  for (double t : taus) reports.push_back(obser::measure_eds(data, obser::KernelConfig(t), trim));
  if (data.num_classes() == 1) {
    std::cerr << "warning: single class in '" << data_path << "'; epsilon is undefined\n";
  }

  const bool csv = extension(out) == ".csv";
  std::string content;
  if (csv) {
    content = obser::report::eds_csv_header() + "\n";
    for (const auto& r : reports) content += obser::report::eds_csv_row(r) + "\n";
  } else if (sweep.empty()) {
    content = obser::report::dump(obser::report::eds_json(reports.front()));
  } else {
    Json rows = Json::array();
    for (const auto& r : reports) rows.push_back(obser::report::eds_json(r));
    content = obser::report::dump(rows);
  }
  emit(content, out);
  return kExitOk;
}

// ---- occurrence -----------------------------------------------------------

int run_occurrence(const std::string& query_path, const std::string& env_path, double tau,
                   double multiplier, bool direct, const std::string& out) {
  const auto query = obser::io::load_embeddings(query_path);
  const auto env = obser::io::load_embeddings(env_path);
  const obser::KernelConfig cfg(tau);
  const auto estimate =
      direct ? obser::estimate_occurrence_direct(query.embeddings(), env, cfg)
             : obser::estimate_occurrence(query.embeddings(), env, cfg, multiplier);
  emit(obser::report::dump(obser::report::occurrence_json(estimate)), out);
  return kExitOk;
}

// ---- kldiv ----------------------------------------------------------------

int run_kldiv(const std::string& mu_path, const std::string& nu_path, double tau,
              bool check_bounds, bool leave_one_out, const std::string& out) {
  const auto mu = obser::io::load_embeddings(mu_path);
  const auto nu = obser::io::load_embeddings(nu_path);
  const obser::KernelConfig cfg(tau);
  const auto estimate = obser::estimate_kl(
      mu, nu, cfg, leave_one_out ? obser::SelfPairs::kExclude : obser::SelfPairs::kInclude);
  Json result = obser::report::kl_json(estimate);

  int code = kExitOk;
  const bool labeled = mu.fully_labeled() && nu.fully_labeled();
  if (check_bounds && !labeled) {
    throw obser::DomainError("--check-bounds needs labels on every record of both files");
  }
  if (labeled) {
    const obser::LabeledSet lmu(mu);
    const obser::LabeledSet lnu(nu);
    if (lmu.class_names() == lnu.class_names()) {
      const auto check = obser::theorem3_check(lmu, lnu, cfg);
      result["theorem3"] = obser::report::theorem3_json(check);
      if (check_bounds && !check.holds) code = kExitBoundFailed;
    } else if (check_bounds) {
      throw obser::DomainError("--check-bounds needs the same class set in both files");
    }
  }
  emit(obser::report::dump(result), out);
  if (code == kExitBoundFailed) std::cerr << "bound check failed\n";
  return code;
}

// ---- jsd-matrix -----------------------------------------------------------

int run_jsd(const std::string& envs_dir, double tau, const std::string& out) {
  const auto regions = obser::io::load_regions(envs_dir);
  const obser::KernelConfig cfg(tau);
  const std::size_t n = regions.size();
  obser::DenseMatrix m(n, n);
  std::vector<std::string> labels;
  for (std::size_t i = 0; i < n; ++i) {
    labels.push_back(regions[i].region);
    for (std::size_t j = i + 1; j < n; ++j) {
      const double v = obser::jensen_shannon(regions[i].observations, regions[j].observations, cfg);
      m(i, j) = v;
      m(j, i) = v;
    }
  }
  emit(obser::report::matrix_csv(labels, m), out);
  return kExitOk;
}

// ---- retrieve -------------------------------------------------------------

int run_retrieve(const std::string& query_path, const std::string& memory_dir,
                 const std::string& env_dir, double tau, std::size_t rooms_k,
                 std::size_t objects_k, const std::string& recall_mode, const std::string& out) {
  const auto query = obser::io::load_embeddings(query_path);
  const auto memory = obser::io::load_regions(memory_dir);
  const auto env = obser::io::load_environment(env_dir);
  const auto mode = recall_mode == "average" ? obser::RecallMode::kPerQueryAverage
                                             : obser::RecallMode::kMeanDirection;
  const auto result = obser::chained_inference(query.embeddings(), memory, env,
                                               obser::KernelConfig(tau), rooms_k, objects_k, mode);
  emit(obser::report::dump(obser::report::chained_json(result)), out);
  return kExitOk;
}

// ---- segment --------------------------------------------------------------

int run_segment(const std::string& dir, double threshold, double tau, const std::string& out) {
  if (!(threshold >= 0.0)) throw obser::DomainError("threshold must be nonnegative");
  const auto waypoints = obser::io::load_regions(dir);
  std::vector<obser::ObservationSet> sets;
  Json ids = Json::array();
  for (const auto& e : waypoints.entries()) {
    sets.push_back(e.observations);
    ids.push_back(e.region);
  }
  const auto segments = obser::segment_trajectory(sets, threshold, obser::KernelConfig(tau));
  Json result = obser::report::segments_json(segments);
  result["threshold"] = threshold;
  result["tau"] = tau;
  result["waypoints"] = std::move(ids);
  emit(obser::report::dump(result), out);
  return kExitOk;
}

// ---- train-toy ------------------------------------------------------------

struct ToyArgs {
  std::string kind = "moons";
  std::string head = "sphere";
  std::size_t n = 400;
  double noise = 0.1;
  obser::toy::TrainOptions options;
  std::uint64_t seed = 0;
  std::string out;
};

int run_train(ToyArgs args) {
  using namespace obser::toy;
  args.options.seed = effective_seed(args.seed);
  const ToyKind kind = args.kind == "xor" ? ToyKind::kXor : ToyKind::kMoons;
  const Head head = args.head == "euclid" ? Head::kEuclidean : Head::kHypersphere;
  // Data seed is offset from the init seed so the two streams never coincide.
  const auto data = generate_toy(kind, args.n, args.noise, args.options.seed + 100);
  const auto [net, trace] = obser::toy::train(data, head, args.options);

  const fs::path dir(args.out);
  obser::io::write_file_atomic(dir / "trace.csv", obser::report::trace_csv(trace));
  obser::io::write_file_atomic(dir / "weights.json",
                               obser::report::dump(obser::report::weights_json(net)));
  obser::io::write_file_atomic(dir / "eds.json",
                               obser::report::dump(obser::report::eds_json(trace.final_report)));
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Kernel-density estimators over unit-norm embeddings"};
  app.name("obser");
  app.require_subcommand(1);

  auto positive = CLI::PositiveNumber;

  // synth
  std::string synth_spec, synth_out;
  std::uint64_t synth_seed = 0;
  auto* synth = app.add_subcommand("synth", "Generate a synthetic labeled environment");
  synth->add_option("--spec", synth_spec, "Spec JSON")->required()->check(CLI::ExistingFile);
  synth->add_option("--seed", synth_seed, "RNG seed (OBSER_SEED overrides)");
  synth->add_option("--out", synth_out, "Output directory")->required();

  // eds
  std::string eds_data, eds_out;
  double eds_tau = 0.1, eds_trim = obser::kDefaultTrimFraction;
  std::vector<double> eds_sweep;
  auto* eds = app.add_subcommand("eds", "Measure (epsilon, delta) separability");
  eds->add_option("--data", eds_data, "Labeled JSONL")->required()->check(CLI::ExistingFile);
  eds->add_option("--tau", eds_tau, "Kernel temperature");
  eds->add_option("--trim", eds_trim, "Trim fraction in [0, 0.2]");
  eds->add_option("--out", eds_out, "Output .csv or .json (stdout JSON if omitted)");
  eds->add_option("--sweep-tau", eds_sweep, "Comma-separated temperatures")->delimiter(',');

  // occurrence
  std::string occ_query, occ_env, occ_out;
  double occ_tau = 0.2, occ_mult = obser::kDefaultOccurrenceMultiplier;
  bool occ_direct = false;
  auto* occ = app.add_subcommand("occurrence", "Estimate object occurrence");
  occ->add_option("--query", occ_query, "Query JSONL")->required()->check(CLI::ExistingFile);
  occ->add_option("--env", occ_env, "Environment JSONL")->required()->check(CLI::ExistingFile);
  occ->add_option("--tau", occ_tau, "Kernel temperature");
  occ->add_option("--multiplier", occ_mult, "Adaptive tolerance multiplier");
  occ->add_flag("--direct", occ_direct, "Use the direct kernel-density estimator");
  occ->add_option("--out", occ_out, "Output JSON (stdout if omitted)");

  // kldiv
  std::string kl_mu, kl_nu, kl_out;
  double kl_tau = 0.15;
  bool kl_check = false, kl_loo = false;
  auto* kl = app.add_subcommand("kldiv", "Estimate KL(mu || nu) between two sample sets");
  kl->add_option("--mu", kl_mu, "JSONL for mu")->required()->check(CLI::ExistingFile);
  kl->add_option("--nu", kl_nu, "JSONL for nu")->required()->check(CLI::ExistingFile);
  kl->add_option("--tau", kl_tau, "Kernel temperature");
  kl->add_flag("--check-bounds", kl_check, "Exit 1 when the estimate leaves its bound");
  kl->add_flag("--leave-one-out", kl_loo, "Drop self-pairs from Phi(x; mu)");
  kl->add_option("--out", kl_out, "Output JSON (stdout if omitted)");

  // jsd-matrix
  std::string jsd_dir, jsd_out;
  double jsd_tau = 0.1;
  auto* jsd = app.add_subcommand("jsd-matrix", "Pairwise Jensen-Shannon matrix of regions");
  jsd->add_option("--envs", jsd_dir, "Region directory")->required()->check(CLI::ExistingDirectory);
  jsd->add_option("--tau", jsd_tau, "Kernel temperature");
  jsd->add_option("--out", jsd_out, "Output CSV (stdout if omitted)");

  // retrieve
  std::string ret_query, ret_memory, ret_env, ret_out, ret_mode = "mean";
  double ret_tau = 0.1;
  std::size_t rooms_k = 1, objects_k = 1;
  auto* ret = app.add_subcommand("retrieve", "Chained inference: recall, rooms, objects");
  ret->add_option("--query", ret_query, "Query JSONL")->required()->check(CLI::ExistingFile);
  ret->add_option("--memory", ret_memory, "Memory directory")->required()->check(CLI::ExistingDirectory);
  ret->add_option("--env", ret_env, "Environment directory")->required()->check(CLI::ExistingDirectory);
  ret->add_option("--tau", ret_tau, "Kernel temperature");
  ret->add_option("--rooms-k", rooms_k, "Rooms to search")->check(positive);
  ret->add_option("--objects-k", objects_k, "Objects to return")->check(positive);
  ret->add_option("--recall-mode", ret_mode, "mean or average")->check(CLI::IsMember({"mean", "average"}));
  ret->add_option("--out", ret_out, "Output JSON (stdout if omitted)");

  // segment
  std::string seg_dir, seg_out;
  double seg_threshold = 0.0, seg_tau = 0.1;
  auto* seg = app.add_subcommand("segment", "Split a trajectory where the KL estimate jumps");
  seg->add_option("--trajectory", seg_dir, "Waypoint directory")->required()->check(CLI::ExistingDirectory);
  seg->add_option("--threshold", seg_threshold, "KL threshold")->required();
  seg->add_option("--tau", seg_tau, "Kernel temperature");
  seg->add_option("--out", seg_out, "Output JSON (stdout if omitted)");

  // train-toy
  ToyArgs toy;
  auto* tt = app.add_subcommand("train-toy", "Train the toy MLP on moons or xor");
  tt->add_option("--kind", toy.kind, "moons or xor")->check(CLI::IsMember({"moons", "xor"}));
  tt->add_option("--head", toy.head, "sphere or euclid")->check(CLI::IsMember({"sphere", "euclid"}));
  tt->add_option("--epochs", toy.options.epochs, "Epochs")->check(positive);
  tt->add_option("--seed", toy.seed, "RNG seed (OBSER_SEED overrides)");
  tt->add_option("--n", toy.n, "Dataset size");
  tt->add_option("--noise", toy.noise, "Gaussian noise on the points");
  tt->add_option("--lr", toy.options.learning_rate, "SGD learning rate")->check(positive);
  tt->add_option("--batch", toy.options.batch_size, "Batch size");
  tt->add_option("--train-tau", toy.options.train_tau, "Training temperature");
  tt->add_option("--eval-tau", toy.options.eval_tau, "EDS temperature")->check(positive);
  tt->add_option("--trim", toy.options.trim_fraction, "EDS trim fraction");
  tt->add_option("--out", toy.out, "Output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    std::cerr << "obser: " << e.what() << "\n";
    return kExitUsage;
  }

  try {
    if (synth->parsed()) return run_synth(synth_spec, synth_seed, synth_out);
    if (eds->parsed()) return run_eds(eds_data, eds_tau, eds_trim, eds_out, eds_sweep);
    if (occ->parsed()) return run_occurrence(occ_query, occ_env, occ_tau, occ_mult, occ_direct, occ_out);
    if (kl->parsed()) return run_kldiv(kl_mu, kl_nu, kl_tau, kl_check, kl_loo, kl_out);
    if (jsd->parsed()) return run_jsd(jsd_dir, jsd_tau, jsd_out);
    if (ret->parsed()) {
      return run_retrieve(ret_query, ret_memory, ret_env, ret_tau, rooms_k, objects_k, ret_mode, ret_out);
    }
    if (seg->parsed()) return run_segment(seg_dir, seg_threshold, seg_tau, seg_out);
    if (tt->parsed()) return run_train(toy);
  } catch (const std::exception& e) {
    std::cerr << "obser: " << e.what() << "\n";
    return kExitUsage;
  }
  return kExitUsage;
}
