#include "obser/reports.hpp"

#include <cmath>

#include "obser/io.hpp"

namespace obser::report {

namespace {

Json number(double v) {
  if (std::isfinite(v)) return v;
  if (std::isnan(v)) return "nan";
  return v > 0 ? "inf" : "-inf";
}

Json optional_number(const std::optional<double>& v) { return v ? number(*v) : Json(nullptr); }

Json map_json(const std::map<std::string, double>& m) {
  Json out = Json::object();
  for (const auto& [k, v] : m) out[k] = number(v);
  return out;
}

Json coords_json(const Embedding& e) {
  Json out = Json::array();
  for (double x : e.coords()) out.push_back(x);
  return out;
}

std::string csv_cell(const std::optional<double>& v) { return v ? io::format_double(*v) : ""; }

const char* mode_name(OccurrenceMode mode) {
  return mode == OccurrenceMode::kAdaptive ? "adaptive" : "direct";
}

}  // namespace

std::string eds_csv_header() { return "tau,trim,delta,epsilon,delta_worst,epsilon_worst,k,dH,num_classes"; }

std::string eds_csv_row(const EDSReport& r) {
  std::optional<double> dh;
  if (r.k && *r.k >= 1.0) dh = theorem1_bound(*r.k, r.num_classes);
  return io::format_double(r.tau) + "," + io::format_double(r.trim_fraction) + "," +
         io::format_double(r.delta) + "," + csv_cell(r.epsilon) + "," +
         io::format_double(r.delta_worst) + "," + csv_cell(r.epsilon_worst) + "," +
         csv_cell(r.k) + "," + csv_cell(dh) + "," + std::to_string(r.num_classes);
}

Json eds_json(const EDSReport& r) {
  Json out;
  out["tau"] = r.tau;
  out["trim"] = r.trim_fraction;
  out["delta"] = number(r.delta);
  out["epsilon"] = optional_number(r.epsilon);
  out["delta_worst"] = number(r.delta_worst);
  out["epsilon_worst"] = optional_number(r.epsilon_worst);
  out["cross_min"] = optional_number(r.cross_min);
  out["k"] = optional_number(r.k);
  if (r.k && *r.k >= 1.0) {
    out["dH"] = number(theorem1_bound(*r.k, r.num_classes));
  } else {
    out["dH"] = nullptr;
  }
  out["num_classes"] = r.num_classes;
  out["num_samples"] = r.num_samples;
  out["ordering_violated"] = r.ordering_violated;
  out["singleton_classes"] = r.singleton_classes;
  out["per_class_delta"] = map_json(r.per_class_delta);
  out["per_class_epsilon"] = map_json(r.per_class_epsilon);
  return out;
}

Json occurrence_json(const OccurrenceEstimate& e) {
  Json out;
  out["value"] = e.value;
  out["tolerance"] = optional_number(e.tolerance);
  out["n"] = e.n;
  out["tau"] = e.tau;
  out["mode"] = mode_name(e.mode);
  return out;
}

Json kl_json(const KLEstimate& e) {
  Json out;
  out["value"] = number(e.value);
  out["n_mu"] = e.n_mu;
  out["n_nu"] = e.n_nu;
  out["tau"] = e.tau;
  return out;
}

Json theorem3_json(const Theorem3Check& c) {
  Json out;
  out["estimate"] = number(c.estimate);
  out["center"] = number(c.center);
  out["slack"] = number(c.slack);
  out["delta"] = number(c.bounds.delta);
  out["epsilon"] = number(c.bounds.epsilon);
  out["holds"] = c.holds;
  return out;
}

Json chained_json(const ChainedResult& r) {
  Json out;
  out["recall"] = {{"region", r.recalled.region},
                   {"index", r.recalled.index},
                   {"score", number(r.recalled.score)}};
  out["regions"] = Json::array();
  for (const auto& room : r.regions) {
    out["regions"].push_back({{"region", room.region}, {"kl", number(room.kl)}});
  }
  out["objects"] = Json::array();
  for (const auto& o : r.objects) {
    out["objects"].push_back({{"region", o.region}, {"id", o.id}, {"belief", number(o.belief)}});
  }
  return out;
}

Json segments_json(const std::vector<Segment>& segments) {
  Json out;
  out["num_segments"] = segments.size();
  out["segments"] = Json::array();
  for (const auto& s : segments) {
    out["segments"].push_back({{"start", s.start}, {"end", s.end}, {"pivot", s.pivot}});
  }
  return out;
}

Json ground_truth_json(const GroundTruth& t) {
  Json out;
  out["omega"] = t.omega;
  out["realized_fractions"] = t.realized_fractions;
  out["kappa"] = number(t.kappa);
  out["seed"] = t.seed;
  out["prototypes"] = Json::array();
  for (const auto& p : t.prototypes) out["prototypes"].push_back(coords_json(p));
  return out;
}

std::string trace_csv(const toy::TrainTrace& trace) {
  std::string out = "epoch,loss,epsilon,delta,k\n";
  for (const auto& e : trace.epochs) {
    out += std::to_string(e.epoch) + "," + io::format_double(e.loss) + "," +
           io::format_double(e.epsilon) + "," + io::format_double(e.delta) + "," +
           io::format_double(e.k) + "\n";
  }
  return out;
}

Json weights_json(const toy::ToyNet& net) {
  Json out;
  out["version"] = 1;
  out["head"] = net.head() == toy::Head::kHypersphere ? "sphere" : "euclid";
  out["widths"] = toy::ToyNet::kWidths;
  out["layers"] = Json::array();
  const auto params = net.parameters();
  for (std::size_t l = 0; l + 1 < toy::ToyNet::kWidths.size(); ++l) {
    const std::size_t in = toy::ToyNet::kWidths[l];
    const std::size_t outs = toy::ToyNet::kWidths[l + 1];
    Json weights = Json::array();
    for (std::size_t o = 0; o < outs; ++o) {
      Json row = Json::array();
      for (std::size_t i = 0; i < in; ++i) row.push_back(params[net.weight_offset(l) + o * in + i]);
      weights.push_back(std::move(row));
    }
    Json bias = Json::array();
    for (std::size_t o = 0; o < outs; ++o) bias.push_back(params[net.bias_offset(l) + o]);
    out["layers"].push_back({{"weights", std::move(weights)}, {"bias", std::move(bias)}});
  }
  return out;
}

std::string matrix_csv(const std::vector<std::string>& labels, const DenseMatrix& values) {
  std::string out = "region";
  for (const auto& l : labels) out += "," + l;
  out += "\n";
  for (std::size_t i = 0; i < values.rows(); ++i) {
    out += labels[i];
    for (std::size_t j = 0; j < values.cols(); ++j) out += "," + io::format_double(values(i, j));
    out += "\n";
  }
  return out;
}

std::string dump(const Json& json) { return json.dump(2) + "\n"; }

}  // namespace obser::report
