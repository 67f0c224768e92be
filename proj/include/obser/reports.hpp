#pragma once

#include <string>

#include <json.hpp>

#include "obser/eds.hpp"
#include "obser/estimators.hpp"
#include "obser/memory.hpp"
#include "obser/synthenv.hpp"
#include "obser/toytrain.hpp"

namespace obser::report {

using Json = nlohmann::ordered_json;

/// Flat CSV header for EDSReport rows.
std::string eds_csv_header();
/// dH and k are left empty when undefined.
std::string eds_csv_row(const EDSReport& report);
Json eds_json(const EDSReport& report);

Json occurrence_json(const OccurrenceEstimate& estimate);
Json kl_json(const KLEstimate& estimate);
Json theorem3_json(const Theorem3Check& check);
Json chained_json(const ChainedResult& result);
Json segments_json(const std::vector<Segment>& segments);
Json ground_truth_json(const GroundTruth& truth);

std::string trace_csv(const toy::TrainTrace& trace);
Json weights_json(const toy::ToyNet& net);

/// Square matrix with a header row and column of labels.
std::string matrix_csv(const std::vector<std::string>& labels, const DenseMatrix& values);

/// Pretty-printed with a trailing newline.
std::string dump(const Json& json);

}  // namespace obser::report
