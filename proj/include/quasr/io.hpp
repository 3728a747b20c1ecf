#pragma once

#include "quasr/simulate.hpp"
#include "quasr/types.hpp"

#include <json.hpp>

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace quasr {

using nlohmann::json;

// Shortest decimal string that parses back to the same double (to_chars).
std::string fmt_double(double v);

// Parse with full round-trip fidelity; throws std::invalid_argument on
// malformed input.
double parse_double(const std::string& s);

// Rectangular numeric CSV. An optional single header line (any field that is
// not a number) is skipped on read; ragged or malformed rows throw
// std::invalid_argument with the line number.
MatrixXd read_csv_matrix(const std::string& path);
void write_csv_matrix(const std::string& path, const MatrixXd& m);

// Provenance block embedded in JSON artifacts and written alongside CSVs.
// Reruns of the same command differ only in the timing fields.
struct RunManifest {
  std::string command;
  json config = json::object();
  std::uint64_t seed = 0;
  int threads = 1;
  bool deterministic = false;
  std::string version;
  std::string started_at;  // ISO 8601 UTC
  std::map<std::string, double> stage_seconds;
  std::vector<std::string> outputs;
};

json manifest_to_json(const RunManifest& m);

json theta_to_json(const ParamBlocks& theta, const BasisSpec& basis);
// basis_out, when non-null, receives the stored basis description.
ParamBlocks theta_from_json(const json& j, BasisSpec* basis_out = nullptr);

void write_text(const std::string& path, const std::string& content);

// edges.csv: header "i,j,group_norm", one row per nonzero edge block,
// ascending (i, j).
void write_edges_csv(const std::string& path, const ParamBlocks& theta);

// Experiment descriptor (JSON object) -> config. Unknown keys are rejected;
// missing keys fall back to the defaults in ExperimentConfig. Throws
// std::invalid_argument with the offending key.
ExperimentConfig experiment_from_json(const json& j);
json experiment_to_json(const ExperimentConfig& cfg);

}  // namespace quasr
