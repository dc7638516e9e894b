#pragma once

#include "ctxdrift/aditt.hpp"
#include "ctxdrift/harness.hpp"
#include "ctxdrift/permutation.hpp"

#include <json.hpp>

#include <string>

namespace ctxdrift {

/// Fixed key order: method, statistic, p_value, n_perm, seed,
/// permuted_statistics, diagnostics.
nlohmann::ordered_json report_to_json(const DetectionReport& report);
DetectionReport report_from_json(const nlohmann::ordered_json& j);

nlohmann::ordered_json experiment_to_json(const ExperimentResult& result);

/// One-row CSV table (with header) summarizing an experiment.
std::string experiment_csv(const std::string& method,
                           const ScenarioConfig& cfg,
                           const ExperimentResult& result);

/// Row/column marginal sums of the statistic weight matrices, as CSV rows
/// (matrix, kind, index, weight) suitable for plotting.
std::string weight_marginals_csv(const WeightMatrices& w);

/// Serialize then write: content is fully built in memory and placed with a
/// rename, so failures never leave a partial report behind. A trailing
/// newline is appended.
void write_text_file(const std::string& path, const std::string& content);

void write_report(const DetectionReport& report, const std::string& path);

}  // namespace ctxdrift
