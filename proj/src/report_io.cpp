#include "ctxdrift/report_io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

namespace ctxdrift {

using nlohmann::ordered_json;

ordered_json report_to_json(const DetectionReport& report) {
  ordered_json j;
  j["method"] = report.method;
  j["statistic"] = report.statistic;
  j["p_value"] = report.p_value;
  j["n_perm"] = report.n_perm;
  j["seed"] = report.seed;
  j["permuted_statistics"] = report.permuted_statistics;
  j["diagnostics"] = ordered_json::object();
  for (const auto& [key, value] : report.diagnostics) {
    j["diagnostics"][key] = value;
  }
  return j;
}

DetectionReport report_from_json(const ordered_json& j) {
  DetectionReport report;
  report.method = j.at("method").get<std::string>();
  report.statistic = j.at("statistic").get<double>();
  report.p_value = j.at("p_value").get<double>();
  report.n_perm = j.at("n_perm").get<int>();
  report.seed = j.at("seed").get<std::uint64_t>();
  report.permuted_statistics =
      j.at("permuted_statistics").get<std::vector<double>>();
  for (const auto& [key, value] : j.at("diagnostics").items()) {
    report.diagnostics[key] = value.get<double>();
  }
  return report;
}

ordered_json experiment_to_json(const ExperimentResult& result) {
  ordered_json j;
  j["runs"] = result.runs;
  j["skipped"] = result.skipped;
  j["ks"] = result.ks;
  if (result.auc.has_value()) {
    j["auc"] = *result.auc;
  } else {
    j["auc"] = nullptr;
  }
  j["p_values_null"] = result.p_values_null;
  j["p_values_drift"] = result.p_values_drift;
  j["run_seeds"] = result.run_seeds;
  return j;
}

std::string experiment_csv(const std::string& method,
                           const ScenarioConfig& cfg,
                           const ExperimentResult& result) {
  std::ostringstream out;
  out << "method,scenario,n0,n1,sigma,k_modes,epsilon,omega,runs,skipped,ks,"
         "auc\n";
  out << method << ',' << scenario_name(cfg.scenario) << ',' << cfg.n0 << ','
      << cfg.n1 << ',' << cfg.sigma << ',' << cfg.k_modes << ',' << cfg.epsilon
      << ',' << cfg.omega << ',' << result.runs << ',' << result.skipped << ','
      << result.ks << ',';
  if (result.auc.has_value()) out << *result.auc;
  out << '\n';
  return out.str();
}

std::string weight_marginals_csv(const WeightMatrices& w) {
  std::ostringstream out;
  out << "matrix,kind,index,weight\n";
  auto emit = [&out](const char* name, const Matrix& m) {
    Vector rows = m.rowwise().sum();
    Vector cols = m.colwise().sum();
    for (Index i = 0; i < rows.size(); ++i) {
      out << name << ",row," << i << ',' << rows[i] << '\n';
    }
    for (Index i = 0; i < cols.size(); ++i) {
      out << name << ",col," << i << ',' << cols[i] << '\n';
    }
  };
  emit("w00", w.w00);
  emit("w11", w.w11);
  emit("w01", w.w01);
  return out.str();
}

void write_text_file(const std::string& path, const std::string& content) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw InputError(path + ": cannot open for writing");
    out << content;
    if (!content.empty() && content.back() != '\n') out << '\n';
    out.flush();
    if (!out) throw InputError(path + ": write failed");
  }
  if (std::rename(tmp.c_str(), path.c_str()) != 0) {
    std::remove(tmp.c_str());
    throw InputError(path + ": rename failed");
  }
}

void write_report(const DetectionReport& report, const std::string& path) {
  write_text_file(path, report_to_json(report).dump(2));
}

}  // namespace ctxdrift
