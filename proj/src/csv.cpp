#include "ctxdrift/csv.hpp"

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <sstream>

namespace ctxdrift {

namespace {

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string::npos) return "";
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::istringstream stream(line);
  while (std::getline(stream, cell, ',')) cells.push_back(trim(cell));
  if (!line.empty() && line.back() == ',') cells.push_back("");
  return cells;
}

}  // namespace

CsvTable read_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError(path + ": cannot open file");

  std::string line;
  if (!std::getline(in, line)) throw InputError(path + ": empty file");
  CsvTable table;
  table.columns = split_line(line);
  if (table.columns.empty() ||
      std::any_of(table.columns.begin(), table.columns.end(),
                  [](const std::string& c) { return c.empty(); })) {
    throw InputError(path + ": malformed header row");
  }

  std::vector<std::vector<double>> rows;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto cells = split_line(line);
    if (cells.size() != table.columns.size()) {
      throw InputError(path + ":" + std::to_string(line_no) + ": expected " +
                       std::to_string(table.columns.size()) + " cells, got " +
                       std::to_string(cells.size()));
    }
    std::vector<double> row(cells.size());
    for (std::size_t j = 0; j < cells.size(); ++j) {
      const char* begin = cells[j].c_str();
      char* end = nullptr;
      row[j] = std::strtod(begin, &end);
      if (cells[j].empty() || end != begin + cells[j].size()) {
        throw InputError(path + ":" + std::to_string(line_no) + ": column '" +
                         table.columns[j] + "': non-numeric cell '" +
                         cells[j] + "'");
      }
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw InputError(path + ": no data rows");

  table.values.resize(static_cast<Index>(rows.size()),
                      static_cast<Index>(table.columns.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < rows[i].size(); ++j) {
      table.values(static_cast<Index>(i), static_cast<Index>(j)) = rows[i][j];
    }
  }
  return table;
}

Matrix select_columns(const CsvTable& table,
                      const std::vector<std::string>& names,
                      const std::string& origin) {
  Matrix out(table.values.rows(), static_cast<Index>(names.size()));
  for (std::size_t j = 0; j < names.size(); ++j) {
    const auto it =
        std::find(table.columns.begin(), table.columns.end(), names[j]);
    if (it == table.columns.end()) {
      throw InputError(origin + ": missing column '" + names[j] + "'");
    }
    out.col(static_cast<Index>(j)) =
        table.values.col(std::distance(table.columns.begin(), it));
  }
  return out;
}

SampleBatch load_batch(const std::string& ref_path,
                       const std::string& deploy_path,
                       const std::vector<std::string>& stat_cols,
                       const std::vector<std::string>& ctx_cols) {
  if (stat_cols.empty()) {
    throw InputError("load_batch: at least one statistics column is required");
  }

  CsvTable ref = read_csv(ref_path);
  CsvTable dep = read_csv(deploy_path);

  Matrix ref_s = select_columns(ref, stat_cols, ref_path);
  Matrix dep_s = select_columns(dep, stat_cols, deploy_path);

  SampleBatch batch;
  const Index n0 = ref_s.rows();
  const Index n1 = dep_s.rows();
  batch.statistics.resize(n0 + n1, ref_s.cols());
  batch.statistics.topRows(n0) = ref_s;
  batch.statistics.bottomRows(n1) = dep_s;

  if (ctx_cols.empty()) {
    batch.contexts.resize(n0 + n1, 0);
  } else {
    Matrix ref_c = select_columns(ref, ctx_cols, ref_path);
    Matrix dep_c = select_columns(dep, ctx_cols, deploy_path);
    batch.contexts.resize(n0 + n1, ref_c.cols());
    batch.contexts.topRows(n0) = ref_c;
    batch.contexts.bottomRows(n1) = dep_c;
  }

  batch.domains.assign(static_cast<std::size_t>(n0 + n1), 0);
  std::fill(batch.domains.begin() + n0, batch.domains.end(), 1);

  if (!batch.statistics.allFinite() || !batch.contexts.allFinite()) {
    throw InputError("load_batch: non-finite values in input data");
  }
  return batch;
}

}  // namespace ctxdrift
