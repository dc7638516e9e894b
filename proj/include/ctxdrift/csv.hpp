#pragma once

#include "ctxdrift/aditt.hpp"
#include "ctxdrift/common.hpp"

#include <string>
#include <vector>

namespace ctxdrift {

/// Header-row CSV of numeric columns. Cell and header whitespace is trimmed.
struct CsvTable {
  std::vector<std::string> columns;
  Matrix values;
};

CsvTable read_csv(const std::string& path);

/// Columns by name, in the requested order. Unknown names raise InputError
/// naming the file and the missing column.
Matrix select_columns(const CsvTable& table,
                      const std::vector<std::string>& names,
                      const std::string& origin);

/// Build a batch from one reference and one deployment CSV. Context columns
/// may be empty (methods that ignore context permit it); statistics columns
/// are mandatory.
SampleBatch load_batch(const std::string& ref_path,
                       const std::string& deploy_path,
                       const std::vector<std::string>& stat_cols,
                       const std::vector<std::string>& ctx_cols);

}  // namespace ctxdrift
