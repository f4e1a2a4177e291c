#pragma once

#include <string>
#include <vector>

#include "fusionkit/block_spec.hpp"
#include "fusionkit/dataset.hpp"
#include "fusionkit/types.hpp"

namespace fusionkit {

enum class DatasetTag { A, B };

/// "%.17g" rendering: shortest form that still round-trips a double exactly.
std::string format_double(double v);

struct CsvTable {
  std::vector<std::string> header;
  Matrix values;
};

/// Comma-separated, one header row, '.' decimal separator, UTF-8.
/// Parse failures name the offending row and column. NaN/inf cells are
/// rejected: missingness is structural here, never encoded in values.
CsvTable read_csv_table(const std::string& path);

void write_csv_table(const std::string& path, const std::vector<std::string>& header,
                     const Matrix& values);

/// Read one input dataset. The header must contain exactly the spec's
/// (X u Y) columns for tag A, or (X u Z) for tag B, in any order; columns are
/// reordered to the canonical (X, Y) / (X, Z) layout.
Matrix load_csv(const std::string& path, const BlockSpec& spec, DatasetTag tag);

struct ProvenanceRow {
  Index row;
  std::string column;  // imputed block label: "Z" for A rows, "Y" for B rows
  std::string tag;     // "nn" or "parametric"
  Index donor_row;     // -1 unless nn
};

/// Write the completed matrix to `path` and a provenance sidecar next to it
/// (foo.csv -> foo.provenance.csv), one sidecar row per dataset row.
void emit_csv(const ImputedDataset& imputed, const std::string& path);

std::string provenance_path(const std::string& csv_path);
std::vector<ProvenanceRow> read_provenance(const std::string& path);

}  // namespace fusionkit
