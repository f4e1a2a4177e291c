#include "fusionkit/csv.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <unordered_map>

#include "fusionkit/errors.hpp"

namespace fusionkit {

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

namespace {

std::string trim(std::string s) {
  const auto is_space = [](unsigned char c) { return c == ' ' || c == '\t' || c == '\r'; };
  while (!s.empty() && is_space(static_cast<unsigned char>(s.back()))) s.pop_back();
  std::size_t start = 0;
  while (start < s.size() && is_space(static_cast<unsigned char>(s[start]))) ++start;
  return s.substr(start);
}

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  std::stringstream ss(line);
  while (std::getline(ss, field, ',')) fields.push_back(trim(field));
  if (!line.empty() && line.back() == ',') fields.emplace_back();
  return fields;
}

double parse_cell(const std::string& cell, std::size_t row, const std::string& column,
                  const std::string& path) {
  const auto fail = [&](const std::string& why) {
    throw ValidationError("CSV parse failure in " + path + " at row " +
                          std::to_string(row) + ", column '" + column + "': " + why);
  };
  if (cell.empty()) fail("empty cell");
  double value = 0.0;
  const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), value);
  if (ec != std::errc() || ptr != cell.data() + cell.size())
    fail("not a number ('" + cell + "')");
  if (!std::isfinite(value)) fail("non-finite value ('" + cell + "')");
  return value;
}

}  // namespace

CsvTable read_csv_table(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open CSV file: " + path);

  std::string line;
  if (!std::getline(in, line)) throw ValidationError("empty CSV file: " + path);
  if (line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);

  CsvTable table;
  table.header = split_line(line);
  if (table.header.empty()) throw ValidationError("CSV header row is empty: " + path);

  std::vector<std::vector<double>> rows;
  std::size_t row_number = 1;  // header was row 0
  while (std::getline(in, line)) {
    if (trim(line).empty()) {
      ++row_number;
      continue;
    }
    const auto fields = split_line(line);
    if (fields.size() != table.header.size())
      throw ValidationError("CSV parse failure in " + path + " at row " +
                            std::to_string(row_number) + ": expected " +
                            std::to_string(table.header.size()) + " fields, got " +
                            std::to_string(fields.size()));
    std::vector<double> row(fields.size());
    for (std::size_t j = 0; j < fields.size(); ++j)
      row[j] = parse_cell(fields[j], row_number, table.header[j], path);
    rows.push_back(std::move(row));
    ++row_number;
  }

  table.values.resize(static_cast<Index>(rows.size()),
                      static_cast<Index>(table.header.size()));
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < rows[i].size(); ++j)
      table.values(static_cast<Index>(i), static_cast<Index>(j)) = rows[i][j];
  return table;
}

void write_csv_table(const std::string& path, const std::vector<std::string>& header,
                     const Matrix& values) {
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot open file for writing: " + path);
  for (std::size_t j = 0; j < header.size(); ++j)
    out << (j ? "," : "") << header[j];
  out << "\n";
  for (Index i = 0; i < values.rows(); ++i) {
    for (Index j = 0; j < values.cols(); ++j)
      out << (j ? "," : "") << format_double(values(i, j));
    out << "\n";
  }
  if (!out) throw ValidationError("I/O failure while writing: " + path);
}

Matrix load_csv(const std::string& path, const BlockSpec& spec, DatasetTag tag) {
  const CsvTable table = read_csv_table(path);

  std::vector<std::string> wanted = spec.x_names();
  const auto& second = (tag == DatasetTag::A) ? spec.y_names() : spec.z_names();
  wanted.insert(wanted.end(), second.begin(), second.end());

  std::unordered_map<std::string, Index> position;
  for (std::size_t j = 0; j < table.header.size(); ++j) {
    if (!position.emplace(table.header[j], static_cast<Index>(j)).second)
      throw ValidationError("duplicate column '" + table.header[j] + "' in " + path);
  }
  if (table.header.size() != wanted.size()) {
    for (const auto& h : table.header)
      if (std::find(wanted.begin(), wanted.end(), h) == wanted.end())
        throw ValidationError("unexpected column '" + h + "' in " + path);
  }

  Matrix out(table.values.rows(), static_cast<Index>(wanted.size()));
  for (std::size_t j = 0; j < wanted.size(); ++j) {
    const auto it = position.find(wanted[j]);
    if (it == position.end())
      throw ValidationError("missing column '" + wanted[j] + "' in " + path);
    out.col(static_cast<Index>(j)) = table.values.col(it->second);
  }
  if (out.rows() == 0) throw ValidationError("no data rows in " + path);
  return out;
}

std::string provenance_path(const std::string& csv_path) {
  const std::string suffix = ".csv";
  if (csv_path.size() > suffix.size() &&
      csv_path.compare(csv_path.size() - suffix.size(), suffix.size(), suffix) == 0)
    return csv_path.substr(0, csv_path.size() - suffix.size()) + ".provenance.csv";
  return csv_path + ".provenance.csv";
}

void emit_csv(const ImputedDataset& imputed, const std::string& path) {
  if (!imputed.values.allFinite())
    throw ValidationError("emit_csv: dataset contains non-finite values");
  write_csv_table(path, imputed.spec.all_names(), imputed.values);

  std::ofstream out(provenance_path(path));
  if (!out) throw ValidationError("cannot open file for writing: " + provenance_path(path));
  out << "row,column,tag,donor_row\n";
  for (Index i = 0; i < imputed.n(); ++i) {
    const char* block = (i < imputed.n_a) ? "Z" : "Y";
    const char* tag =
        imputed.row_tag[static_cast<std::size_t>(i)] == CellTag::nn ? "nn" : "parametric";
    out << i << "," << block << "," << tag << ","
        << imputed.donor[static_cast<std::size_t>(i)] << "\n";
  }
  if (!out) throw ValidationError("I/O failure while writing provenance sidecar");
}

std::vector<ProvenanceRow> read_provenance(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open provenance file: " + path);
  std::string line;
  if (!std::getline(in, line) || trim(line) != "row,column,tag,donor_row")
    throw ValidationError("bad provenance header in " + path);
  std::vector<ProvenanceRow> rows;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    const auto fields = split_line(line);
    if (fields.size() != 4) throw ValidationError("bad provenance row in " + path);
    rows.push_back({static_cast<Index>(std::stoll(fields[0])), fields[1], fields[2],
                    static_cast<Index>(std::stoll(fields[3]))});
  }
  return rows;
}

}  // namespace fusionkit
