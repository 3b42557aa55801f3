#pragma once

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "rrrsim/errors.hpp"

namespace rrrsim {

/// Doubles are written with 17 significant digits so that a read back
/// restores the exact bit pattern.
inline std::string csv_format(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

inline double csv_parse(const std::string& s) {
  double v = 0.0;
  const char* first = s.data();
  const char* last = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || ptr != last)
    throw SchemaMismatchError("cannot parse '" + s + "' as a number");
  return v;
}

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;

  int column(const std::string& name) const {
    for (size_t i = 0; i < header.size(); ++i)
      if (header[i] == name) return static_cast<int>(i);
    throw SchemaMismatchError("missing column '" + name + "'");
  }
};

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::stringstream ss(line);
  while (std::getline(ss, field, ',')) out.push_back(field);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

/// Reads a whole numeric CSV with a mandatory header row. Ragged rows or
/// non-numeric fields raise SchemaMismatchError.
inline CsvTable read_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw SchemaMismatchError("cannot open '" + path + "'");
  CsvTable table;
  std::string line;
  if (!std::getline(in, line))
    throw SchemaMismatchError("'" + path + "' is empty");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  table.header = split_csv_line(line);
  size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto fields = split_csv_line(line);
    if (fields.size() != table.header.size())
      throw SchemaMismatchError(path + ":" + std::to_string(lineno) +
                                ": expected " +
                                std::to_string(table.header.size()) +
                                " fields, got " +
                                std::to_string(fields.size()));
    std::vector<double> row;
    row.reserve(fields.size());
    for (const auto& f : fields) {
      try {
        row.push_back(csv_parse(f));
      } catch (const SchemaMismatchError& e) {
        throw SchemaMismatchError(path + ":" + std::to_string(lineno) + ": " +
                                  e.what());
      }
    }
    table.rows.push_back(std::move(row));
  }
  return table;
}

class CsvWriter {
 public:
  explicit CsvWriter(const std::string& path) : out_(path) {
    if (!out_) throw Error("cannot open '" + path + "' for writing");
  }

  void header(const std::vector<std::string>& names) {
    for (size_t i = 0; i < names.size(); ++i) {
      if (i) out_ << ',';
      out_ << names[i];
    }
    out_ << '\n';
  }

  void row(const std::vector<double>& values) {
    for (size_t i = 0; i < values.size(); ++i) {
      if (i) out_ << ',';
      out_ << csv_format(values[i]);
    }
    out_ << '\n';
  }

  void raw_row(const std::vector<std::string>& fields) {
    for (size_t i = 0; i < fields.size(); ++i) {
      if (i) out_ << ',';
      out_ << fields[i];
    }
    out_ << '\n';
  }

 private:
  std::ofstream out_;
};

}  // namespace rrrsim
