#pragma once

#include <string>
#include <vector>

#include "rrrsim/csv.hpp"
#include "rrrsim/simulation.hpp"

namespace rrrsim {

/// Fixed column schema of the run log.
inline const std::vector<std::string>& log_columns() {
  static const std::vector<std::string> cols = {
      "t",        "rx",       "ry",       "phi",      "vx",       "vy",
      "wz",       "rx_d",     "ry_d",     "phi_d",    "Fm_x",     "Fm_y",
      "Fm_z",     "tau_1",    "tau_2",    "tau_3",    "Fext_x",   "Fext_y",
      "Fext_z",   "Fmo_x",    "Fmo_y",    "Fmo_z",    "Fkf_x",    "Fkf_y",
      "Fkf_z",    "Fsosml_x", "Fsosml_y", "Fsosml_z", "trig_mo",  "trig_kf",
      "trig_sosml"};
  return cols;
}

inline std::vector<double> log_row_values(const LogRow& r) {
  std::vector<double> v;
  v.reserve(31);
  v.push_back(r.t);
  for (int i = 0; i < 3; ++i) v.push_back(r.x[i]);
  for (int i = 0; i < 3; ++i) v.push_back(r.xd[i]);
  for (int i = 0; i < 3; ++i) v.push_back(r.x_d[i]);
  for (int i = 0; i < 3; ++i) v.push_back(r.f_m[i]);
  for (int i = 0; i < 3; ++i) v.push_back(r.tau[i]);
  for (int i = 0; i < 3; ++i) v.push_back(r.f_ext[i]);
  for (int i = 0; i < 3; ++i) v.push_back(r.f_mo[i]);
  for (int i = 0; i < 3; ++i) v.push_back(r.f_kf[i]);
  for (int i = 0; i < 3; ++i) v.push_back(r.f_sosml[i]);
  v.push_back(r.trig_mo);
  v.push_back(r.trig_kf);
  v.push_back(r.trig_sosml);
  return v;
}

inline void write_log_csv(const std::string& path, const RunLog& log) {
  CsvWriter w(path);
  w.header(log_columns());
  for (const auto& r : log.rows) w.row(log_row_values(r));
}

inline void write_events_csv(const std::string& path, const RunLog& log) {
  CsvWriter w(path);
  w.header({"observer", "axis", "t_onset", "t_detect", "dt_cd"});
  for (const auto& e : log.events)
    w.raw_row({e.observer, std::to_string(e.axis), csv_format(e.t_onset),
               csv_format(e.t_detect), csv_format(e.dt_cd)});
}

inline void write_summary_csv(const std::string& path, const RunLog& log) {
  CsvWriter w(path);
  w.header({"key", "value"});
  for (const auto& [k, v] : log.summary) w.raw_row({k, v});
}

/// Validates that a table carries the full run-log schema.
inline void check_log_schema(const CsvTable& table) {
  const auto& cols = log_columns();
  if (table.header.size() != cols.size())
    throw SchemaMismatchError(
        "log has " + std::to_string(table.header.size()) +
        " columns, expected " + std::to_string(cols.size()));
  for (size_t i = 0; i < cols.size(); ++i)
    if (table.header[i] != cols[i])
      throw SchemaMismatchError("log column " + std::to_string(i) + " is '" +
                                table.header[i] + "', expected '" + cols[i] +
                                "'");
  if (table.rows.empty()) throw SchemaMismatchError("log has no data rows");
}

}  // namespace rrrsim
