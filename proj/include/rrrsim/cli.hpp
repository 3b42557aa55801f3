#pragma once

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "rrrsim/config.hpp"
#include "rrrsim/identification.hpp"
#include "rrrsim/log_io.hpp"
#include "rrrsim/simulation.hpp"
#include "rrrsim/svg.hpp"

namespace rrrsim {

struct RunManifest {
  std::string scenario_path;
  std::string out_dir;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> observers;  // comma list of mo,kf,sosml
};

namespace detail {

inline ObserverSelection parse_observer_list(const std::string& list) {
  ObserverSelection sel{false, false, false};
  std::stringstream ss(list);
  std::string name;
  while (std::getline(ss, name, ',')) {
    if (name == "mo")
      sel.mo = true;
    else if (name == "kf")
      sel.kf = true;
    else if (name == "sosml")
      sel.sosml = true;
    else if (!name.empty())
      throw ConfigError("unknown observer '" + name + "'");
  }
  return sel;
}

}  // namespace detail

/// Runs a scenario and writes log.csv, events.csv and summary.csv into the
/// output directory. Returns 0 on success, 2 when the run aborted.
inline int cmd_sim(const RunManifest& manifest) {
  Scenario sc = load_scenario(manifest.scenario_path);
  if (manifest.seed) sc.seed = *manifest.seed;
  if (manifest.observers)
    sc.observers = detail::parse_observer_list(*manifest.observers);
  std::filesystem::create_directories(manifest.out_dir);
  const RunLog log = run(sc);
  const std::filesystem::path out(manifest.out_dir);
  write_log_csv((out / "log.csv").string(), log);
  write_events_csv((out / "events.csv").string(), log);
  write_summary_csv((out / "summary.csv").string(), log);
  if (log.aborted) {
    std::cerr << "run aborted: " << log.abort_reason << "\n";
    return 2;
  }
  return 0;
}

/// Calibration CSV schema: contact location, platform pose, link wrench and
/// motor currents per sample. Optional sigma1..3 columns select the working
/// mode (default all +1).
inline const std::vector<std::string>& calibration_columns() {
  static const std::vector<std::string> cols = {
      "chain", "link", "off_x", "off_y", "rx", "ry", "phi",
      "fx",    "fy",   "mz",    "i1",    "i2", "i3"};
  return cols;
}

/// Fits the per-axis motor torque constant from a calibration CSV and writes
/// a fit report. The wrench of every sample is projected to the drives
/// through the contact Jacobians before the regression.
inline int cmd_identify(const std::string& in_csv, const std::string& out_csv,
                        const Geometry& geometry = Geometry::symmetric_default()) {
  const CsvTable table = read_csv(in_csv);
  for (const auto& name : calibration_columns())
    table.column(name);  // throws on missing columns
  const bool has_sigma =
      [&] {
        for (const auto& h : table.header)
          if (h == "sigma1") return true;
        return false;
      }();
  std::vector<CalibrationSample> samples;
  for (const auto& row : table.rows) {
    auto get = [&](const std::string& name) {
      return row[table.column(name)];
    };
    ContactLocation loc;
    loc.chain = static_cast<int>(get("chain"));
    loc.link = static_cast<int>(get("link"));
    loc.offset = Vec2(get("off_x"), get("off_y"));
    const PlatformPose x{get("rx"), get("ry"), get("phi")};
    std::array<int, 3> sigma = {1, 1, 1};
    if (has_sigma)
      for (int i = 0; i < 3; ++i)
        sigma[i] = get("sigma" + std::to_string(i + 1)) >= 0.0 ? 1 : -1;
    const JointConfig q = inverse_kinematics(x, sigma, geometry);
    const Vec3 wrench(get("fx"), get("fy"), get("mz"));
    const WrenchProjection proj =
        project_link_wrench(loc, wrench, q, x, geometry);
    CalibrationSample s;
    s.current = Vec3(get("i1"), get("i2"), get("i3"));
    s.torque = proj.actuators;
    s.body = body_label(loc);
    samples.push_back(s);
  }
  const TorqueConstantFit fit = fit_torque_constant(samples);
  CsvWriter w(out_csv);
  w.header({"axis", "k_t", "rmse", "samples"});
  for (int axis = 0; axis < 3; ++axis)
    w.raw_row({std::to_string(axis + 1), csv_format(fit.k_t[axis]),
               csv_format(fit.rmse[axis]), std::to_string(fit.samples)});
  return 0;
}

/// Re-runs the observers offline over a logged run. With the same observer
/// configuration this reproduces the logged estimates bit-exactly, because
/// the simulation and the replay share the observer code path and the CSV
/// round-trips doubles losslessly.
inline int cmd_replay(const std::string& log_csv, const std::string& config,
                      const std::string& out_csv) {
  const CsvTable table = read_csv(log_csv);
  check_log_schema(table);
  const Scenario sc = load_scenario(config);
  const RobotModel model(sc.geometry, sc.dynamics, sc.mismatch);
  ObserverBank bank(model, sc.observers, sc.mo_gain, sc.kf, sc.sosml);
  CsvWriter w(out_csv);
  w.header({"t", "Fmo_x", "Fmo_y", "Fmo_z", "Fkf_x", "Fkf_y", "Fkf_z",
            "Fsosml_x", "Fsosml_y", "Fsosml_z"});
  // The simulation steps the observers with the exact configured interval;
  // re-deriving it from t differences would perturb the last bits.
  const double dt = 1.0 / sc.control_rate_hz;
  double prev_t = 0.0;
  for (size_t k = 0; k < table.rows.size(); ++k) {
    const auto& row = table.rows[k];
    const double t = row[0];
    if (k > 0 && std::abs(t - prev_t - dt) > 1e-9)
      throw SchemaMismatchError("log rows are not spaced at the configured "
                                "control rate");
    const PlatformPose x{row[1], row[2], row[3]};
    const Vec3 xd(row[4], row[5], row[6]);
    const Vec3 f_m(row[10], row[11], row[12]);
    const JointConfig q = inverse_kinematics(x, sc.working_mode, sc.geometry);
    bank.step(q, x, xd, dt);
    bank.set_applied_force(f_m);
    prev_t = t;
    std::vector<double> out_row;
    out_row.push_back(t);
    for (int i = 0; i < 3; ++i) out_row.push_back(bank.mo_estimate()[i]);
    for (int i = 0; i < 3; ++i) out_row.push_back(bank.kf_estimate()[i]);
    for (int i = 0; i < 3; ++i) out_row.push_back(bank.sosml_estimate()[i]);
    w.row(out_row);
  }
  return 0;
}

/// Renders the forces, positions and velocities panels of a logged run as
/// SVG line charts.
inline int cmd_plot(const std::string& log_csv, const std::string& out_dir) {
  const CsvTable table = read_csv(log_csv);
  check_log_schema(table);
  std::filesystem::create_directories(out_dir);
  auto col = [&](const std::string& name) {
    std::vector<double> v;
    const int c = table.column(name);
    v.reserve(table.rows.size());
    for (const auto& r : table.rows) v.push_back(r[c]);
    return v;
  };
  const std::vector<double> t = col("t");
  auto panel = [&](const std::string& file, const std::string& title,
                   const std::vector<std::pair<std::string, std::string>>&
                       labelled_cols) {
    std::vector<Series> series;
    for (const auto& [label, column] : labelled_cols)
      series.push_back({label, t, col(column)});
    std::ofstream out(std::filesystem::path(out_dir) / file);
    out << render_line_chart(title, "t in s", series);
  };
  panel("forces.svg", "External force: truth and estimates",
        {{"Fext_x", "Fext_x"},
         {"Fext_y", "Fext_y"},
         {"Fmo_x", "Fmo_x"},
         {"Fmo_y", "Fmo_y"},
         {"Fkf_x", "Fkf_x"},
         {"Fkf_y", "Fkf_y"},
         {"Fsosml_x", "Fsosml_x"},
         {"Fsosml_y", "Fsosml_y"}});
  panel("positions.svg", "Platform position and reference",
        {{"rx", "rx"},
         {"ry", "ry"},
         {"phi", "phi"},
         {"rx_d", "rx_d"},
         {"ry_d", "ry_d"},
         {"phi_d", "phi_d"}});
  panel("velocities.svg", "Platform velocity",
        {{"vx", "vx"}, {"vy", "vy"}, {"wz", "wz"}});
  return 0;
}

}  // namespace rrrsim
