#pragma once

#include <filesystem>
#include <fstream>
#include <numbers>
#include <string>

#include <json.hpp>

#include "rrrsim/errors.hpp"
#include "rrrsim/simulation.hpp"

namespace rrrsim {

namespace detail {

using nlohmann::json;

inline json load_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError(path + ": " + e.what());
  }
}

inline Vec2 as_vec2(const json& j, const std::string& field) {
  if (!j.is_array() || j.size() != 2)
    throw ConfigError(field + ": expected an array of 2 numbers");
  return {j[0].get<double>(), j[1].get<double>()};
}

inline Vec3 as_vec3(const json& j, const std::string& field) {
  if (!j.is_array() || j.size() != 3)
    throw ConfigError(field + ": expected an array of 3 numbers");
  return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

inline Vec3 vec3_or(const json& j, const std::string& key,
                    const Vec3& fallback) {
  if (!j.contains(key)) return fallback;
  return as_vec3(j.at(key), key);
}

inline Geometry geometry_from_json(const json& j) {
  Geometry g = Geometry::symmetric_default();
  if (j.contains("base_radius") || j.contains("platform_radius") ||
      j.contains("l1") || j.contains("l2") || j.contains("angles_deg")) {
    const double rb = j.value("base_radius", 0.35);
    const double rp = j.value("platform_radius", 0.10);
    const double l1 = j.value("l1", 0.25);
    const double l2 = j.value("l2", 0.25);
    std::array<double, 3> angles = {90.0, 210.0, 330.0};
    if (j.contains("angles_deg")) {
      const Vec3 a = as_vec3(j.at("angles_deg"), "geometry.angles_deg");
      angles = {a[0], a[1], a[2]};
    }
    for (int i = 0; i < 3; ++i) {
      const double a = angles[i] * std::numbers::pi / 180.0;
      g.base_anchor[i] = rb * unit(a);
      g.platform_coupling_local[i] = rp * unit(a);
      g.link_len_1[i] = l1;
      g.link_len_2[i] = l2;
    }
  }
  if (j.contains("base_anchor"))
    for (int i = 0; i < 3; ++i)
      g.base_anchor[i] = as_vec2(j.at("base_anchor").at(i), "base_anchor");
  if (j.contains("platform_coupling"))
    for (int i = 0; i < 3; ++i)
      g.platform_coupling_local[i] =
          as_vec2(j.at("platform_coupling").at(i), "platform_coupling");
  if (j.contains("link_len_1")) {
    const Vec3 l = as_vec3(j.at("link_len_1"), "link_len_1");
    for (int i = 0; i < 3; ++i) g.link_len_1[i] = l[i];
  }
  if (j.contains("link_len_2")) {
    const Vec3 l = as_vec3(j.at("link_len_2"), "link_len_2");
    for (int i = 0; i < 3; ++i) g.link_len_2[i] = l[i];
  }
  g.link_half_width = j.value("link_half_width", g.link_half_width);
  return g;
}

inline DynamicsParams dynamics_from_json(const json& j) {
  DynamicsParams p = DynamicsParams::defaults();
  if (j.contains("link_mass")) {
    const double m = j.at("link_mass").get<double>();
    for (int i = 0; i < 3; ++i) {
      p.proximal[i].mass = m;
      p.distal[i].mass = m;
    }
  }
  if (j.contains("link_inertia")) {
    const double in = j.at("link_inertia").get<double>();
    for (int i = 0; i < 3; ++i) {
      p.proximal[i].inertia = in;
      p.distal[i].inertia = in;
    }
  }
  if (j.contains("link_com")) {
    const Vec2 c = as_vec2(j.at("link_com"), "dynamics.link_com");
    for (int i = 0; i < 3; ++i) {
      p.proximal[i].com = c;
      p.distal[i].com = c;
    }
  }
  p.platform.mass = j.value("platform_mass", p.platform.mass);
  p.platform.inertia = j.value("platform_inertia", p.platform.inertia);
  if (j.contains("platform_com"))
    p.platform.com = as_vec2(j.at("platform_com"), "dynamics.platform_com");
  p.viscous = vec3_or(j, "viscous", p.viscous);
  p.coulomb = vec3_or(j, "coulomb", p.coulomb);
  p.viscous_passive = vec3_or(j, "viscous_passive", p.viscous_passive);
  p.coulomb_vel_eps = j.value("coulomb_vel_eps", p.coulomb_vel_eps);
  if (j.contains("gravity"))
    p.gravity = as_vec2(j.at("gravity"), "dynamics.gravity");
  p.fd_step = j.value("fd_step", p.fd_step);
  return p;
}

inline ContactSpec contact_from_json(const json& j) {
  ContactSpec c;
  const std::string type = j.value("type", "none");
  if (type == "none")
    c.type = ContactType::None;
  else if (type == "wrench")
    c.type = ContactType::PrescribedWrench;
  else if (type == "spring_wall")
    c.type = ContactType::SpringWall;
  else if (type == "clamp")
    c.type = ContactType::ClampSpring;
  else
    throw ConfigError("contact.type: unknown type '" + type + "'");
  if (j.contains("location")) {
    const json& l = j.at("location");
    c.location.chain = l.value("chain", 0);
    c.location.link = l.value("link", 2);
    if (l.contains("offset"))
      c.location.offset = as_vec2(l.at("offset"), "contact.location.offset");
  }
  c.onset = j.value("onset", 0.0);
  c.amplitude = vec3_or(j, "amplitude", c.amplitude);
  c.profile = j.value("profile", c.profile);
  if (c.profile != "step" && c.profile != "ramp" && c.profile != "sine" &&
      c.profile != "pulse")
    throw ConfigError("contact.profile: unknown profile '" + c.profile + "'");
  c.ramp_duration = j.value("ramp_duration", c.ramp_duration);
  c.frequency = j.value("frequency", c.frequency);
  if (j.contains("wall_point"))
    c.wall_point = as_vec2(j.at("wall_point"), "contact.wall_point");
  if (j.contains("wall_normal"))
    c.wall_normal = as_vec2(j.at("wall_normal"), "contact.wall_normal");
  c.stiffness = j.value("stiffness", c.stiffness);
  c.damping = j.value("damping", c.damping);
  return c;
}

}  // namespace detail

inline Scenario scenario_from_json(const nlohmann::json& j) {
  using detail::as_vec3;
  using detail::vec3_or;
  Scenario sc;
  try {
    sc.name = j.value("name", sc.name);
    sc.duration = j.value("duration", sc.duration);
    sc.seed = j.value("seed", sc.seed);
    sc.plant_substeps = j.value("plant_substeps", sc.plant_substeps);
    sc.control_rate_hz = j.value("control_rate_hz", sc.control_rate_hz);
    sc.torque_noise_std = j.value("torque_noise_std", sc.torque_noise_std);
    sc.fit_stiffness = j.value("fit_stiffness", sc.fit_stiffness);
    sc.detection_enabled = j.value("detection_enabled", sc.detection_enabled);
    sc.reaction_source = j.value("reaction_source", sc.reaction_source);
    if (j.contains("working_mode")) {
      const Vec3 wm = as_vec3(j.at("working_mode"), "working_mode");
      for (int i = 0; i < 3; ++i)
        sc.working_mode[i] = wm[i] >= 0.0 ? 1 : -1;
    }
    if (j.contains("start_pose"))
      sc.start_pose =
          PlatformPose::from_vec(as_vec3(j.at("start_pose"), "start_pose"));
    if (j.contains("geometry"))
      sc.geometry = detail::geometry_from_json(j.at("geometry"));
    if (j.contains("dynamics"))
      sc.dynamics = detail::dynamics_from_json(j.at("dynamics"));
    if (j.contains("mismatch")) {
      const auto& m = j.at("mismatch");
      sc.mismatch.mass = m.value("mass", 1.0);
      sc.mismatch.coriolis = m.value("coriolis", 1.0);
      sc.mismatch.gravity = m.value("gravity", 1.0);
      sc.mismatch.friction = m.value("friction", 1.0);
    }
    if (j.contains("control")) {
      const auto& c = j.at("control");
      sc.gains.stiffness = vec3_or(c, "stiffness", sc.gains.stiffness);
      sc.gains.modal_damping =
          vec3_or(c, "modal_damping", sc.gains.modal_damping);
    }
    if (j.contains("observers")) {
      const auto& o = j.at("observers");
      if (o.contains("enabled")) {
        sc.observers = {false, false, false};
        for (const auto& name : o.at("enabled")) {
          const std::string n = name.get<std::string>();
          if (n == "mo")
            sc.observers.mo = true;
          else if (n == "kf")
            sc.observers.kf = true;
          else if (n == "sosml")
            sc.observers.sosml = true;
          else
            throw ConfigError("observers.enabled: unknown observer '" + n +
                              "'");
        }
      }
      if (o.contains("mo")) sc.mo_gain = vec3_or(o.at("mo"), "gain", sc.mo_gain);
      if (o.contains("kf")) {
        const auto& k = o.at("kf");
        sc.kf.q_momentum = k.value("q_momentum", sc.kf.q_momentum);
        sc.kf.q_force = vec3_or(k, "q_force", sc.kf.q_force);
        sc.kf.r = vec3_or(k, "r", sc.kf.r);
        sc.kf.p0_momentum = k.value("p0_momentum", sc.kf.p0_momentum);
        sc.kf.p0_force = k.value("p0_force", sc.kf.p0_force);
      }
      if (o.contains("sosml")) {
        const auto& s = o.at("sosml");
        sc.sosml.t1 = vec3_or(s, "t1", sc.sosml.t1);
        sc.sosml.t2 = vec3_or(s, "t2", sc.sosml.t2);
        sc.sosml.s1 = vec3_or(s, "s1", sc.sosml.s1);
        sc.sosml.s2 = vec3_or(s, "s2", sc.sosml.s2);
        sc.sosml_disturbance_bound =
            s.value("disturbance_bound", sc.sosml_disturbance_bound);
      }
    }
    if (j.contains("detection")) {
      const auto& d = j.at("detection");
      sc.detection.epsilon = vec3_or(d, "epsilon", sc.detection.epsilon);
      sc.detection.consecutive = d.value("consecutive",
                                         sc.detection.consecutive);
    }
    if (j.contains("pipeline")) {
      const auto& p = j.at("pipeline");
      sc.pipeline.enabled = p.value("enabled", sc.pipeline.enabled);
      constexpr double deg = std::numbers::pi / 180.0;
      if (p.contains("quantum_active_deg"))
        sc.pipeline.quantum_active =
            p.at("quantum_active_deg").get<double>() * deg;
      if (p.contains("quantum_passive_deg"))
        sc.pipeline.quantum_passive =
            p.at("quantum_passive_deg").get<double>() * deg;
      sc.pipeline.velocity_cutoff_hz =
          p.value("velocity_cutoff_hz", sc.pipeline.velocity_cutoff_hz);
    }
    if (j.contains("trajectory")) {
      for (const auto& w : j.at("trajectory")) {
        Scenario::Waypoint wp;
        wp.target = as_vec3(w.at("target"), "trajectory.target");
        wp.duration = w.at("duration").get<double>();
        sc.waypoints.push_back(wp);
      }
    }
    if (j.contains("contact"))
      sc.contact = detail::contact_from_json(j.at("contact"));
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("scenario config: ") + e.what());
  }
  sc.validate();
  return sc;
}

/// Loads a scenario file. A "defaults" entry names a base file (relative to
/// the loaded file) that is loaded first and overlaid with the remaining
/// keys, so sweeps only state what they change.
inline Scenario load_scenario(const std::string& path) {
  namespace fs = std::filesystem;
  nlohmann::json j = detail::load_json_file(path);
  fs::path dir = fs::path(path).parent_path();
  int depth = 0;
  while (j.contains("defaults")) {
    if (++depth > 8) throw ConfigError(path + ": defaults chain too deep");
    const fs::path base_path = dir / j.at("defaults").get<std::string>();
    nlohmann::json base = detail::load_json_file(base_path.string());
    j.erase("defaults");
    base.merge_patch(j);
    j = std::move(base);
    dir = base_path.parent_path();
  }
  return scenario_from_json(j);
}

}  // namespace rrrsim
