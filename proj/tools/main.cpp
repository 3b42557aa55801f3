#include <cstdlib>
#include <exception>
#include <filesystem>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "rrrsim/cli.hpp"

namespace {

std::string default_out_root() {
  if (const char* env = std::getenv("RRRSIM_OUT_ROOT")) return env;
  return "rrrsim_out";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "rrrsim: simulation, impedance control and contact-force observation "
      "for a planar 3-RRR parallel robot"};
  app.require_subcommand(1);

  rrrsim::RunManifest manifest;
  std::uint64_t seed = 0;
  std::string observers;
  auto* sim = app.add_subcommand("sim", "run a scenario and write CSV logs");
  sim->add_option("--scenario", manifest.scenario_path, "scenario JSON file")
      ->required();
  sim->add_option("--out", manifest.out_dir, "output directory");
  auto* seed_opt = sim->add_option("--seed", seed, "seed override");
  auto* obs_opt = sim->add_option("--observers", observers,
                                  "comma list of mo,kf,sosml");

  std::string identify_in, identify_out;
  auto* identify =
      app.add_subcommand("identify", "fit motor torque constants from a "
                                     "calibration CSV");
  identify->add_option("--in", identify_in, "calibration CSV")->required();
  identify->add_option("--out", identify_out, "fit report CSV")->required();

  std::string replay_log, replay_config, replay_out;
  auto* replay = app.add_subcommand(
      "replay", "re-run the observers offline over a logged run");
  replay->add_option("--log", replay_log, "run log CSV")->required();
  replay->add_option("--config", replay_config, "scenario/observer config")
      ->required();
  replay->add_option("--out", replay_out, "estimates CSV");

  std::string plot_log, plot_out;
  auto* plot = app.add_subcommand("plot", "render SVG charts from a run log");
  plot->add_option("--log", plot_log, "run log CSV")->required();
  plot->add_option("--out", plot_out, "output directory")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (sim->parsed()) {
      if (*seed_opt) manifest.seed = seed;
      if (*obs_opt) manifest.observers = observers;
      if (manifest.out_dir.empty()) {
        const auto name =
            std::filesystem::path(manifest.scenario_path).stem().string();
        manifest.out_dir =
            (std::filesystem::path(default_out_root()) / name).string();
      }
      return rrrsim::cmd_sim(manifest);
    }
    if (identify->parsed()) return rrrsim::cmd_identify(identify_in, identify_out);
    if (replay->parsed()) {
      if (replay_out.empty())
        replay_out = (std::filesystem::path(default_out_root()) /
                      "replay_estimates.csv")
                         .string();
      std::filesystem::create_directories(
          std::filesystem::path(replay_out).parent_path());
      return rrrsim::cmd_replay(replay_log, replay_config, replay_out);
    }
    if (plot->parsed()) return rrrsim::cmd_plot(plot_log, plot_out);
  } catch (const rrrsim::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "unexpected error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
