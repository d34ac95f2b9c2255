#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "infoputs/dominance.hpp"
#include "infoputs/scenario.hpp"
#include "infoputs/simulator.hpp"

namespace infoputs {

struct PlotSeries {
  std::string name;
  std::string x_label = "x";
  std::string y_label = "y";
  std::vector<std::pair<double, double>> rows;
};

// One two-column CSV per series plus index.json in dir. Returns the file names written.
std::vector<std::string> emit_plot_data(const std::vector<PlotSeries>& series, const std::string& dir);

// (t, μ(θ*)) with a repeated time at every belief jump.
PlotSeries belief_staircase(const Trajectory& tj, std::size_t dominant);
// (t, A_t) sampled every dt up to the horizon.
PlotSeries aggregate_series(const Trajectory& tj, double dt);
// (A, ψ_LD) and (A, ψ_UD) on n points.
std::vector<PlotSeries> dominance_series(const DominanceModel& model, std::size_t n);

std::string sha256_file(const std::string& path);

// base/<mode>-s<seed>-<timestamp>[-k]; created fresh, never reused.
std::string unique_run_directory(const std::string& base, const std::string& mode, std::uint64_t seed);

struct OutputFile {
  std::string name;  // relative to the run directory
  std::string sha256;
};

struct RunManifest {
  nlohmann::json config;
  std::string version;
  std::uint64_t seed = 0;
  std::string started;
  double wall_clock = 0.0;
  std::string directory;
  std::vector<OutputFile> files;
  nlohmann::json summary;
  int exit_code = 0;  // 0 ok, 2 certification or audit failed

  nlohmann::json to_json() const;
};

const char* software_version();

// Dispatches on cfg.run.mode, writes outputs and manifest.json.
RunManifest run(const ScenarioConfig& cfg);

}  // namespace infoputs
