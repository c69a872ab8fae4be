#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "magidyn/analysis.hpp"
#include "magidyn/pmagi.hpp"
#include "magidyn/pmsp.hpp"

namespace magidyn {

// Every JSON document carries "schema": "magidyn.<kind>/<version>".
inline constexpr int kSchemaVersion = 1;
std::string schema_id(const std::string& kind);

// Ordered key=value echo of the configuration that produced an output.
using ConfigEcho = std::vector<std::pair<std::string, std::string>>;

struct RunInfo {
  std::string command;
  ConfigEcho config;
  std::optional<Vector> theta_true;
  std::optional<double> sigma_override;
  std::optional<PilotResult> pilot;
};

// Posterior summary: theta mean/sd/bands, stability probability, sampler
// statistics, phi and noise levels. No wall-clock data, so identical runs
// produce identical text.
std::string posterior_json(const PosteriorSamples& samples, const RunInfo& info);

// Summary of a sequential run: per-step headline numbers plus the final
// step's posterior and, when truth is given, prediction sMAE.
std::string pmsp_json(const PmspResult& result, const RunInfo& info,
                      const std::optional<SmaeResult>& prediction_error);

std::string metrics_json(const MetricReport& report, const RunInfo& info);

// Wall time in seconds, kept apart from the deterministic outputs.
std::string timing_json(const std::string& command, double seconds);

// t, then per component <c>_mean, <c>_lo, <c>_hi (2.5% / 97.5%).
std::string trajectory_csv(const std::vector<double>& times, const Matrix& mean, const Matrix& lo,
                           const Matrix& hi);

// A trajectory CSV preceded by '#' lines describing the step.
std::string checkpoint_csv(const PmspCheckpoint& cp);

// Reads a trajectory CSV back: the time column plus the *_mean columns (or
// plain x,y,z columns). Throws IoError / ParseError.
Trajectory read_trajectory_csv(const std::filesystem::path& path);

// Reads a theta draws CSV (header beta,rho,sigma, one draw per row).
Matrix read_theta_draws_csv(const std::filesystem::path& path);
std::string theta_draws_csv(const Matrix& draws);

// Writes through a temporary file and a rename; creates parent directories.
// Throws IoError.
void write_text_file(const std::filesystem::path& path, const std::string& content);

}  // namespace magidyn
