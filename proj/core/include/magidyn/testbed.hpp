#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <limits>
#include <string>
#include <string_view>
#include <vector>

#include "magidyn/ode.hpp"
#include "magidyn/types.hpp"

namespace magidyn {

enum class RegimeName { StableCanonical, StableTransientChaos, ChaoticButterfly, ChaoticNoButterfly };

inline constexpr std::array<RegimeName, 4> kAllRegimes = {
    RegimeName::StableCanonical, RegimeName::StableTransientChaos,
    RegimeName::ChaoticButterfly, RegimeName::ChaoticNoButterfly};

std::string to_string(RegimeName r);
// Accepts the enum spelling ("ChaoticButterfly") or the config file stem
// ("chaotic_butterfly"). Throws InvalidArgument otherwise.
RegimeName regime_from_string(std::string_view s);
// Config file stem, e.g. "stable_canonical".
std::string regime_file_stem(RegimeName r);

struct RegimeSpec {
  RegimeName name = RegimeName::StableCanonical;
  std::string label;
  Theta theta;
  State3 x0 = State3::Zero();
  double truth_horizon = 10.0;
};

// Built-in defaults; identical to the shipped files under config/regimes.
RegimeSpec default_regime(RegimeName r);

// Reads a key=value regime file (keys: name, label, beta, rho, sigma,
// x0=a,b,c, truth_horizon). '#' starts a comment.
RegimeSpec load_regime(const std::filesystem::path& path);

// Qualitative shape checks over [0, truth_horizon]; returns an empty string
// when the regime looks the way its name says, else a reason.
//  StableCanonical:      ends within 0.05 of a non-origin fixed point.
//  ChaoticButterfly:     x changes sign at least twice.
//  ChaoticNoButterfly:   x never changes sign.
//  StableTransientChaos: x changes sign at least twice (chaotic-looking).
std::string check_regime_shape(const RegimeSpec& regime);

// Ground truth at the given times, integrated from x0 at t=0 with the
// ground-truth tolerances. `times` must be sorted and >= 0.
Trajectory ground_truth(const RegimeSpec& regime, const std::vector<double>& times);

// alpha * (max - min) per component over the whole truth trajectory.
Vector component_noise_sd(const Trajectory& truth, double alpha);

inline constexpr double kMissing = std::numeric_limits<double>::quiet_NaN();
inline bool is_missing(double v) { return v != v; }

struct DatasetMeta {
  std::string regime;
  double t_max = 0.0;
  double d_obs = 0.0;
  double alpha = 0.0;
  std::uint64_t seed = 0;
};

// Noisy observations. Missing entries hold NaN (see is_missing).
struct ObservationSet {
  std::vector<double> times;
  Matrix values;
  DatasetMeta meta;

  Eigen::Index size() const { return static_cast<Eigen::Index>(times.size()); }
  int dim() const { return static_cast<int>(values.cols()); }
};

// Observation times j / d_obs for j = 0 .. d_obs*T_max - 1 with noise drawn
// from a stream keyed on (seed, regime). Noise is drawn once on the 40-per-
// unit grid over the truth horizon, so settings whose grid is a subgrid of
// it share noise. Throws InvalidGrid when d_obs*T_max is not an integer.
ObservationSet make_dataset(const RegimeSpec& regime, double t_max, double d_obs,
                            double alpha, std::uint64_t seed);

// CSV persistence. Header line
//   # regime=<name> Tmax=<v> dobs=<v> alpha=<v> seed=<v>
// then "t,x,y,z" and one row per time; empty fields are missing values.
void write_csv(const ObservationSet& set, const std::filesystem::path& path);
ObservationSet read_csv(const std::filesystem::path& path);

}  // namespace magidyn
