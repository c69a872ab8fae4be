#include "magidyn/testbed.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

#include "magidyn/errors.hpp"
#include "magidyn/integrator.hpp"
#include "magidyn/numfmt.hpp"
#include "magidyn/rng.hpp"

namespace magidyn {

namespace {

constexpr double kNoiseGridDensity = 40.0;

std::string trim(std::string s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double require_double(const std::string& key, const std::string& text,
                      const std::filesystem::path& path, std::size_t line) {
  auto v = parse_double(text);
  if (!v || !std::isfinite(*v))
    throw ParseError(path.string() + ": bad value for '" + key + "'", line, 1);
  return *v;
}

// Integer count n with |n - x| tiny, or -1.
long near_integer(double x) {
  const double r = std::round(x);
  return std::abs(x - r) <= 1e-9 * std::max(1.0, std::abs(x)) ? static_cast<long>(r) : -1;
}

}  // namespace

std::string to_string(RegimeName r) {
  switch (r) {
    case RegimeName::StableCanonical: return "StableCanonical";
    case RegimeName::StableTransientChaos: return "StableTransientChaos";
    case RegimeName::ChaoticButterfly: return "ChaoticButterfly";
    case RegimeName::ChaoticNoButterfly: return "ChaoticNoButterfly";
  }
  return "unknown";
}

std::string regime_file_stem(RegimeName r) {
  switch (r) {
    case RegimeName::StableCanonical: return "stable_canonical";
    case RegimeName::StableTransientChaos: return "stable_transient_chaos";
    case RegimeName::ChaoticButterfly: return "chaotic_butterfly";
    case RegimeName::ChaoticNoButterfly: return "chaotic_no_butterfly";
  }
  return "unknown";
}

RegimeName regime_from_string(std::string_view s) {
  for (RegimeName r : kAllRegimes)
    if (s == to_string(r) || s == regime_file_stem(r)) return r;
  throw InvalidArgument("unknown regime '" + std::string(s) + "'");
}

RegimeSpec default_regime(RegimeName r) {
  const double beta = 8.0 / 3.0;
  switch (r) {
    case RegimeName::StableCanonical:
      return {r, "Stable (Canonical)", {beta, 6.0, 10.0}, State3(-10, -5, 20), 10.0};
    case RegimeName::StableTransientChaos:
      return {r, "Stable (Transient Chaos)", {beta, 23.0, 10.0}, State3(-5, 5, 10), 10.0};
    case RegimeName::ChaoticButterfly:
      return {r, "Chaotic (Butterfly)", {beta, 28.0, 10.0}, State3(-8, 8, 27), 10.0};
    case RegimeName::ChaoticNoButterfly:
      return {r, "Chaotic (No Butterfly)", {beta, 28.0, 10.0}, State3(9.5, 7.5, 28), 10.0};
  }
  throw InvalidArgument("unknown regime");
}

RegimeSpec load_regime(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open regime file " + path.string());
  RegimeSpec spec;
  bool have_name = false, have_beta = false, have_rho = false, have_sigma = false,
       have_x0 = false;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto h = line.find('#'); h != std::string::npos) line.erase(h);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ParseError(path.string() + ": expected key=value", lineno, 1);
    const std::string key = trim(line.substr(0, eq));
    const std::string val = trim(line.substr(eq + 1));
    if (key == "name") {
      try {
        spec.name = regime_from_string(val);
      } catch (const InvalidArgument&) {
        throw ParseError(path.string() + ": unknown regime '" + val + "'", lineno, eq + 2);
      }
      have_name = true;
    } else if (key == "label") {
      spec.label = val;
    } else if (key == "beta") {
      spec.theta.beta = require_double(key, val, path, lineno);
      have_beta = true;
    } else if (key == "rho") {
      spec.theta.rho = require_double(key, val, path, lineno);
      have_rho = true;
    } else if (key == "sigma") {
      spec.theta.sigma = require_double(key, val, path, lineno);
      have_sigma = true;
    } else if (key == "truth_horizon") {
      spec.truth_horizon = require_double(key, val, path, lineno);
    } else if (key == "x0") {
      std::stringstream ss(val);
      std::string part;
      int i = 0;
      while (std::getline(ss, part, ',')) {
        if (i >= 3) throw ParseError(path.string() + ": x0 needs 3 entries", lineno, 1);
        spec.x0[i++] = require_double(key, part, path, lineno);
      }
      if (i != 3) throw ParseError(path.string() + ": x0 needs 3 entries", lineno, 1);
      have_x0 = true;
    } else {
      throw ParseError(path.string() + ": unknown key '" + key + "'", lineno, 1);
    }
  }
  if (!(have_name && have_beta && have_rho && have_sigma && have_x0))
    throw ParseError(path.string() + ": missing one of name, beta, rho, sigma, x0",
                     lineno, 1);
  if (!(spec.truth_horizon > 0.0))
    throw ParseError(path.string() + ": truth_horizon must be positive", lineno, 1);
  if (spec.label.empty()) spec.label = to_string(spec.name);
  return spec;
}

Trajectory ground_truth(const RegimeSpec& regime, const std::vector<double>& times) {
  if (times.empty()) return {};
  LorenzSystem lorenz;
  std::vector<double> grid;
  grid.reserve(times.size() + 1);
  const bool prepend = times.front() > 0.0;
  if (times.front() < 0.0) throw InvalidGrid("ground_truth: times must be >= 0");
  if (prepend) grid.push_back(0.0);
  grid.insert(grid.end(), times.begin(), times.end());
  Trajectory full = integrate(lorenz, regime.x0, regime.theta.to_vector(), grid);
  if (!prepend) return full;
  Trajectory out;
  out.times = times;
  out.values = full.values.bottomRows(static_cast<Eigen::Index>(times.size()));
  return out;
}

std::string check_regime_shape(const RegimeSpec& regime) {
  const long n = near_integer(regime.truth_horizon * kNoiseGridDensity);
  std::vector<double> grid;
  for (long j = 0; j <= std::max(n, 1L); ++j) grid.push_back(j / kNoiseGridDensity);
  const Trajectory tr = ground_truth(regime, grid);
  int flips = 0;
  for (Eigen::Index i = 1; i < tr.values.rows(); ++i)
    if (tr.values(i, 0) * tr.values(i - 1, 0) < 0.0) ++flips;
  const Theta& th = regime.theta;
  switch (regime.name) {
    case RegimeName::StableCanonical: {
      if (th.rho <= 1.0) return "rho <= 1 has no non-origin fixed points";
      const double a = std::sqrt(th.beta * (th.rho - 1.0));
      const State3 last = tr.values.bottomRows(1).transpose();
      const double dist = std::min((last - State3(a, a, th.rho - 1.0)).norm(),
                                   (last - State3(-a, -a, th.rho - 1.0)).norm());
      if (dist > 0.05)
        return "does not settle on a fixed point (distance " + format_double(dist) + ")";
      return "";
    }
    case RegimeName::StableTransientChaos:
    case RegimeName::ChaoticButterfly:
      if (flips < 2) return "x changes sign only " + std::to_string(flips) + " times";
      return "";
    case RegimeName::ChaoticNoButterfly:
      if (flips != 0) return "x changes sign " + std::to_string(flips) + " times";
      return "";
  }
  return "unknown regime";
}

Vector component_noise_sd(const Trajectory& truth, double alpha) {
  if (!(alpha >= 0.0)) throw InvalidArgument("component_noise_sd: alpha must be >= 0");
  if (truth.values.rows() == 0) throw InvalidArgument("component_noise_sd: empty truth");
  return alpha * (truth.values.colwise().maxCoeff() - truth.values.colwise().minCoeff())
                     .transpose();
}

ObservationSet make_dataset(const RegimeSpec& regime, double t_max, double d_obs,
                            double alpha, std::uint64_t seed) {
  if (!(d_obs > 0.0) || !std::isfinite(d_obs))
    throw InvalidGrid("make_dataset: d_obs must be positive");
  if (!(t_max > 0.0) || t_max > regime.truth_horizon + 1e-12)
    throw InvalidGrid("make_dataset: T_max must lie in (0, truth_horizon]");
  if (!(alpha >= 0.0) || !std::isfinite(alpha))
    throw InvalidArgument("make_dataset: alpha must be finite and >= 0");
  const long n_obs = near_integer(d_obs * t_max);
  if (n_obs <= 0) throw InvalidGrid("make_dataset: d_obs * T_max must be a positive integer");
  const long n_dense = near_integer(regime.truth_horizon * kNoiseGridDensity);
  if (n_dense <= 0) throw InvalidGrid("make_dataset: truth horizon * 40 must be an integer");

  // Dense truth drives the noise scale (range over the whole horizon).
  std::vector<double> dense;
  for (long j = 0; j <= n_dense; ++j) dense.push_back(j / kNoiseGridDensity);
  const Trajectory truth = ground_truth(regime, dense);
  const Vector sd = component_noise_sd(truth, alpha);
  const int d = 3;

  const std::uint64_t base_key = derive_key(seed, static_cast<std::uint64_t>(regime.name));
  const long stride = near_integer(kNoiseGridDensity / d_obs);

  ObservationSet out;
  out.meta = {to_string(regime.name), t_max, d_obs, alpha, seed};
  out.times.resize(static_cast<std::size_t>(n_obs));
  out.values.resize(n_obs, d);

  if (stride > 0) {
    // Subgrid of the 40-per-unit grid: share the noise stream.
    if (n_obs > n_dense / stride)
      throw InvalidGrid("make_dataset: observation grid exceeds truth horizon");
    CounterRng rng(base_key);
    Matrix noise(n_dense, d);
    for (long j = 0; j < n_dense; ++j)
      for (int c = 0; c < d; ++c) noise(j, c) = rng.normal();
    for (long i = 0; i < n_obs; ++i) {
      const long j = i * stride;
      out.times[static_cast<std::size_t>(i)] = static_cast<double>(i) / d_obs;
      for (int c = 0; c < d; ++c)
        out.values(i, c) = truth.values(j, c) + sd[c] * noise(j, c);
    }
  } else {
    // Densities that do not divide 40 get their own stream, still drawn over
    // the whole horizon before truncation.
    std::uint64_t bits = 0;
    static_assert(sizeof bits == sizeof d_obs);
    std::memcpy(&bits, &d_obs, sizeof bits);
    CounterRng rng(derive_key(base_key, bits));
    const long n_full =
        static_cast<long>(std::floor(regime.truth_horizon * d_obs + 1e-9));
    std::vector<double> obs_grid;
    for (long i = 0; i < n_obs; ++i) obs_grid.push_back(static_cast<double>(i) / d_obs);
    const Trajectory tr = ground_truth(regime, obs_grid);
    Matrix noise(std::max(n_full, n_obs), d);
    for (Eigen::Index j = 0; j < noise.rows(); ++j)
      for (int c = 0; c < d; ++c) noise(j, c) = rng.normal();
    out.times = obs_grid;
    for (long i = 0; i < n_obs; ++i)
      for (int c = 0; c < d; ++c) out.values(i, c) = tr.values(i, c) + sd[c] * noise(i, c);
  }
  return out;
}

}  // namespace magidyn
