#include "cli.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <mutex>
#include <optional>
#include <set>
#include <sstream>
#include <thread>

#include "CLI11.hpp"
#include "magidyn/analysis.hpp"
#include "magidyn/errors.hpp"
#include "magidyn/numfmt.hpp"
#include "magidyn/pmagi.hpp"
#include "magidyn/pmsp.hpp"
#include "magidyn/report.hpp"
#include "magidyn/testbed.hpp"

namespace magidyn::cli {

namespace fs = std::filesystem;

namespace {

// Dataset selection shared by the inference commands: either a CSV file or
// an in-memory dataset generated from a regime.
struct DataOptions {
  std::string data_file;
  std::string regime = "stable_canonical";
  std::string regime_file;
  double tmax = 2.0;
  double dobs = 40.0;
  double alpha = 1.5e-3;
  std::uint64_t seed = 1;
};

struct SamplerOptions {
  long hmc_steps = 16001;
  double burn_in = 0.5;
  int leapfrog = 20;
  std::optional<int> disc;
  std::optional<double> sigma_override;
};

struct PmagiOptions {
  DataOptions data;
  SamplerOptions sampler;
  double pilot_len = 1.0;
  int pilot_disc = 0;
  long pilot_hmc_steps = 4001;
};

struct PmspOptions {
  DataOptions data;
  SamplerOptions sampler;
  std::string mode = "ROP";
  double dt_pred = 0.5;
  double dt_step = 0.5;
  std::optional<long> hmc_init;
  std::optional<long> hmc_peak;
  long pilot_hmc_steps = 4001;
  long repilot_hmc_steps = 101;
  double burn_in_later = 0.2;
};

struct GenerateOptions {
  std::vector<std::string> regimes;
  std::string regime_file;
  std::vector<double> tmax{10.0};
  std::vector<double> dobs{40.0};
  std::vector<double> alpha{1.5e-3};
  std::vector<std::uint64_t> seeds{1};
};

struct ClassifyOptions {
  std::string draws_file;
  std::optional<double> sigma_override;
};

struct MetricsOptions {
  std::string pred_file;
  std::string truth_file;
  std::string regime;
  std::string regime_file;
  std::string draws_file;
  std::vector<double> theta_true;
  std::optional<double> sigma_override;
};

struct BenchOptions {
  std::string method = "pmagi";
  std::vector<std::string> regimes{"stable_canonical"};
  std::vector<double> tmax{2.0};
  std::vector<double> dobs{40.0};
  std::vector<double> alpha{1.5e-3};
  std::vector<std::uint64_t> seeds{1};
  std::vector<double> pilot_len{1.0};
  std::vector<int> pilot_disc{0};
  std::vector<std::string> modes{"ROP"};
  double dt_pred = 0.5;
  std::vector<double> dt_step{0.5};
  long hmc_steps = 4001;
  long pilot_hmc_steps = 4001;
  int jobs = 1;
};

struct Common {
  std::string out;
  std::string name;
};

fs::path output_root(const Common& c) {
  if (!c.out.empty()) return c.out;
  if (const char* env = std::getenv("MAGIDYN_OUT"); env && *env) return env;
  return "magidyn_out";
}

void check_dobs(double d) {
  if (d != 5.0 && d != 10.0 && d != 20.0 && d != 40.0)
    throw InvalidArgument("unsupported observation density " + format_double(d) +
                          " (expected 5, 10, 20 or 40)");
}

RegimeSpec resolve_regime(const std::string& name, const std::string& file) {
  if (!file.empty()) return load_regime(file);
  return default_regime(regime_from_string(name));
}

std::string tag(double v) { return format_double(v); }

std::string dataset_stem(const RegimeSpec& r, double tmax, double dobs, double alpha,
                         std::uint64_t seed) {
  return regime_file_stem(r.name) + "_T" + tag(tmax) + "_d" + tag(dobs) + "_a" + tag(alpha) +
         "_s" + std::to_string(seed);
}

struct LoadedData {
  ObservationSet obs;
  std::optional<RegimeSpec> regime;  // known when truth can be computed
  std::string stem;
};

LoadedData load_data(const DataOptions& o) {
  LoadedData d;
  if (!o.data_file.empty()) {
    d.obs = read_csv(o.data_file);
    if (!o.regime_file.empty()) {
      d.regime = load_regime(o.regime_file);
    } else {
      try {
        d.regime = default_regime(regime_from_string(d.obs.meta.regime));
      } catch (const InvalidArgument&) {
      }
    }
    d.stem = fs::path(o.data_file).stem().string();
    return d;
  }
  check_dobs(o.dobs);
  d.regime = resolve_regime(o.regime, o.regime_file);
  d.obs = make_dataset(*d.regime, o.tmax, o.dobs, o.alpha, o.seed);
  d.stem = dataset_stem(*d.regime, o.tmax, o.dobs, o.alpha, o.seed);
  return d;
}

// Discretization of the main run: explicit, else the density default.
int main_level(const SamplerOptions& s, const ObservationSet& obs) {
  if (s.disc) {
    if (*s.disc < 0) throw InvalidArgument("--disc must be >= 0");
    return *s.disc;
  }
  if (obs.size() < 2) throw InvalidArgument("dataset has fewer than 2 rows");
  return default_discretization(std::round(1.0 / (obs.times[1] - obs.times[0])));
}

ConfigEcho data_echo(const DataOptions& o, const LoadedData& d) {
  ConfigEcho e;
  if (!o.data_file.empty()) e.emplace_back("data", fs::path(o.data_file).filename().string());
  e.emplace_back("regime", d.obs.meta.regime);
  e.emplace_back("tmax", tag(d.obs.meta.t_max));
  e.emplace_back("dobs", tag(d.obs.meta.d_obs));
  e.emplace_back("alpha", tag(d.obs.meta.alpha));
  e.emplace_back("seed", std::to_string(d.obs.meta.seed));
  return e;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// ---- generate ---------------------------------------------------------------

int cmd_generate(const GenerateOptions& o, const Common& c, std::ostream& out) {
  for (double d : o.dobs) check_dobs(d);
  std::vector<RegimeSpec> regimes;
  if (!o.regime_file.empty()) regimes.push_back(load_regime(o.regime_file));
  for (const auto& r : o.regimes) regimes.push_back(default_regime(regime_from_string(r)));
  if (regimes.empty())
    for (RegimeName r : kAllRegimes) regimes.push_back(default_regime(r));
  // Build everything first so a bad setting fails before any write.
  std::vector<std::pair<fs::path, ObservationSet>> sets;
  const fs::path dir = output_root(c) / "data";
  for (const auto& r : regimes)
    for (double t : o.tmax)
      for (double d : o.dobs)
        for (double a : o.alpha)
          for (std::uint64_t s : o.seeds)
            sets.emplace_back(dir / (dataset_stem(r, t, d, a, s) + ".csv"), make_dataset(r, t, d, a, s));
  fs::create_directories(dir);
  for (const auto& [path, set] : sets) {
    write_csv(set, path);
    out << path.string() << "\n";
  }
  return kExitOk;
}

// ---- pmagi ------------------------------------------------------------------

int cmd_pmagi(const PmagiOptions& o, const Common& c, std::ostream& out) {
  const auto t0 = std::chrono::steady_clock::now();
  const LoadedData d = load_data(o.data);
  PilotSettings ps;
  ps.t_max_pilot = o.pilot_len;
  ps.d_pilot = o.pilot_disc;
  ps.n_hmc_pilot = o.pilot_hmc_steps;
  ps.n_hmc_main = o.sampler.hmc_steps;
  ps.d_main = main_level(o.sampler, d.obs);
  SolverSettings ss;
  ss.burn_in_ratio = o.sampler.burn_in;
  ss.leapfrog_steps = o.sampler.leapfrog;
  ss.seed = d.obs.meta.seed;
  LorenzSystem lorenz;
  PilotResult pilot;
  const PosteriorSamples post = pmagi(d.obs, lorenz, ps, ss, &pilot);

  RunInfo info;
  info.command = "pmagi";
  info.config = data_echo(o.data, d);
  info.config.emplace_back("pilot_len", tag(o.pilot_len));
  info.config.emplace_back("pilot_disc", std::to_string(o.pilot_disc));
  info.config.emplace_back("pilot_hmc_steps", std::to_string(o.pilot_hmc_steps));
  info.config.emplace_back("disc", std::to_string(ps.d_main));
  info.config.emplace_back("hmc_steps", std::to_string(o.sampler.hmc_steps));
  info.config.emplace_back("burn_in", tag(o.sampler.burn_in));
  info.config.emplace_back("leapfrog", std::to_string(o.sampler.leapfrog));
  if (d.regime) info.theta_true = d.regime->theta.to_vector();
  info.sigma_override = o.sampler.sigma_override;
  info.pilot = pilot;

  const fs::path dir = output_root(c) / (c.name.empty() ? "pmagi_" + d.stem : c.name);
  const PosteriorSummary s = summarize(post);
  write_text_file(dir / "posterior.json", posterior_json(post, info));
  write_text_file(dir / "trajectory.csv", trajectory_csv(s.times, s.x_mean, s.x_lo, s.x_hi));
  write_text_file(dir / "theta_draws.csv", theta_draws_csv(post.theta_draws));
  write_text_file(dir / "timing.json", timing_json("pmagi", seconds_since(t0)));
  const Vector th = post.theta_mean();
  out << "theta mean:";
  for (Eigen::Index j = 0; j < th.size(); ++j) out << " " << format_double(th[j]);
  out << "\nwrote " << dir.string() << "\n";
  return kExitOk;
}

// ---- pmsp -------------------------------------------------------------------

PmspSettings pmsp_settings(const PmspOptions& o, const ObservationSet& obs) {
  PmspSettings s;
  s.dt_pred = o.dt_pred;
  s.dt_step = o.dt_step;
  s.mode = pilot_mode_from_string(o.mode);
  s.level = main_level(o.sampler, obs);
  s.n_hmc_init = o.hmc_init.value_or(o.sampler.hmc_steps);
  s.n_hmc_peak = o.hmc_peak.value_or(o.sampler.hmc_steps);
  s.burn_in_first = o.sampler.burn_in;
  s.burn_in_later = o.burn_in_later;
  s.n_hmc_pilot = o.pilot_hmc_steps;
  s.n_hmc_repilot = o.repilot_hmc_steps;
  s.solver.leapfrog_steps = o.sampler.leapfrog;
  s.solver.seed = obs.meta.seed;
  return s;
}

Trajectory prediction_of(const PmspResult& r) {
  Trajectory p;
  p.times = r.tau_add;
  const Matrix xm = r.final.x_mean();
  p.values = xm.bottomRows(static_cast<Eigen::Index>(r.tau_add.size()));
  return p;
}

int cmd_pmsp(const PmspOptions& o, const Common& c, std::ostream& out) {
  const auto t0 = std::chrono::steady_clock::now();
  const LoadedData d = load_data(o.data);
  const PmspSettings settings = pmsp_settings(o, d.obs);
  const double t_max = d.obs.meta.t_max;
  const fs::path dir = output_root(c) / (c.name.empty() ? "pmsp_" + o.mode + "_" + d.stem : c.name);
  LorenzSystem lorenz;
  const PmspResult r = pmsp(d.obs, t_max, lorenz, settings, [&](const PmspCheckpoint& cp) {
    write_text_file(dir / "checkpoints" / ("step_" + std::to_string(cp.step) + ".csv"), checkpoint_csv(cp));
  });

  RunInfo info;
  info.command = "pmsp";
  info.config = data_echo(o.data, d);
  info.config.emplace_back("mode", o.mode);
  info.config.emplace_back("dt_pred", tag(o.dt_pred));
  info.config.emplace_back("dt_step", tag(o.dt_step));
  info.config.emplace_back("disc", std::to_string(settings.level));
  info.config.emplace_back("hmc_init", std::to_string(settings.n_hmc_init));
  info.config.emplace_back("hmc_peak", std::to_string(settings.n_hmc_peak));
  info.config.emplace_back("pilot_hmc_steps", std::to_string(settings.n_hmc_pilot));
  info.config.emplace_back("repilot_hmc_steps", std::to_string(settings.n_hmc_repilot));
  info.config.emplace_back("burn_in", tag(settings.burn_in_first));
  info.config.emplace_back("burn_in_later", tag(settings.burn_in_later));
  info.config.emplace_back("leapfrog", std::to_string(o.sampler.leapfrog));
  if (d.regime) info.theta_true = d.regime->theta.to_vector();
  info.sigma_override = o.sampler.sigma_override;

  const Trajectory pred = prediction_of(r);
  std::optional<SmaeResult> err;
  if (d.regime) err = smae(pred, ground_truth(*d.regime, pred.times));

  const PosteriorSummary s = summarize(r.final);
  const auto n_pred = static_cast<Eigen::Index>(r.tau_add.size());
  write_text_file(dir / "pmsp.json", pmsp_json(r, info, err));
  write_text_file(dir / "trajectory.csv", trajectory_csv(s.times, s.x_mean, s.x_lo, s.x_hi));
  write_text_file(dir / "prediction.csv",
                  trajectory_csv(r.tau_add, s.x_mean.bottomRows(n_pred), s.x_lo.bottomRows(n_pred),
                                 s.x_hi.bottomRows(n_pred)));
  write_text_file(dir / "theta_draws.csv", theta_draws_csv(r.final.theta_draws));
  write_text_file(dir / "timing.json", timing_json("pmsp", seconds_since(t0)));
  if (err) {
    out << "prediction sMAE:";
    for (Eigen::Index j = 0; j < err->value.size(); ++j) out << " " << format_double(err->value[j]);
    out << "\n";
  }
  out << "wrote " << dir.string() << "\n";
  return kExitOk;
}

// ---- classify / metrics -----------------------------------------------------

int cmd_classify(const ClassifyOptions& o, const Common& c, std::ostream& out) {
  const Matrix draws = read_theta_draws_csv(o.draws_file);
  if (draws.cols() != 3) throw ParseError(o.draws_file + ": expected columns beta,rho,sigma", 1, 1);
  MetricReport m;
  m.n_draws = draws.rows();
  m.stability_probability = stability_probability(draws, o.sigma_override);
  m.sigma_override = o.sigma_override;
  RunInfo info;
  info.command = "classify";
  info.config.emplace_back("draws", fs::path(o.draws_file).filename().string());
  if (o.sigma_override) info.config.emplace_back("sigma_override", tag(*o.sigma_override));
  const fs::path dir = output_root(c) / (c.name.empty() ? "classify" : c.name);
  write_text_file(dir / "classify.json", metrics_json(m, info));
  out << "stability probability: " << format_double(m.stability_probability) << "\n";
  return kExitOk;
}

int cmd_metrics(const MetricsOptions& o, const Common& c, std::ostream& out) {
  MetricReport m;
  RunInfo info;
  info.command = "metrics";
  if (!o.pred_file.empty()) {
    const Trajectory pred = read_trajectory_csv(o.pred_file);
    info.config.emplace_back("pred", fs::path(o.pred_file).filename().string());
    Trajectory truth;
    if (!o.truth_file.empty()) {
      truth = read_trajectory_csv(o.truth_file);
      info.config.emplace_back("truth", fs::path(o.truth_file).filename().string());
    } else if (!o.regime.empty() || !o.regime_file.empty()) {
      const RegimeSpec r = resolve_regime(o.regime, o.regime_file);
      truth = ground_truth(r, pred.times);
      info.config.emplace_back("regime", to_string(r.name));
    } else {
      throw InvalidArgument("--pred needs --truth or --regime");
    }
    m.smae = smae(pred, truth);
  }
  if (!o.draws_file.empty()) {
    const Matrix draws = read_theta_draws_csv(o.draws_file);
    info.config.emplace_back("draws", fs::path(o.draws_file).filename().string());
    Vector truth;
    if (!o.theta_true.empty()) {
      truth = Eigen::Map<const Vector>(o.theta_true.data(), static_cast<Eigen::Index>(o.theta_true.size()));
    } else if (!o.regime.empty() || !o.regime_file.empty()) {
      truth = resolve_regime(o.regime, o.regime_file).theta.to_vector();
    }
    m.n_draws = draws.rows();
    if (truth.size() > 0) {
      m.theta_true = truth;
      m.scaled_l1 = scaled_l1(draws, truth);
      m.mape = m.scaled_l1;
    }
    if (draws.cols() == 3) m.stability_probability = stability_probability(draws, o.sigma_override);
    m.sigma_override = o.sigma_override;
  }
  if (o.pred_file.empty() && o.draws_file.empty())
    throw InvalidArgument("metrics needs --pred and/or --draws");
  const fs::path dir = output_root(c) / (c.name.empty() ? "metrics" : c.name);
  write_text_file(dir / "metrics.json", metrics_json(m, info));
  if (m.smae) {
    out << "sMAE:";
    for (Eigen::Index j = 0; j < m.smae->value.size(); ++j) out << " " << format_double(m.smae->value[j]);
    out << "\n";
  }
  if (m.scaled_l1.size() > 0) {
    out << "scaled L1:";
    for (Eigen::Index j = 0; j < m.scaled_l1.size(); ++j) out << " " << format_double(m.scaled_l1[j]);
    out << "\n";
  }
  return kExitOk;
}

// ---- bench ------------------------------------------------------------------

struct BenchRun {
  std::string regime;
  double tmax, dobs, alpha;
  std::uint64_t seed;
  double pilot_len = 0.0;
  int pilot_disc = 0;
  std::string mode;
  double dt_step = 0.0;
};

std::string csv_safe(std::string s) {
  std::replace(s.begin(), s.end(), ',', ';');
  std::replace(s.begin(), s.end(), '\n', ' ');
  return s;
}

int cmd_bench(const BenchOptions& o, const Common& c, std::ostream& out) {
  if (o.method != "pmagi" && o.method != "pmsp") throw InvalidArgument("--method must be pmagi or pmsp");
  if (o.jobs < 1) throw InvalidArgument("--jobs must be >= 1");
  for (double d : o.dobs) check_dobs(d);
  for (const auto& r : o.regimes) regime_from_string(r);
  for (const auto& m : o.modes) pilot_mode_from_string(m);

  std::vector<BenchRun> runs;
  for (const auto& r : o.regimes)
    for (double t : o.tmax)
      for (double d : o.dobs)
        for (double a : o.alpha)
          for (std::uint64_t s : o.seeds) {
            if (o.method == "pmagi") {
              for (double pl : o.pilot_len)
                for (int pd : o.pilot_disc) runs.push_back({r, t, d, a, s, pl, pd, "", 0.0});
            } else {
              for (const auto& m : o.modes)
                for (double st : o.dt_step) runs.push_back({r, t, d, a, s, 0.0, 0, m, st});
            }
          }

  const fs::path root = output_root(c);
  fs::create_directories(root);
  const fs::path csv = root / (c.name.empty() ? "bench.csv" : c.name + ".csv");
  const bool fresh = !fs::exists(csv) || fs::file_size(csv) == 0;
  std::ofstream file(csv, std::ios::binary | std::ios::app);
  if (!file) throw IoError("cannot open " + csv.string());
  if (fresh)
    file << "run,method,regime,tmax,dobs,alpha,seed,pilot_len,pilot_disc,mode,dt_pred,dt_step,metric,value,error\n"
         << std::flush;

  std::mutex mu;
  std::atomic<std::size_t> next{0};
  std::atomic<int> failures{0};
  auto worker = [&]() {
    for (std::size_t i = next++; i < runs.size(); i = next++) {
      const BenchRun& br = runs[i];
      std::vector<std::pair<std::string, double>> metrics;
      std::string error;
      try {
        const RegimeSpec regime = default_regime(regime_from_string(br.regime));
        const ObservationSet obs = make_dataset(regime, br.tmax, br.dobs, br.alpha, br.seed);
        const Vector truth = regime.theta.to_vector();
        LorenzSystem lorenz;
        const char* names[] = {"beta", "rho", "sigma"};
        if (o.method == "pmagi") {
          PilotSettings ps;
          ps.t_max_pilot = br.pilot_len;
          ps.d_pilot = br.pilot_disc;
          ps.n_hmc_pilot = o.pilot_hmc_steps;
          ps.n_hmc_main = o.hmc_steps;
          ps.d_main = default_discretization(br.dobs);
          SolverSettings ss;
          ss.seed = br.seed;
          const PosteriorSamples post = pmagi(obs, lorenz, ps, ss);
          const Vector th = post.theta_mean();
          const Vector l1 = scaled_l1(post.theta_draws, truth);
          for (int j = 0; j < 3; ++j) {
            metrics.emplace_back(std::string("theta_mean_") + names[j], th[j]);
            metrics.emplace_back(std::string("scaled_l1_") + names[j], l1[j]);
          }
          metrics.emplace_back("stability_probability", stability_probability(post.theta_draws));
          metrics.emplace_back("accept_rate", post.accept_rate);
        } else {
          PmspOptions po;
          po.mode = br.mode;
          po.dt_pred = o.dt_pred;
          po.dt_step = br.dt_step;
          po.sampler.hmc_steps = o.hmc_steps;
          po.pilot_hmc_steps = o.pilot_hmc_steps;
          const PmspResult r = pmsp(obs, br.tmax, lorenz, pmsp_settings(po, obs));
          const Trajectory pred = prediction_of(r);
          const SmaeResult e = smae(pred, ground_truth(regime, pred.times));
          const char* comp[] = {"x", "y", "z"};
          for (int j = 0; j < 3; ++j) metrics.emplace_back(std::string("smae_") + comp[j], e.value[j]);
          const Vector th = r.final.theta_mean();
          for (int j = 0; j < 3; ++j) metrics.emplace_back(std::string("theta_mean_") + names[j], th[j]);
        }
      } catch (const std::exception& ex) {
        error = csv_safe(ex.what());
        ++failures;
      }
      std::ostringstream rows;
      const std::string prefix =
          std::to_string(i) + "," + o.method + "," + br.regime + "," + tag(br.tmax) + "," + tag(br.dobs) +
          "," + tag(br.alpha) + "," + std::to_string(br.seed) + "," +
          (o.method == "pmagi" ? tag(br.pilot_len) + "," + std::to_string(br.pilot_disc) + ",,,,"
                               : ",," + br.mode + "," + tag(o.dt_pred) + "," + tag(br.dt_step) + ",");
      if (!error.empty()) rows << prefix << "error,," << error << "\n";
      for (const auto& [k, v] : metrics) rows << prefix << k << "," << format_double(v) << ",\n";
      std::lock_guard<std::mutex> lock(mu);
      file << rows.str() << std::flush;
      out << "run " << i + 1 << "/" << runs.size() << (error.empty() ? " ok" : " failed: " + error) << "\n";
    }
  };
  std::vector<std::thread> pool;
  const int n_threads = std::min<int>(o.jobs, static_cast<int>(std::max<std::size_t>(runs.size(), 1)));
  for (int t = 1; t < n_threads; ++t) pool.emplace_back(worker);
  worker();
  for (auto& th : pool) th.join();
  out << "wrote " << csv.string() << " (" << runs.size() << " runs, " << failures.load() << " failed)\n";
  return kExitOk;
}

// ---- plumbing ---------------------------------------------------------------

void add_data_options(CLI::App* app, DataOptions& o) {
  app->add_option("--data", o.data_file, "Dataset CSV (otherwise generated from the regime flags)");
  app->add_option("--regime", o.regime, "Regime name, e.g. stable_canonical")->capture_default_str();
  app->add_option("--regime-file", o.regime_file, "Regime key=value file");
  app->add_option("--tmax", o.tmax, "Observation horizon")->capture_default_str();
  app->add_option("--dobs", o.dobs, "Observations per unit time (5, 10, 20, 40)")->capture_default_str();
  app->add_option("--alpha", o.alpha, "Noise level as a fraction of component range")->capture_default_str();
  app->add_option("--seed", o.seed, "Dataset and sampler seed")->capture_default_str();
}

void add_sampler_options(CLI::App* app, SamplerOptions& o) {
  app->add_option("--hmc-steps", o.hmc_steps, "HMC iterations of the main run")->capture_default_str();
  app->add_option("--burn-in", o.burn_in, "Burn-in fraction")->capture_default_str();
  app->add_option("--leapfrog", o.leapfrog, "Leapfrog steps per iteration")->capture_default_str();
  app->add_option("--disc", o.disc, "Discretization level (default from --dobs)");
  app->add_option("--sigma-override", o.sigma_override, "Fixed Lorenz sigma for the stability estimate");
}

void add_common(CLI::App* app, Common& c) {
  app->add_option("--out", c.out, "Output root (default $MAGIDYN_OUT or ./magidyn_out)");
  app->add_option("--name", c.name, "Run directory name under the output root");
  app->add_option("--config", "key=value file mirroring the flags");
}

int code_for(const std::exception& e) {
  if (dynamic_cast<const IoError*>(&e) || dynamic_cast<const ParseError*>(&e)) return kExitData;
  if (dynamic_cast<const InvalidArgument*>(&e) || dynamic_cast<const InvalidGrid*>(&e) ||
      dynamic_cast<const PilotTooShort*>(&e) || dynamic_cast<const DegenerateDenominator*>(&e))
    return kExitUsage;
  if (dynamic_cast<const fs::filesystem_error*>(&e)) return kExitData;
  return kExitSolver;
}

std::vector<std::string> split_list(const std::string& v) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : v) {
    if (ch == ',') {
      out.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(ch);
    }
  }
  out.push_back(cur);
  return out;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

}  // namespace

std::vector<std::string> expand_config(const std::vector<std::string>& args) {
  std::vector<std::string> rest;
  std::string config;
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size()) {
      config = args[++i];
    } else if (args[i].rfind("--config=", 0) == 0) {
      config = args[i].substr(9);
    } else {
      rest.push_back(args[i]);
    }
  }
  if (config.empty()) return rest;
  std::set<std::string> given;
  for (const auto& a : rest)
    if (a.rfind("--", 0) == 0) given.insert(a.substr(2, a.find('=') == std::string::npos ? std::string::npos : a.find('=') - 2));
  std::ifstream in(config);
  if (!in) throw IoError("cannot open config file " + config);
  std::vector<std::string> injected;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ParseError(config + ": expected key=value", lineno, 1);
    std::string key = trim(line.substr(0, eq));
    std::replace(key.begin(), key.end(), '_', '-');
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty()) throw ParseError(config + ": empty key", lineno, 1);
    if (given.count(key)) continue;
    for (const auto& v : split_list(value)) {
      injected.push_back("--" + key);
      injected.push_back(trim(v));
    }
  }
  // The subcommand must come first; configuration follows it.
  std::vector<std::string> out;
  if (!rest.empty()) out.push_back(rest.front());
  out.insert(out.end(), injected.begin(), injected.end());
  if (!rest.empty()) out.insert(out.end(), rest.begin() + 1, rest.end());
  return out;
}

int run(const std::vector<std::string>& raw, std::ostream& out, std::ostream& err) {
  CLI::App app{"magidyn: MAGI inference and sequential prediction for Lorenz test beds", "magidyn"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "magidyn 0.1.0");

  Common common;
  GenerateOptions gen;
  PmagiOptions pm;
  PmspOptions ps;
  ClassifyOptions cl;
  MetricsOptions me;
  BenchOptions be;

  auto* g = app.add_subcommand("generate", "Write noisy datasets as CSV");
  g->add_option("--regime", gen.regimes, "Regimes (default: all four)")->delimiter(',');
  g->add_option("--regime-file", gen.regime_file, "Extra regime key=value file");
  g->add_option("--tmax", gen.tmax, "Horizons")->delimiter(',')->capture_default_str();
  g->add_option("--dobs", gen.dobs, "Densities")->delimiter(',')->capture_default_str();
  g->add_option("--alpha", gen.alpha, "Noise levels")->delimiter(',')->capture_default_str();
  g->add_option("--seed,--seeds", gen.seeds, "Seeds")->delimiter(',')->capture_default_str();
  add_common(g, common);

  auto* p = app.add_subcommand("pmagi", "Pilot MAGI on one dataset");
  add_data_options(p, pm.data);
  add_sampler_options(p, pm.sampler);
  p->add_option("--pilot-len", pm.pilot_len, "Pilot window length (0 = plain MAGI)")->capture_default_str();
  p->add_option("--pilot-disc", pm.pilot_disc, "Pilot discretization level")->capture_default_str();
  p->add_option("--pilot-hmc-steps", pm.pilot_hmc_steps, "HMC iterations of the pilot")->capture_default_str();
  add_common(p, common);

  auto* s = app.add_subcommand("pmsp", "Sequential prediction beyond the observed window");
  add_data_options(s, ps.data);
  add_sampler_options(s, ps.sampler);
  s->add_option("--mode", ps.mode, "NP, LP, RP, LOP or ROP")->capture_default_str();
  s->add_option("--dt-pred", ps.dt_pred, "Prediction horizon")->capture_default_str();
  s->add_option("--dt-step", ps.dt_step, "Sequential step")->capture_default_str();
  s->add_option("--hmc-init", ps.hmc_init, "HMC iterations of step 1 (default --hmc-steps)");
  s->add_option("--hmc-peak", ps.hmc_peak, "HMC iterations of the last step (default --hmc-steps)");
  s->add_option("--pilot-hmc-steps", ps.pilot_hmc_steps, "HMC iterations of the first pilot")->capture_default_str();
  s->add_option("--repilot-hmc-steps", ps.repilot_hmc_steps, "HMC iterations of online pilots")->capture_default_str();
  s->add_option("--burn-in-later", ps.burn_in_later, "Burn-in fraction after step 1")->capture_default_str();
  add_common(s, common);

  auto* c = app.add_subcommand("classify", "Stability probability from theta draws");
  c->add_option("--draws", cl.draws_file, "theta_draws.csv")->required();
  c->add_option("--sigma-override", cl.sigma_override, "Fixed Lorenz sigma");
  add_common(c, common);

  auto* m = app.add_subcommand("metrics", "sMAE and scaled L1 from saved outputs");
  m->add_option("--pred", me.pred_file, "Trajectory CSV to score");
  m->add_option("--truth", me.truth_file, "Reference trajectory CSV");
  m->add_option("--regime", me.regime, "Regime for ground truth and true theta");
  m->add_option("--regime-file", me.regime_file, "Regime key=value file");
  m->add_option("--draws", me.draws_file, "theta_draws.csv");
  m->add_option("--theta-true", me.theta_true, "True theta")->delimiter(',');
  m->add_option("--sigma-override", me.sigma_override, "Fixed Lorenz sigma");
  add_common(m, common);

  auto* b = app.add_subcommand("bench", "Sweep settings and append long-format results");
  b->add_option("--method", be.method, "pmagi or pmsp")->capture_default_str();
  b->add_option("--regime", be.regimes, "Regimes")->delimiter(',')->capture_default_str();
  b->add_option("--tmax", be.tmax, "Horizons")->delimiter(',')->capture_default_str();
  b->add_option("--dobs", be.dobs, "Densities")->delimiter(',')->capture_default_str();
  b->add_option("--alpha", be.alpha, "Noise levels")->delimiter(',')->capture_default_str();
  b->add_option("--seed,--seeds", be.seeds, "Seeds")->delimiter(',')->capture_default_str();
  b->add_option("--pilot-len", be.pilot_len, "Pilot lengths")->delimiter(',')->capture_default_str();
  b->add_option("--pilot-disc", be.pilot_disc, "Pilot levels")->delimiter(',')->capture_default_str();
  b->add_option("--mode", be.modes, "Pilot modes (pmsp)")->delimiter(',')->capture_default_str();
  b->add_option("--dt-pred", be.dt_pred, "Prediction horizon (pmsp)")->capture_default_str();
  b->add_option("--dt-step", be.dt_step, "Sequential steps (pmsp)")->delimiter(',')->capture_default_str();
  b->add_option("--hmc-steps", be.hmc_steps, "HMC iterations per run")->capture_default_str();
  b->add_option("--pilot-hmc-steps", be.pilot_hmc_steps, "HMC iterations per pilot")->capture_default_str();
  b->add_option("--jobs", be.jobs, "Concurrent runs")->capture_default_str();
  add_common(b, common);

  try {
    std::vector<std::string> args = expand_config(raw);
    std::reverse(args.begin(), args.end());  // CLI11 consumes from the back
    app.parse(args);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e, out, err);
    return rc == 0 ? kExitOk : kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return code_for(e);
  }

  try {
    if (g->parsed()) return cmd_generate(gen, common, out);
    if (p->parsed()) return cmd_pmagi(pm, common, out);
    if (s->parsed()) return cmd_pmsp(ps, common, out);
    if (c->parsed()) return cmd_classify(cl, common, out);
    if (m->parsed()) return cmd_metrics(me, common, out);
    if (b->parsed()) return cmd_bench(be, common, out);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return code_for(e);
  }
  return kExitUsage;
}

}  // namespace magidyn::cli
