#include "magidyn/report.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "json.hpp"

#include "magidyn/errors.hpp"
#include "magidyn/numfmt.hpp"

namespace magidyn {

namespace {

using nlohmann::ordered_json;

const char* const kThetaNames[] = {"beta", "rho", "sigma"};

std::string component_name(Eigen::Index c, Eigen::Index d) {
  if (d == 3) return std::string(1, "xyz"[c]);
  return "x" + std::to_string(c + 1);
}

std::string param_name(Eigen::Index j, Eigen::Index p) {
  if (p == 3) return kThetaNames[j];
  return "theta" + std::to_string(j + 1);
}

// NaN / inf are not JSON; they become null.
ordered_json num(double v) { return std::isfinite(v) ? ordered_json(v) : ordered_json(nullptr); }

ordered_json vec(const Vector& v) {
  ordered_json a = ordered_json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(num(v[i]));
  return a;
}

ordered_json config_json(const RunInfo& info) {
  ordered_json c = ordered_json::object();
  for (const auto& [k, v] : info.config) c[k] = v;
  return c;
}

ordered_json phi_json(const std::vector<KernelHyper>& phi) {
  ordered_json a = ordered_json::array();
  for (const auto& h : phi) a.push_back({{"phi1", num(h.phi1)}, {"phi2", num(h.phi2)}});
  return a;
}

ordered_json column_summary_json(const ColumnSummary& s, Eigen::Index p) {
  ordered_json names = ordered_json::array();
  for (Eigen::Index j = 0; j < s.mean.size(); ++j) names.push_back(param_name(j, p));
  return {{"names", names}, {"mean", vec(s.mean)}, {"sd", vec(s.sd)},
          {"q025", vec(s.lo)}, {"q975", vec(s.hi)}};
}

ordered_json posterior_body(const PosteriorSamples& ps, const RunInfo& info) {
  ordered_json j;
  const PosteriorSummary s = summarize(ps);
  j["theta"] = column_summary_json(s.theta, ps.p);
  if (ps.p == 3) {
    j["stability_probability"] = stability_probability(ps.theta_draws, info.sigma_override);
    j["sigma_override"] = info.sigma_override ? num(*info.sigma_override) : ordered_json(nullptr);
  }
  if (info.theta_true) {
    j["theta_true"] = vec(*info.theta_true);
    j["scaled_l1"] = vec(scaled_l1(ps.theta_draws, *info.theta_true));
  }
  j["noise_sd"] = {{"sampled", ps.sigma_sampled},
                   {"value", vec(ps.sigma_sampled ? s.sigma.mean : ps.sigma)}};
  j["phi"] = phi_json(ps.phi);
  j["sampler"] = {{"n_hmc", ps.n_hmc},
                  {"kept", ps.n_draws()},
                  {"accept_rate", num(ps.accept_rate)},
                  {"burn_in_accept_rate", num(ps.burn_in_accept_rate)},
                  {"step_size", num(ps.step_size)},
                  {"divergences", ps.divergences},
                  {"optimizer_iterations", ps.optimizer_iterations}};
  j["grid"] = {{"n_obs", ps.grid.tau_obs.size()},
               {"n_inference", ps.grid.tau_inf.size()},
               {"level", ps.grid.level},
               {"t_begin", num(ps.grid.tau_inf.front())},
               {"t_end", num(ps.grid.tau_inf.back())}};
  j["jitter"] = {{"C", ps.jitter_C}, {"K", ps.jitter_K}};
  j["x_abs_max"] = num(s.x_mean.size() ? s.x_mean.cwiseAbs().maxCoeff() : 0.0);
  return j;
}

std::string dump(const ordered_json& j) { return j.dump(2) + "\n"; }

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;
};

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string tok;
  while (std::getline(ss, tok, sep)) out.push_back(tok);
  if (!s.empty() && s.back() == sep) out.emplace_back();
  return out;
}

Table read_table(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  Table t;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    auto cells = split(line, ',');
    if (t.header.empty()) {
      t.header = cells;
      continue;
    }
    if (cells.size() != t.header.size())
      throw ParseError(path.string() + ": row " + std::to_string(lineno) + " has " +
                           std::to_string(cells.size()) + " fields, expected " +
                           std::to_string(t.header.size()),
                       lineno, 1);
    std::vector<double> row;
    std::size_t col = 1;
    for (const auto& c : cells) {
      auto v = c.empty() ? std::optional<double>(kMissing) : parse_double(c);
      if (!v) throw ParseError(path.string() + ": malformed number '" + c + "'", lineno, col);
      row.push_back(*v);
      col += c.size() + 1;
    }
    t.rows.push_back(std::move(row));
  }
  if (t.header.empty()) throw ParseError(path.string() + ": no header row", lineno, 1);
  return t;
}

}  // namespace

std::string schema_id(const std::string& kind) {
  return "magidyn." + kind + "/" + std::to_string(kSchemaVersion);
}

std::string posterior_json(const PosteriorSamples& ps, const RunInfo& info) {
  ordered_json j;
  j["schema"] = schema_id("posterior");
  j["command"] = info.command;
  j["config"] = config_json(info);
  if (info.pilot && info.pilot->ran) {
    j["pilot"] = {{"n_obs", info.pilot->n_obs},
                  {"phi", phi_json(info.pilot->phi)},
                  {"noise_sd", vec(info.pilot->sigma)},
                  {"theta_mean", vec(info.pilot->theta_mean)}};
  }
  j.update(posterior_body(ps, info));
  return dump(j);
}

std::string pmsp_json(const PmspResult& r, const RunInfo& info,
                      const std::optional<SmaeResult>& err) {
  ordered_json j;
  j["schema"] = schema_id("pmsp");
  j["command"] = info.command;
  j["config"] = config_json(info);
  ordered_json steps = ordered_json::array();
  for (const auto& c : r.checkpoints) {
    steps.push_back({{"step", c.step},
                     {"t_end", num(c.t_end)},
                     {"n_hmc", c.n_hmc},
                     {"burn_in_ratio", num(c.burn_in_ratio)},
                     {"n_inference", c.grid.size()},
                     {"theta_mean", vec(c.theta_mean)},
                     {"phi", phi_json(c.phi)},
                     {"noise_sd", vec(c.sigma)},
                     {"accept_rate", num(c.accept_rate)},
                     {"divergences", c.divergences},
                     {"ewsi_fallback", c.ewsi_fallback}});
  }
  j["steps"] = steps;
  j["prediction_times"] = {{"count", r.tau_add.size()},
                           {"t_begin", r.tau_add.empty() ? ordered_json(nullptr) : num(r.tau_add.front())},
                           {"t_end", r.tau_add.empty() ? ordered_json(nullptr) : num(r.tau_add.back())}};
  if (err) {
    j["prediction_smae"] = {{"value", vec(err->value)}, {"excluded", err->excluded}, {"rows", err->rows}};
  }
  j["final"] = posterior_body(r.final, info);
  return dump(j);
}

std::string metrics_json(const MetricReport& m, const RunInfo& info) {
  ordered_json j;
  j["schema"] = schema_id("metrics");
  j["command"] = info.command;
  j["config"] = config_json(info);
  j["n_draws"] = m.n_draws;
  if (m.theta_true.size() > 0) {
    j["theta_true"] = vec(m.theta_true);
    j["scaled_l1"] = vec(m.scaled_l1);
    j["mape"] = vec(m.mape);
  }
  if (m.n_draws > 0) {
    j["stability_probability"] = num(m.stability_probability);
    j["sigma_override"] = m.sigma_override ? num(*m.sigma_override) : ordered_json(nullptr);
  }
  if (m.smae) j["smae"] = {{"value", vec(m.smae->value)}, {"excluded", m.smae->excluded}, {"rows", m.smae->rows}};
  return dump(j);
}

std::string timing_json(const std::string& command, double seconds) {
  ordered_json j;
  j["schema"] = schema_id("timing");
  j["command"] = command;
  j["wall_seconds"] = num(seconds);
  return dump(j);
}

std::string trajectory_csv(const std::vector<double>& times, const Matrix& mean, const Matrix& lo,
                           const Matrix& hi) {
  const auto n = static_cast<Eigen::Index>(times.size());
  if (mean.rows() != n || lo.rows() != n || hi.rows() != n)
    throw InvalidArgument("trajectory_csv: row count mismatch");
  const Eigen::Index d = mean.cols();
  std::string out = "t";
  for (Eigen::Index c = 0; c < d; ++c) {
    const std::string nm = component_name(c, d);
    out += "," + nm + "_mean," + nm + "_lo," + nm + "_hi";
  }
  out += "\n";
  for (Eigen::Index i = 0; i < n; ++i) {
    out += format_double(times[static_cast<std::size_t>(i)]);
    for (Eigen::Index c = 0; c < d; ++c)
      out += "," + format_double(mean(i, c)) + "," + format_double(lo(i, c)) + "," + format_double(hi(i, c));
    out += "\n";
  }
  return out;
}

std::string checkpoint_csv(const PmspCheckpoint& cp) {
  std::string head = "# step=" + std::to_string(cp.step) + " t_end=" + format_double(cp.t_end) +
                     " n_hmc=" + std::to_string(cp.n_hmc) +
                     " burn_in=" + format_double(cp.burn_in_ratio) +
                     " ewsi_fallback=" + (cp.ewsi_fallback ? "1" : "0") + "\n";
  const Eigen::Index p = cp.theta_mean.size();
  auto line = [&](const char* label, const Vector& v) {
    std::string s = std::string("# theta_") + label;
    for (Eigen::Index j = 0; j < v.size(); ++j) s += " " + param_name(j, p) + "=" + format_double(v[j]);
    return s + "\n";
  };
  head += line("mean", cp.theta_mean) + line("sd", cp.theta_sd) + line("q025", cp.theta_lo) +
          line("q975", cp.theta_hi);
  head += "# phi";
  for (const auto& h : cp.phi) head += " " + format_double(h.phi1) + ":" + format_double(h.phi2);
  head += "\n# noise_sd";
  for (Eigen::Index c = 0; c < cp.sigma.size(); ++c) head += " " + format_double(cp.sigma[c]);
  head += "\n";
  return head + trajectory_csv(cp.grid, cp.x_mean, cp.x_lo, cp.x_hi);
}

Trajectory read_trajectory_csv(const std::filesystem::path& path) {
  const Table t = read_table(path);
  if (t.header.empty() || t.header[0] != "t")
    throw ParseError(path.string() + ": first column must be t", 1, 1);
  std::vector<std::size_t> cols;
  for (std::size_t k = 1; k < t.header.size(); ++k) {
    const std::string& h = t.header[k];
    if (h.size() > 5 && h.compare(h.size() - 5, 5, "_mean") == 0) cols.push_back(k);
  }
  if (cols.empty())
    for (std::size_t k = 1; k < t.header.size(); ++k) cols.push_back(k);
  Trajectory tr;
  tr.values.resize(static_cast<Eigen::Index>(t.rows.size()), static_cast<Eigen::Index>(cols.size()));
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    tr.times.push_back(t.rows[i][0]);
    for (std::size_t c = 0; c < cols.size(); ++c)
      tr.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c)) = t.rows[i][cols[c]];
  }
  return tr;
}

std::string theta_draws_csv(const Matrix& draws) {
  std::string out;
  for (Eigen::Index j = 0; j < draws.cols(); ++j)
    out += (j ? "," : "") + param_name(j, draws.cols());
  out += "\n";
  for (Eigen::Index i = 0; i < draws.rows(); ++i) {
    for (Eigen::Index j = 0; j < draws.cols(); ++j) out += (j ? "," : "") + format_double(draws(i, j));
    out += "\n";
  }
  return out;
}

Matrix read_theta_draws_csv(const std::filesystem::path& path) {
  const Table t = read_table(path);
  Matrix m(static_cast<Eigen::Index>(t.rows.size()), static_cast<Eigen::Index>(t.header.size()));
  for (std::size_t i = 0; i < t.rows.size(); ++i)
    for (std::size_t j = 0; j < t.header.size(); ++j) {
      const double v = t.rows[i][j];
      if (!std::isfinite(v)) throw ParseError(path.string() + ": non-finite draw", i + 2, j + 1);
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = v;
    }
  return m;
}

void write_text_file(const std::filesystem::path& path, const std::string& content) {
  std::error_code ec;
  if (path.has_parent_path()) {
    std::filesystem::create_directories(path.parent_path(), ec);
    if (ec) throw IoError("cannot create directory " + path.parent_path().string() + ": " + ec.message());
  }
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open " + tmp.string() + " for writing");
    out << content;
    if (!out) throw IoError("write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw IoError("cannot rename " + tmp.string() + " to " + path.string() + ": " + ec.message());
}

}  // namespace magidyn
