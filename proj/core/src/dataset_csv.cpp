#include <cmath>
#include <fstream>
#include <sstream>

#include "magidyn/errors.hpp"
#include "magidyn/numfmt.hpp"
#include "magidyn/testbed.hpp"

namespace magidyn {

namespace {

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : s) {
    if (ch == sep) {
      out.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(ch);
    }
  }
  out.push_back(cur);
  return out;
}

std::string strip_cr(std::string s) {
  if (!s.empty() && s.back() == '\r') s.pop_back();
  return s;
}

std::string column_name(int c, int d) {
  if (d == 3) return std::string(1, "xyz"[c]);
  return "x" + std::to_string(c + 1);
}

}  // namespace

void write_csv(const ObservationSet& set, const std::filesystem::path& path) {
  if (set.values.rows() != set.size())
    throw InvalidArgument("write_csv: times and values disagree in length");
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  const auto& m = set.meta;
  out << "# regime=" << m.regime << " Tmax=" << format_double(m.t_max)
      << " dobs=" << format_double(m.d_obs) << " alpha=" << format_double(m.alpha)
      << " seed=" << m.seed << "\n";
  out << "t";
  for (int c = 0; c < set.dim(); ++c) out << "," << column_name(c, set.dim());
  out << "\n";
  for (Eigen::Index i = 0; i < set.size(); ++i) {
    out << format_double(set.times[static_cast<std::size_t>(i)]);
    for (int c = 0; c < set.dim(); ++c) {
      out << ",";
      if (!is_missing(set.values(i, c))) out << format_double(set.values(i, c));
    }
    out << "\n";
  }
  if (!out) throw IoError("write failed for " + path.string());
}

ObservationSet read_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  const std::string where = path.string();
  ObservationSet set;
  std::string line;

  if (!std::getline(in, line)) throw ParseError(where + ": empty file", 1, 1);
  line = strip_cr(line);
  if (line.rfind("# ", 0) != 0) throw ParseError(where + ": missing metadata header", 1, 1);
  bool seen[5] = {false, false, false, false, false};
  {
    std::size_t col = 3;
    for (const std::string& tok : split(line.substr(2), ' ')) {
      if (tok.empty()) {
        col += 1;
        continue;
      }
      const auto eq = tok.find('=');
      if (eq == std::string::npos) throw ParseError(where + ": bad header token", 1, col);
      const std::string key = tok.substr(0, eq), val = tok.substr(eq + 1);
      auto num = [&]() {
        auto v = parse_double(val);
        if (!v) throw ParseError(where + ": bad header value for " + key, 1, col + eq + 1);
        return *v;
      };
      if (key == "regime") {
        set.meta.regime = val;
        seen[0] = true;
      } else if (key == "Tmax") {
        set.meta.t_max = num();
        seen[1] = true;
      } else if (key == "dobs") {
        set.meta.d_obs = num();
        seen[2] = true;
      } else if (key == "alpha") {
        set.meta.alpha = num();
        seen[3] = true;
      } else if (key == "seed") {
        try {
          std::size_t used = 0;
          set.meta.seed = std::stoull(val, &used);
          if (used != val.size()) throw std::invalid_argument("trailing");
        } catch (const std::exception&) {
          throw ParseError(where + ": bad seed", 1, col + eq + 1);
        }
        seen[4] = true;
      } else {
        throw ParseError(where + ": unknown header key '" + key + "'", 1, col);
      }
      col += tok.size() + 1;
    }
  }
  for (bool s : seen)
    if (!s) throw ParseError(where + ": header lacks regime/Tmax/dobs/alpha/seed", 1, 1);

  if (!std::getline(in, line)) throw ParseError(where + ": missing column header", 2, 1);
  const auto cols = split(strip_cr(line), ',');
  if (cols.size() < 2 || cols[0] != "t") throw ParseError(where + ": column header must start with t", 2, 1);
  const int d = static_cast<int>(cols.size()) - 1;

  std::vector<double> flat;
  std::size_t lineno = 2;
  while (std::getline(in, line)) {
    ++lineno;
    line = strip_cr(line);
    if (line.empty()) continue;
    const auto cells = split(line, ',');
    if (cells.size() != cols.size())
      throw ParseError(where + ": row " + std::to_string(lineno) + " has " +
                           std::to_string(cells.size()) + " fields, expected " +
                           std::to_string(cols.size()),
                       lineno, 1);
    std::size_t col = 1;
    for (std::size_t k = 0; k < cells.size(); ++k) {
      const std::string& cell = cells[k];
      if (k > 0 && cell.find_first_not_of(" \t") == std::string::npos) {
        flat.push_back(kMissing);
      } else {
        auto v = parse_double(cell);
        if (!v || (k == 0 && !std::isfinite(*v)))
          throw ParseError(where + ": row " + std::to_string(lineno) +
                               ": malformed number '" + cell + "'",
                           lineno, col);
        flat.push_back(*v);
      }
      col += cell.size() + 1;
    }
  }
  const Eigen::Index n = static_cast<Eigen::Index>(flat.size() / cols.size());
  set.times.resize(static_cast<std::size_t>(n));
  set.values.resize(n, d);
  for (Eigen::Index i = 0; i < n; ++i) {
    set.times[static_cast<std::size_t>(i)] = flat[static_cast<std::size_t>(i) * cols.size()];
    for (int c = 0; c < d; ++c)
      set.values(i, c) = flat[static_cast<std::size_t>(i) * cols.size() + 1 + c];
    if (i > 0 && !(set.times[i] > set.times[i - 1]))
      throw ParseError(where + ": times must be strictly increasing", 3 + i, 1);
  }
  return set;
}

}  // namespace magidyn
