#pragma once

// CSV/JSON export with bit-exact double round trips and config hashing.

#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include <json.hpp>

#include "kforq/analysis.hpp"
#include "kforq/control.hpp"
#include "kforq/errors.hpp"
#include "kforq/grid.hpp"

namespace kforq {

inline constexpr int kSchemaVersion = 1;

/// Shortest representation that parses back to the same double.
inline std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

inline double parse_double(std::string_view s) {
  double v = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc{} || res.ptr != s.data() + s.size())
    throw std::invalid_argument("parse_double: bad number '" + std::string(s) + "'");
  return v;
}

inline std::uint64_t fnv1a64(std::string_view s) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

inline std::string hex64(std::uint64_t v) {
  static const char* digits = "0123456789abcdef";
  std::string s(16, '0');
  for (int i = 15; i >= 0; --i, v >>= 4) s[static_cast<std::size_t>(i)] = digits[v & 0xf];
  return s;
}

/// FNV-1a of the compact dump (object keys are sorted by nlohmann::json).
inline std::string config_hash(const nlohmann::json& j) { return hex64(fnv1a64(j.dump())); }

/// One row per node and frame: t, x, then one column per trajectory.
inline void write_frames_csv(std::ostream& os, const std::string& hash, const std::vector<std::string>& names,
                             const std::vector<const Trajectory*>& columns, const Domain1D& dom,
                             const TimeGrid& tg) {
  if (names.size() != columns.size() || columns.empty()) throw DimensionError("write_frames_csv: columns");
  const std::size_t frames = columns.front()->size();
  for (const auto* c : columns) {
    if (c->size() != frames) throw DimensionError("write_frames_csv: frame counts differ");
    for (const auto& f : c->frames) check_on(f, dom, "write_frames_csv");
  }
  os << "# config_hash: " << hash << '\n' << "t,x";
  for (const auto& n : names) os << ',' << n;
  os << '\n';
  std::string line;
  for (std::size_t n = 0; n < frames; ++n) {
    const std::string t = format_double(tg.t(static_cast<int>(n)));
    for (int i = 0; i < dom.n_interior; ++i) {
      line = t;
      line += ',';
      line += format_double(dom.x(i));
      for (const auto* c : columns) {
        line += ',';
        line += format_double((*c)[n][static_cast<std::size_t>(i)]);
      }
      os << line << '\n';
    }
  }
}

struct FramesFile {
  std::string config_hash;
  std::vector<std::string> names;  ///< value columns after t, x
  std::vector<double> t;           ///< one per frame
  std::vector<double> x;           ///< one per node
  std::vector<Trajectory> columns;
};

inline std::vector<std::string_view> split_commas(std::string_view s) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = s.find(',', start);
    out.push_back(s.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

inline FramesFile read_frames_csv(std::istream& is) {
  FramesFile out;
  std::string line;
  if (!std::getline(is, line) || line.rfind("# config_hash: ", 0) != 0)
    throw std::runtime_error("read_frames_csv: missing config_hash line");
  out.config_hash = line.substr(15);
  if (!std::getline(is, line)) throw std::runtime_error("read_frames_csv: missing header");
  const auto header = split_commas(line);
  if (header.size() < 3 || header[0] != "t" || header[1] != "x")
    throw std::runtime_error("read_frames_csv: header must start with t,x");
  for (std::size_t c = 2; c < header.size(); ++c) out.names.emplace_back(header[c]);
  const std::size_t nc = out.names.size();
  std::vector<std::vector<double>> cur(nc);
  std::vector<std::vector<Field>> frames(nc);
  double cur_t = 0.0;
  bool have_t = false;
  std::size_t lineno = 2;
  auto flush = [&] {
    for (std::size_t c = 0; c < nc; ++c) {
      frames[c].emplace_back(std::move(cur[c]));
      cur[c].clear();
    }
  };
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto cells = split_commas(line);
    if (cells.size() != nc + 2)
      throw std::runtime_error("read_frames_csv: line " + std::to_string(lineno) + " has wrong column count");
    const double t = parse_double(cells[0]);
    if (!have_t || t != cur_t) {
      if (have_t) flush();
      out.t.push_back(t);
      cur_t = t;
      have_t = true;
    }
    if (out.t.size() == 1) out.x.push_back(parse_double(cells[1]));
    for (std::size_t c = 0; c < nc; ++c) cur[c].push_back(parse_double(cells[c + 2]));
  }
  if (have_t) flush();
  for (std::size_t c = 0; c < nc; ++c) {
    for (const auto& f : frames[c])
      if (f.size() != out.x.size()) throw std::runtime_error("read_frames_csv: ragged frame");
    out.columns.push_back(Trajectory{std::move(frames[c])});
  }
  return out;
}

inline void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open " + path + " for writing");
  f << content;
  if (!f) throw std::runtime_error("write failed: " + path);
}

/// Non-finite numbers become null (JSON has no inf/NaN).
inline nlohmann::json json_number(double v) { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(); }

inline void write_json_file(const std::string& path, const nlohmann::json& j) { write_text_file(path, j.dump(2) + "\n"); }

/// iter, J, grad_norm, step, feasibility
inline std::string optimizer_log_csv(const OptimState& st, const std::string& hash) {
  std::ostringstream os;
  os << "# config_hash: " << hash << '\n' << "iter,J,grad_norm,step,feasibility\n";
  for (std::size_t i = 0; i < st.cost_history.size(); ++i) {
    os << i << ',' << format_double(st.cost_history[i]) << ',' << format_double(st.grad_norm_history[i]) << ','
       << format_double(st.step_history[i]) << ',' << format_double(st.feasibility_history[i]) << '\n';
  }
  return os.str();
}

inline nlohmann::json to_json(const SecondOrderReport& r) {
  nlohmann::json j;
  j["c0"] = json_number(r.c0);
  j["c2"] = json_number(r.c2);
  j["c1"] = json_number(r.c1);
  j["kappa1"] = json_number(r.kappa1);
  j["kappa2"] = json_number(r.kappa2);
  j["empirical_min_ratio"] = json_number(r.empirical_min_ratio);
  j["embedding_constant"] = json_number(r.embedding_constant);
  j["norm_y_cth"] = json_number(r.norm_y_cth);
  j["tracking_l2h"] = json_number(r.tracking_l2h);
  j["source_l2h"] = json_number(r.source_l2h);
  j["gradient_norm"] = json_number(r.gradient_norm);
  j["near_stationary"] = r.near_stationary;
  j["lambda_bound_lhs"] = json_number(r.lambda_bound.lhs);
  j["lambda_bound_rhs"] = json_number(r.lambda_bound.rhs);
  j["lambda_bound_ratio"] = json_number(r.lambda_bound.ratio);
  j["condition1_lhs"] = json_number(r.cond1_lhs);
  j["condition1_rhs"] = json_number(r.cond1_rhs);
  j["condition1_pass"] = r.cond1_pass;
  j["condition2_lhs"] = json_number(r.cond2_lhs);
  j["condition2_rhs"] = json_number(r.cond2_rhs);
  j["condition2_pass"] = r.cond2_pass;
  j["kernel_bound_ratio"] = json_number(r.kernel_bound_max_ratio);
  nlohmann::json samples = nlohmann::json::array();
  for (double s : r.samples) samples.push_back(json_number(s));
  j["samples"] = samples;
  j["verdict"] = r.verdict();
  return j;
}

inline nlohmann::json to_json(const EstimateReport& r) {
  return {{"name", r.name},         {"lhs", json_number(r.lhs)},       {"rhs", json_number(r.rhs)},
          {"margin", json_number(r.margin)}, {"tolerance", json_number(r.tolerance)}, {"pass", r.pass},
          {"n_interior", r.n_interior}, {"n_steps", r.n_steps},       {"note", r.note}};
}

}  // namespace kforq
