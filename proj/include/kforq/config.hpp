#pragma once

// Strict JSON experiment configuration: every field required, unknown
// keys rejected, all module invariants re-validated on load.

#include <cmath>
#include <cstdint>
#include <fstream>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "kforq/control.hpp"
#include "kforq/errors.hpp"
#include "kforq/forward.hpp"
#include "kforq/grid.hpp"

namespace kforq {

struct InitialStateConfig {
  std::string kind = "zero";  ///< zero | gaussian | sine
  double amplitude = 0.0;
  double center = 0.0;
  double width = 1.0;
  int mode = 1;
};

struct ControlConfig {
  std::string kind = "zero";  ///< zero | bump
  double amplitude = 0.0;
};

enum class TargetKind { zero, uncontrolled, from_control };

struct ProbeConfig {
  double control_scale = 0.5;  ///< probes run at control_scale * configured control
  int n_directions = 5;
  double fd_step = 1e-5;
  std::string direction = "random";  ///< random | zero
  std::vector<double> taylor_steps{1e-2, 1e-3, 1e-4, 1e-5};
};

struct VerifyConfig {
  int n_coercivity_samples = 20;
  double weak_residual_tol = 5e-2;
  std::optional<double> gronwall_C;  ///< empty: calibrated from the run
  double wv_C = 1.0;
  double smallness_C = 0.1;
};

struct FaultInjection {
  double adjoint_scale = 1.0;
  int corrupt_frame = -1;
  double corrupt_amplitude = 1e-2;
};

struct ExperimentConfig {
  double length = 0.0;
  int n_interior = 0;
  double horizon = 0.0;
  int n_steps = 0;
  ModelParams model;
  InitialStateConfig initial_state;
  double x_min = 0.0, x_max = 0.0, t_min = 0.0, t_max = 0.0;
  ControlConfig control;
  double delta = 0.0;
  ObserverKind observer = ObserverKind::identity_L2H;
  TargetKind target = TargetKind::zero;
  OptimOptions optimizer;
  ProbeConfig probe;
  VerifyConfig verify;
  std::uint64_t seed = 0;
  std::string output_dir;
  FaultInjection faults;
  nlohmann::json raw;  ///< effective configuration (hash input)

  Domain1D domain() const { return Domain1D::make(length, n_interior); }
  TimeGrid time() const { return TimeGrid::make(horizon, n_steps); }
};

namespace detail {

class Section {
 public:
  Section(const nlohmann::json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(path_.empty() ? "<root>" : path_, "must be an object");
  }

  std::string field(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  const nlohmann::json& at(const std::string& key) {
    seen_.insert(key);
    const auto it = j_.find(key);
    if (it == j_.end()) throw ConfigError(field(key), "missing required field");
    return *it;
  }

  bool has(const std::string& key) const { return j_.contains(key); }

  double number(const std::string& key) {
    const auto& v = at(key);
    if (!v.is_number()) throw ConfigError(field(key), "must be a number");
    const double d = v.get<double>();
    if (!std::isfinite(d)) throw ConfigError(field(key), "must be finite");
    return d;
  }

  int integer(const std::string& key) {
    const auto& v = at(key);
    if (!v.is_number_integer()) throw ConfigError(field(key), "must be an integer");
    return v.get<int>();
  }

  std::string string(const std::string& key, std::initializer_list<const char*> allowed) {
    const auto& v = at(key);
    if (!v.is_string()) throw ConfigError(field(key), "must be a string");
    const auto s = v.get<std::string>();
    std::string list;
    for (const char* a : allowed) {
      if (s == a) return s;
      list += list.empty() ? a : std::string(", ") + a;
    }
    if (allowed.size() == 0) return s;
    throw ConfigError(field(key), "'" + s + "' is not one of: " + list);
  }

  Section sub(const std::string& key) { return Section(at(key), field(key)); }

  /// Throws on keys never requested.
  void finish() const {
    for (const auto& [k, v] : j_.items()) {
      (void)v;
      if (!seen_.count(k)) throw ConfigError(field(k), "unknown key");
    }
  }

 private:
  const nlohmann::json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

inline void require(bool ok, const std::string& field, const std::string& what) {
  if (!ok) throw ConfigError(field, what);
}

}  // namespace detail

inline ExperimentConfig parse_config(const nlohmann::json& j) {
  using detail::require;
  ExperimentConfig c;
  c.raw = j;
  detail::Section root(j, "");

  {
    auto s = root.sub("domain");
    c.length = s.number("length");
    c.n_interior = s.integer("n_interior");
    require(c.length > 0.0, s.field("length"), "must be > 0");
    require(c.n_interior >= 3, s.field("n_interior"), "must be >= 3");
    s.finish();
  }
  {
    auto s = root.sub("time");
    c.horizon = s.number("horizon");
    c.n_steps = s.integer("n_steps");
    require(c.horizon > 0.0, s.field("horizon"), "must be > 0");
    require(c.n_steps >= 1, s.field("n_steps"), "must be >= 1");
    s.finish();
  }
  {
    auto s = root.sub("model");
    c.model.epsilon = s.number("epsilon");
    c.model.k = s.number("k");
    c.model.cfl = s.number("cfl");
    require(c.model.epsilon > 0.0, s.field("epsilon"), "must be > 0");
    require(c.model.cfl > 0.0, s.field("cfl"), "must be > 0");
    s.finish();
  }
  {
    auto s = root.sub("initial_state");
    auto& is = c.initial_state;
    is.kind = s.string("kind", {"zero", "gaussian", "sine"});
    if (is.kind == "gaussian") {
      is.amplitude = s.number("amplitude");
      is.center = s.number("center");
      is.width = s.number("width");
      require(is.width > 0.0, s.field("width"), "must be > 0");
    } else if (is.kind == "sine") {
      is.amplitude = s.number("amplitude");
      is.mode = s.integer("mode");
      require(is.mode >= 1, s.field("mode"), "must be >= 1");
    }
    s.finish();
  }
  {
    auto s = root.sub("window");
    c.x_min = s.number("x_min");
    c.x_max = s.number("x_max");
    c.t_min = s.number("t_min");
    c.t_max = s.number("t_max");
    s.finish();
  }
  {
    auto s = root.sub("control");
    c.control.kind = s.string("kind", {"zero", "bump"});
    if (c.control.kind == "bump") c.control.amplitude = s.number("amplitude");
    s.finish();
  }
  {
    auto s = root.sub("cost");
    c.delta = s.number("delta");
    require(c.delta > 0.0, s.field("delta"), "must be > 0");
    c.observer = s.string("observer", {"identity_L2H", "identity_WV"}) == "identity_L2H" ? ObserverKind::identity_L2H
                                                                                       : ObserverKind::identity_WV;
    const auto t = s.string("target", {"zero", "uncontrolled", "from_control"});
    c.target = t == "zero" ? TargetKind::zero : t == "uncontrolled" ? TargetKind::uncontrolled : TargetKind::from_control;
    s.finish();
  }
  {
    auto s = root.sub("optimizer");
    c.optimizer.method =
        s.string("method", {"lbfgs", "gradient_descent"}) == "lbfgs" ? OptimMethod::lbfgs : OptimMethod::gradient_descent;
    c.optimizer.tol_g = s.number("tol_g");
    c.optimizer.max_iters = s.integer("max_iters");
    c.optimizer.memory = s.integer("memory");
    require(c.optimizer.tol_g > 0.0, s.field("tol_g"), "must be > 0");
    require(c.optimizer.max_iters >= 0, s.field("max_iters"), "must be >= 0");
    require(c.optimizer.memory >= 1, s.field("memory"), "must be >= 1");
    s.finish();
  }
  {
    auto s = root.sub("probe");
    c.probe.control_scale = s.number("control_scale");
    c.probe.n_directions = s.integer("n_directions");
    c.probe.fd_step = s.number("fd_step");
    c.probe.direction = s.string("direction", {"random", "zero"});
    const auto& steps = s.at("taylor_steps");
    require(steps.is_array() && steps.size() >= 2, s.field("taylor_steps"), "must be an array of >= 2 numbers");
    c.probe.taylor_steps.clear();
    for (const auto& v : steps) {
      require(v.is_number() && v.get<double>() > 0.0, s.field("taylor_steps"), "entries must be positive numbers");
      c.probe.taylor_steps.push_back(v.get<double>());
    }
    require(c.probe.n_directions >= 1, s.field("n_directions"), "must be >= 1");
    require(c.probe.fd_step > 0.0, s.field("fd_step"), "must be > 0");
    s.finish();
  }
  {
    auto s = root.sub("verify");
    c.verify.n_coercivity_samples = s.integer("n_coercivity_samples");
    c.verify.weak_residual_tol = s.number("weak_residual_tol");
    const auto& g = s.at("gronwall_C");
    if (g.is_string() && g.get<std::string>() == "calibrate") {
      c.verify.gronwall_C.reset();
    } else {
      require(g.is_number() && g.get<double>() >= 0.0, s.field("gronwall_C"), "must be \"calibrate\" or a number >= 0");
      c.verify.gronwall_C = g.get<double>();
    }
    c.verify.wv_C = s.number("wv_C");
    c.verify.smallness_C = s.number("smallness_C");
    require(c.verify.n_coercivity_samples >= 0, s.field("n_coercivity_samples"), "must be >= 0");
    require(c.verify.weak_residual_tol > 0.0, s.field("weak_residual_tol"), "must be > 0");
    require(c.verify.smallness_C >= 0.0, s.field("smallness_C"), "must be >= 0");
    s.finish();
  }
  {
    const auto& v = root.at("seed");
    require(v.is_number_unsigned() || (v.is_number_integer() && v.get<long long>() >= 0), "seed",
            "must be a non-negative integer");
    c.seed = v.get<std::uint64_t>();
  }
  {
    const auto& v = root.at("output_dir");
    require(v.is_string() && !v.get<std::string>().empty(), "output_dir", "must be a non-empty string");
    c.output_dir = v.get<std::string>();
  }
  if (root.has("fault_injection")) {
    auto s = root.sub("fault_injection");
    if (s.has("adjoint_scale")) c.faults.adjoint_scale = s.number("adjoint_scale");
    if (s.has("corrupt_frame")) c.faults.corrupt_frame = s.integer("corrupt_frame");
    if (s.has("corrupt_amplitude")) c.faults.corrupt_amplitude = s.number("corrupt_amplitude");
    require(c.faults.corrupt_frame < 0 || c.faults.corrupt_frame <= c.n_steps, s.field("corrupt_frame"),
            "must be <= time.n_steps");
    s.finish();
  }
  root.finish();

  try {
    const auto dom = c.domain();
    const auto tg = c.time();
    ControlWindow(dom, tg, c.x_min, c.x_max, c.t_min, c.t_max);
  } catch (const std::invalid_argument& e) {
    throw ConfigError("window", e.what());
  }
  return c;
}

inline ExperimentConfig load_config(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("--config", "cannot open " + path);
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(f);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError("--config", std::string("invalid JSON: ") + e.what());
  }
  return parse_config(j);
}

/// Builds the problem pieces a configuration describes.
struct Experiment {
  ExperimentConfig cfg;
  Domain1D dom;
  TimeGrid tg;
  ForwardSolver solver;
  ControlWindow window;
  Field y0;
  WindowVector control;  ///< configured control on the window

  explicit Experiment(ExperimentConfig c)
      : cfg(std::move(c)),
        dom(cfg.domain()),
        tg(cfg.time()),
        solver(dom, tg, cfg.model),
        window(dom, tg, cfg.x_min, cfg.x_max, cfg.t_min, cfg.t_max),
        y0(initial_state(cfg.initial_state, dom)),
        control(make_control(cfg, window)) {}

  static Field initial_state(const InitialStateConfig& is, const Domain1D& dom) {
    const double pi = std::acos(-1.0);
    if (is.kind == "gaussian") {
      return Field::sample(dom, [&](double x) {
        const double z = (x - is.center) / is.width;
        return is.amplitude * std::exp(-0.5 * z * z);
      });
    }
    if (is.kind == "sine")
      return Field::sample(dom, [&](double x) { return is.amplitude * std::sin(is.mode * pi * x / dom.length); });
    return Field(dom.size());
  }

  /// A sin^2 bump in space times a half sine in time over the window.
  static WindowVector make_control(const ExperimentConfig& c, const ControlWindow& w) {
    if (c.control.kind != "bump") return WindowVector(w.size());
    const double pi = std::acos(-1.0);
    return w.sample([&](double x, double t) {
      const double s = std::sin(pi * (x - c.x_min) / (c.x_max - c.x_min));
      return c.control.amplitude * s * s * std::sin(pi * (t - c.t_min) / (c.t_max - c.t_min));
    });
  }

  Trajectory target() const {
    switch (cfg.target) {
      case TargetKind::zero:
        return Trajectory::zeros(static_cast<std::size_t>(tg.n_steps) + 1, dom.size());
      case TargetKind::uncontrolled:
        return solver.solve(y0, window.apply_B(WindowVector(window.size()))).y;
      case TargetKind::from_control:
        return solver.solve(y0, window.apply_B(control)).y;
    }
    return {};
  }

  ControlProblem problem() const {
    CostParams cp;
    cp.delta = cfg.delta;
    cp.z_d = target();
    cp.observer = cfg.observer;
    return ControlProblem(solver, window, y0, std::move(cp));
  }
};

}  // namespace kforq
