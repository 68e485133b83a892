#pragma once

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <optional>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "lpam/lpam.hpp"

namespace lpam::app {

using nlohmann::json;
namespace fs = std::filesystem;

enum ExitCode : int { kOk = 0, kAuditFailure = 1, kSolverFailure = 2, kUsageError = 3 };

class ConfigError : public std::runtime_error {
public:
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

enum class ObjectiveKind { joint, quadratic };
enum class ExtractorKind { identity, builtin, file };

struct ObjectiveSpec {
  ObjectiveKind kind = ObjectiveKind::joint;
  double lambda = 0.0093;
  ExtractorKind extractor = ExtractorKind::identity;
  std::string extractor_file;
  std::size_t extractor_layers = 4;
  std::size_t extractor_channels = 8;
  std::uint64_t extractor_seed = 0;
  double act_delta = 0.01;
  std::size_t dimension = 4;  // quadratic block length
};

struct AuditToggles {
  bool decrease = true;
  bool segments = true;
  bool lmax = true;
  bool strict_decrease = true;
};

struct RunConfig {
  InstanceSpec instance;
  ObjectiveSpec objective;
  LpamConfig solver;
  AuditToggles audit;
  bool squared_peak = false;
};

// Config parsing -------------------------------------------------------------

namespace detail {

inline void reject_unknown(const json& j, const std::string& where, std::initializer_list<const char*> keys) {
  if (!j.is_object()) throw ConfigError("'" + where + "' must be an object");
  for (const auto& [k, _] : j.items()) {
    bool known = false;
    for (const char* key : keys) known = known || k == key;
    if (!known) throw ConfigError("unknown key '" + (where.empty() ? k : where + "." + k) + "'");
  }
}

template <class T>
void get(const json& j, const char* key, T& out, const std::string& where) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError("bad value for '" + where + "." + key + "'");
  }
}

inline void get_schedule(const json& j, const char* key, std::vector<double>& out) {
  if (!j.contains(key)) return;
  const auto& v = j.at(key);
  try {
    if (v.is_number()) out = {v.get<double>()};
    else out = v.get<std::vector<double>>();
  } catch (const json::exception&) {
    throw ConfigError(std::string("bad value for 'solver.") + key + "'");
  }
}

}  // namespace detail

inline RunConfig parse_config(const json& j) {
  using detail::get;
  RunConfig c;
  detail::reject_unknown(j, "", {"instance", "objective", "solver", "audit", "metrics"});
  try {
    if (j.contains("instance")) {
      const auto& s = j.at("instance");
      detail::reject_unknown(s, "instance", {"height", "width", "mask", "ratio", "noise_std", "phantom", "seed"});
      get(s, "height", c.instance.height, "instance");
      get(s, "width", c.instance.width, "instance");
      get(s, "ratio", c.instance.ratio, "instance");
      get(s, "noise_std", c.instance.noise_std, "instance");
      get(s, "seed", c.instance.seed, "instance");
      std::string mask = to_string(c.instance.mask), phantom = to_string(c.instance.phantom);
      get(s, "mask", mask, "instance");
      get(s, "phantom", phantom, "instance");
      c.instance.mask = parse_mask_kind(mask);
      c.instance.phantom = parse_phantom_kind(phantom);
    }
    if (j.contains("objective")) {
      const auto& s = j.at("objective");
      detail::reject_unknown(s, "objective",
                             {"kind", "lambda", "extractor", "extractor_file", "extractor_layers",
                              "extractor_channels", "extractor_seed", "act_delta", "dimension"});
      std::string kind = "joint", ex = "identity";
      get(s, "kind", kind, "objective");
      get(s, "extractor", ex, "objective");
      if (kind == "joint") c.objective.kind = ObjectiveKind::joint;
      else if (kind == "quadratic") c.objective.kind = ObjectiveKind::quadratic;
      else throw ConfigError("objective.kind must be joint or quadratic");
      if (ex == "identity") c.objective.extractor = ExtractorKind::identity;
      else if (ex == "builtin") c.objective.extractor = ExtractorKind::builtin;
      else if (ex == "file") c.objective.extractor = ExtractorKind::file;
      else throw ConfigError("objective.extractor must be identity, builtin or file");
      get(s, "lambda", c.objective.lambda, "objective");
      get(s, "extractor_file", c.objective.extractor_file, "objective");
      get(s, "extractor_layers", c.objective.extractor_layers, "objective");
      get(s, "extractor_channels", c.objective.extractor_channels, "objective");
      get(s, "extractor_seed", c.objective.extractor_seed, "objective");
      get(s, "act_delta", c.objective.act_delta, "objective");
      get(s, "dimension", c.objective.dimension, "objective");
    }
    if (j.contains("solver")) {
      const auto& s = j.at("solver");
      detail::reject_unknown(s, "solver",
                             {"eps0", "gamma", "eps_sigma", "eps_tol", "a", "ls_delta", "rho", "alpha_bar",
                              "beta_bar", "step_alpha", "step_tau", "step_beta", "step_gamma", "max_iter",
                              "order", "mode", "ls_max"});
      auto& L = c.solver;
      get(s, "eps0", L.eps0, "solver");
      get(s, "gamma", L.gamma, "solver");
      get(s, "eps_sigma", L.eps_sigma, "solver");
      get(s, "eps_tol", L.eps_tol, "solver");
      get(s, "a", L.a, "solver");
      get(s, "ls_delta", L.ls_delta, "solver");
      get(s, "rho", L.rho, "solver");
      get(s, "alpha_bar", L.alpha_bar, "solver");
      get(s, "beta_bar", L.beta_bar, "solver");
      detail::get_schedule(s, "step_alpha", L.step_alpha);
      detail::get_schedule(s, "step_tau", L.step_tau);
      detail::get_schedule(s, "step_beta", L.step_beta);
      detail::get_schedule(s, "step_gamma", L.step_gamma);
      get(s, "max_iter", L.max_iter, "solver");
      get(s, "ls_max", L.ls_max, "solver");
      std::string order = to_string(L.order), mode = to_string(L.mode);
      get(s, "order", order, "solver");
      get(s, "mode", mode, "solver");
      L.order = parse_update_order(order);
      L.mode = parse_solver_mode(mode);
    }
    if (j.contains("audit")) {
      const auto& s = j.at("audit");
      detail::reject_unknown(s, "audit", {"decrease", "segments", "lmax", "strict_decrease"});
      get(s, "decrease", c.audit.decrease, "audit");
      get(s, "segments", c.audit.segments, "audit");
      get(s, "lmax", c.audit.lmax, "audit");
      get(s, "strict_decrease", c.audit.strict_decrease, "audit");
    }
    if (j.contains("metrics")) {
      const auto& s = j.at("metrics");
      detail::reject_unknown(s, "metrics", {"squared_peak"});
      get(s, "squared_peak", c.squared_peak, "metrics");
    }
    c.solver.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  if (!(c.objective.lambda >= 0.0)) throw ConfigError("objective.lambda must be >= 0");
  if (!(c.instance.ratio > 0.0 && c.instance.ratio <= 1.0)) throw ConfigError("instance.ratio must lie in (0, 1]");
  if (c.instance.height == 0 || c.instance.width == 0) throw ConfigError("instance size must be positive");
  if (c.objective.dimension == 0) throw ConfigError("objective.dimension must be positive");
  return c;
}

/// key=value with a dotted key; the value is read as JSON when it parses,
/// otherwise as a bare string.
inline void apply_override(json& j, const std::string& kv) {
  const auto eq = kv.find('=');
  if (eq == std::string::npos || eq == 0) throw ConfigError("override '" + kv + "' is not key=value");
  const std::string key = kv.substr(0, eq);
  const std::string raw = kv.substr(eq + 1);
  json value = json::parse(raw, nullptr, false);
  if (value.is_discarded()) value = raw;
  json* node = &j;
  std::stringstream ss(key);
  std::string part;
  std::vector<std::string> parts;
  while (std::getline(ss, part, '.')) parts.push_back(part);
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (parts[i].empty()) throw ConfigError("override key '" + key + "' has an empty segment");
    if (!node->is_object()) *node = json::object();
    node = &(*node)[parts[i]];
  }
  *node = std::move(value);
}

inline json read_json_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot open config '" + path + "'");
  json j = json::parse(is, nullptr, false, true);
  if (j.is_discarded()) throw ConfigError("config '" + path + "' is not valid JSON");
  return j;
}

inline json config_to_json(const RunConfig& c) {
  const auto& L = c.solver;
  std::string ex = c.objective.extractor == ExtractorKind::identity  ? "identity"
                   : c.objective.extractor == ExtractorKind::builtin ? "builtin"
                                                                     : "file";
  return {
      {"instance",
       {{"height", c.instance.height}, {"width", c.instance.width}, {"mask", to_string(c.instance.mask)},
        {"ratio", c.instance.ratio}, {"noise_std", c.instance.noise_std},
        {"phantom", to_string(c.instance.phantom)}, {"seed", c.instance.seed}}},
      {"objective",
       {{"kind", c.objective.kind == ObjectiveKind::joint ? "joint" : "quadratic"},
        {"lambda", c.objective.lambda}, {"extractor", ex}, {"extractor_file", c.objective.extractor_file},
        {"extractor_layers", c.objective.extractor_layers},
        {"extractor_channels", c.objective.extractor_channels},
        {"extractor_seed", c.objective.extractor_seed}, {"act_delta", c.objective.act_delta},
        {"dimension", c.objective.dimension}}},
      {"solver",
       {{"eps0", L.eps0}, {"gamma", L.gamma}, {"eps_sigma", L.eps_sigma}, {"eps_tol", L.eps_tol},
        {"a", L.a}, {"ls_delta", L.ls_delta}, {"rho", L.rho}, {"alpha_bar", L.alpha_bar},
        {"beta_bar", L.beta_bar}, {"step_alpha", L.step_alpha}, {"step_tau", L.step_tau},
        {"step_beta", L.step_beta}, {"step_gamma", L.step_gamma}, {"max_iter", L.max_iter},
        {"order", to_string(L.order)}, {"mode", to_string(L.mode)}, {"ls_max", L.ls_max}}},
      {"audit",
       {{"decrease", c.audit.decrease}, {"segments", c.audit.segments}, {"lmax", c.audit.lmax},
        {"strict_decrease", c.audit.strict_decrease}}},
      {"metrics", {{"squared_peak", c.squared_peak}}},
  };
}

inline RunConfig load_config(const std::optional<std::string>& path, const std::vector<std::string>& overrides) {
  json j = path ? read_json_file(*path) : json::object();
  for (const auto& o : overrides) apply_override(j, o);
  return parse_config(j);
}

// Instances and objectives ---------------------------------------------------

struct InstanceFiles {
  static constexpr const char* truth1 = "truth_x1.bin";
  static constexpr const char* truth2 = "truth_x2.bin";
  static constexpr const char* mask = "mask.bin";
  static constexpr const char* kspace1 = "kspace_f1.bin";
  static constexpr const char* kspace2 = "kspace_f2.bin";
  static constexpr const char* extractor = "extractor.bin";
  static constexpr const char* manifest = "manifest.json";
};

inline Instance load_instance(const RunConfig& c, const fs::path& dir) {
  const std::size_t h = c.instance.height, w = c.instance.width;
  Mask mask = io::load_mask((dir / InstanceFiles::mask).string());
  if (mask.height != h || mask.width != w) throw io::FormatError("mask shape does not match the config");
  TwoBlockPoint truth{io::load_real((dir / InstanceFiles::truth1).string(), h, w),
                      io::load_real((dir / InstanceFiles::truth2).string(), h, w)};
  KSpaceData data{io::load_complex((dir / InstanceFiles::kspace1).string(), h, w),
                  io::load_complex((dir / InstanceFiles::kspace2).string(), h, w)};
  return {std::move(truth), MaskedDft(std::move(mask)), std::move(data)};
}

inline FeatureExtractor build_extractor(const ObjectiveSpec& o, const fs::path& dir) {
  switch (o.extractor) {
    case ExtractorKind::identity: return FeatureExtractor::identity(o.act_delta);
    case ExtractorKind::builtin:
      return FeatureExtractor::random(o.extractor_layers, o.extractor_channels, o.act_delta, o.extractor_seed);
    case ExtractorKind::file: {
      fs::path p = o.extractor_file.empty() ? dir / InstanceFiles::extractor : fs::path(o.extractor_file);
      auto is = io::open_in(p.string());
      return io::read_weights(is);
    }
  }
  throw ConfigError("unreachable extractor kind");
}

using AnyObjective = std::variant<QuadraticToy, JointRecoveryObjective>;

struct Problem {
  AnyObjective objective;
  TwoBlockPoint x0;
  std::optional<TwoBlockPoint> truth;
  double phi_x0 = 0.0;  // unsmoothed Φ(X⁰)
};

inline TwoBlockPoint quadratic_start(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> d(0.0, 1.0);
  TwoBlockPoint X = TwoBlockPoint::zeros(n, n);
  for (auto& v : X.x1) v = d(rng);
  for (auto& v : X.x2) v = d(rng);
  return X;
}

/// Rebuilds the objective and start point exactly as `solve` sees them.
inline Problem build_problem(const RunConfig& c, const fs::path& instance_dir) {
  if (c.objective.kind == ObjectiveKind::quadratic) {
    QuadraticToy q(c.objective.dimension);
    TwoBlockPoint x0 = quadratic_start(c.objective.dimension, c.instance.seed);
    const double phi0 = q.phi_limit(x0);
    return {q, std::move(x0), std::nullopt, phi0};
  }
  Instance inst = load_instance(c, instance_dir);
  JointRecoveryObjective obj(inst.op, inst.data, build_extractor(c.objective, instance_dir), c.objective.lambda);
  TwoBlockPoint x0 = obj.zero_filled();
  const double phi0 = obj.phi_limit(x0);
  return {std::move(obj), std::move(x0), std::move(inst.truth), phi0};
}

inline LipschitzFn lipschitz_of(const AnyObjective& obj) {
  return std::visit([](const auto& o) -> LipschitzFn {
    return [o](double eps) { return o.lipschitz(eps); };
  }, obj);
}

// JSON helpers ----------------------------------------------------------------

inline json number_or_sentinel(double v) {
  if (std::isnan(v)) return nullptr;
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return v;
}

inline json metrics_json(const MetricsReport& m) {
  return {{"mse", m.mse}, {"psnr", number_or_sentinel(m.psnr)}, {"ssim", m.ssim},
          {"nmse", m.nmse}, {"rmse", m.rmse}};
}

inline json audit_json(const AuditResult& r, bool enabled) {
  json v = json::array();
  for (const auto& f : r.violations) v.push_back({{"k", f.k}, {"lhs", f.lhs}, {"rhs", f.rhs}});
  return {{"enabled", enabled}, {"passed", r.passed}, {"checked", r.checked}, {"violations", v}};
}

inline void write_json(const fs::path& path, const json& j) {
  io::write_file(path.string(), [&](std::ostream& os) { os << j.dump(2) << '\n'; });
}

// Commands --------------------------------------------------------------------

inline int cmd_generate(const RunConfig& c, const fs::path& out, std::ostream& log) {
  fs::create_directories(out);
  Instance inst = generate_instance(c.instance);
  const std::size_t h = c.instance.height, w = c.instance.width;
  io::write_file((out / InstanceFiles::truth1).string(), [&](std::ostream& os) { io::write_array(os, h, w, std::span<const double>(inst.truth.x1)); });
  io::write_file((out / InstanceFiles::truth2).string(), [&](std::ostream& os) { io::write_array(os, h, w, std::span<const double>(inst.truth.x2)); });
  io::write_file((out / InstanceFiles::mask).string(), [&](std::ostream& os) { io::write_array(os, inst.op.mask()); });
  io::write_file((out / InstanceFiles::kspace1).string(), [&](std::ostream& os) { io::write_array(os, h, w, std::span<const Complex>(inst.data.f1)); });
  io::write_file((out / InstanceFiles::kspace2).string(), [&](std::ostream& os) { io::write_array(os, h, w, std::span<const Complex>(inst.data.f2)); });
  json files = {InstanceFiles::truth1, InstanceFiles::truth2, InstanceFiles::mask, InstanceFiles::kspace1,
                InstanceFiles::kspace2};
  if (c.objective.kind == ObjectiveKind::joint && c.objective.extractor == ExtractorKind::builtin) {
    const auto g = build_extractor(c.objective, out);
    io::write_file((out / InstanceFiles::extractor).string(), [&](std::ostream& os) { io::write_weights(os, g); });
    files.push_back(InstanceFiles::extractor);
  }
  json manifest = {{"seed", c.instance.seed},
                   {"height", h},
                   {"width", w},
                   {"mask", to_string(c.instance.mask)},
                   {"requested_ratio", c.instance.ratio},
                   {"achieved_ratio", inst.op.mask().ratio()},
                   {"noise_std", c.instance.noise_std},
                   {"phantom", to_string(c.instance.phantom)},
                   {"files", files}};
  write_json(out / InstanceFiles::manifest, manifest);
  log << manifest.dump(2) << '\n';
  return kOk;
}

inline std::string mode_tag(const LpamConfig& c) { return to_string(c.mode); }

inline int cmd_solve(const RunConfig& c, const fs::path& instance_dir, const fs::path& out, std::ostream& log) {
  fs::create_directories(out);
  const Problem p = build_problem(c, instance_dir);
  const RunResult res = std::visit([&](const auto& o) { return lpam_run(o, p.x0, c.solver); }, p.objective);
  const std::string tag = mode_tag(c.solver);

  io::write_file((out / ("trace_" + tag + ".csv")).string(),
                 [&](std::ostream& os) { write_trace_csv(os, res.state.trace); });

  json run = {{"mode", tag},
              {"exit_reason", to_string(res.reason)},
              {"message", res.message},
              {"iterations", res.state.k},
              {"final_eps", res.state.eps},
              {"reduction_events", res.state.events.size()},
              {"phi_x0", p.phi_x0}};
  if (!res.state.trace.empty()) run["final_grad_norm"] = res.state.trace.back().grad_norm_next;

  if (c.objective.kind == ObjectiveKind::joint) {
    const std::size_t h = c.instance.height, w = c.instance.width;
    io::write_file((out / ("recon_" + tag + "_x1.bin")).string(), [&](std::ostream& os) {
      io::write_array(os, h, w, std::span<const double>(res.state.X.x1));
    });
    io::write_file((out / ("recon_" + tag + "_x2.bin")).string(), [&](std::ostream& os) {
      io::write_array(os, h, w, std::span<const double>(res.state.X.x2));
    });
    const MetricsOptions mo{c.squared_peak};
    json m = {{"x1", metrics_json(metrics(res.state.X.x1, p.truth->x1, mo))},
              {"x2", metrics_json(metrics(res.state.X.x2, p.truth->x2, mo))},
              {"zero_filled",
               {{"x1", metrics_json(metrics(p.x0.x1, p.truth->x1, mo))},
                {"x2", metrics_json(metrics(p.x0.x2, p.truth->x2, mo))}}}};
    write_json(out / ("metrics_" + tag + ".json"), m);
    run["metrics"] = m;
  } else {
    run["distance_to_minimizer"] = res.state.X.norm();
  }
  write_json(out / ("run_" + tag + ".json"), run);
  log << run.dump(2) << '\n';

  if (res.reason == ExitReason::numeric_error || res.reason == ExitReason::line_search_failure) {
    std::cerr << "solver failed: " << to_string(res.reason) << ": " << res.message << '\n';
    return kSolverFailure;
  }
  return kOk;
}

inline int cmd_audit(const RunConfig& c, const fs::path& trace_path, const fs::path& instance_dir,
                     const fs::path& report, std::ostream& log) {
  std::vector<IterateRecord> trace;
  {
    auto is = io::open_in(trace_path.string());
    trace = read_trace_csv(is);
  }
  const Problem p = build_problem(c, instance_dir);
  const LipschitzFn L = lipschitz_of(p.objective);
  const BoundParams bp = BoundParams::from_config(c.solver, p.phi_x0);

  const AuditResult dec = c.audit.decrease ? decrease_audit(trace, L, bp) : AuditResult{};
  const AuditResult lmx = c.audit.lmax ? lmax_audit(trace, L, bp) : AuditResult{};
  const AuditResult strict = c.audit.strict_decrease ? strict_decrease_audit(trace) : AuditResult{};
  std::vector<SegmentReport> segs;
  bool segs_ok = true;
  json seg_json = json::array();
  if (c.audit.segments) {
    segs = segment_bound(trace, L, bp);
    for (const auto& s : segs) {
      segs_ok = segs_ok && s.within_bound();
      seg_json.push_back({{"l", s.l},
                          {"k_begin", s.k_begin},
                          {"k_end", s.k_end},
                          {"eps", s.eps},
                          {"observed", s.observed},
                          {"bound", s.bound ? json(*s.bound) : json(nullptr)},
                          {"within_bound", s.within_bound()}});
    }
  }
  const bool passed = dec.passed && lmx.passed && strict.passed && segs_ok;
  json j = {{"trace", trace_path.string()},
            {"iterations", trace.size()},
            {"decrease_audit", audit_json(dec, c.audit.decrease)},
            {"lmax_audit", audit_json(lmx, c.audit.lmax)},
            {"strict_decrease", audit_json(strict, c.audit.strict_decrease)},
            {"segments", {{"enabled", c.audit.segments}, {"passed", segs_ok}, {"reports", seg_json}}},
            {"passed", passed}};
  if (!report.empty()) write_json(report, j);
  log << j.dump(2) << '\n';
  return passed ? kOk : kAuditFailure;
}

inline int cmd_metrics(const fs::path& x_path, const fs::path& y_path, bool squared_peak, const fs::path& report,
                       std::ostream& log) {
  auto read_real = [](const fs::path& p) {
    auto is = io::open_in(p.string());
    io::Array a = io::read_array(is);
    if (a.dtype != io::DType::f64) throw io::FormatError("'" + p.string() + "' is not an f64 array");
    return a;
  };
  const io::Array x = read_real(x_path);
  const io::Array y = read_real(y_path);
  if (x.rows != y.rows || x.cols != y.cols) throw std::invalid_argument("metrics: image shapes differ");
  json j = metrics_json(metrics(x.real, y.real, MetricsOptions{squared_peak}));
  if (!report.empty()) write_json(report, j);
  log << j.dump(2) << '\n';
  return kOk;
}

// Entry point -------------------------------------------------------------------

inline int run_cli(int argc, char** argv, std::ostream& log = std::cout) {
  CLI::App app{"Two-block smoothed proximal alternating minimization: instance generation, solves and audits"};
  app.require_subcommand(1);

  std::optional<std::string> config_path;
  std::vector<std::string> overrides;
  std::string out_dir = ".";
  std::string instance_dir;
  std::optional<std::string> mode;
  std::optional<std::uint64_t> seed;

  auto common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "JSON run configuration");
    sub->add_option("--override", overrides, "dotted key=value config override (repeatable)");
    sub->add_option("--seed", seed, "instance seed");
    sub->add_option("--mode", mode, "solver mode")->check(CLI::IsMember({"lpam", "bcd"}));
  };

  auto* gen = app.add_subcommand("generate", "write a synthetic instance");
  common(gen);
  gen->add_option("--out", out_dir, "output directory");

  auto* solve = app.add_subcommand("solve", "run the solver on a generated instance");
  common(solve);
  solve->add_option("--out", out_dir, "output directory");
  solve->add_option("--instance", instance_dir, "instance directory (defaults to --out)");

  std::string trace_path, report_path;
  auto* audit = app.add_subcommand("audit", "check a trace against the convergence bounds");
  common(audit);
  audit->add_option("--trace", trace_path, "trace CSV")->required();
  audit->add_option("--out", out_dir, "directory for audit_report.json");
  audit->add_option("--instance", instance_dir, "instance directory (defaults to the trace's directory)");

  std::string x_path, y_path;
  bool squared_peak = false;
  auto* met = app.add_subcommand("metrics", "image quality of a reconstruction against ground truth");
  met->add_option("--x", x_path, "reconstruction array")->required();
  met->add_option("--y", y_path, "ground-truth array")->required();
  met->add_flag("--squared-peak", squared_peak, "use MAX² in PSNR");
  met->add_option("--out", report_path, "write the report to this JSON file");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kUsageError;
  }

  try {
    if (met->parsed()) return cmd_metrics(x_path, y_path, squared_peak, report_path, log);

    if (seed) overrides.push_back("instance.seed=" + std::to_string(*seed));
    if (mode) overrides.push_back("solver.mode=\"" + *mode + "\"");
    const RunConfig cfg = load_config(config_path, overrides);

    if (gen->parsed()) return cmd_generate(cfg, out_dir, log);
    if (solve->parsed()) return cmd_solve(cfg, instance_dir.empty() ? out_dir : instance_dir, out_dir, log);
    if (audit->parsed()) {
      const fs::path tp(trace_path);
      const fs::path idir = instance_dir.empty() ? (tp.has_parent_path() ? tp.parent_path() : fs::path(".")) : fs::path(instance_dir);
      return cmd_audit(cfg, tp, idir, fs::path(out_dir) / "audit_report.json", log);
    }
  } catch (const TraceParseError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsageError;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kUsageError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsageError;
  }
  return kUsageError;
}

}  // namespace lpam::app
