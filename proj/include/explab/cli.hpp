#pragma once

// Configuration, dispatch, and file formatting for the command-line tool.
// Lives in the library so the test suite can drive every command in-process.

#include <charconv>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>

#include <nlohmann/json.hpp>

#include "explab/experiments.hpp"
#include "explab/rosenbrock.hpp"
#include "explab/version.hpp"

namespace explab {

using OrderedJson = nlohmann::ordered_json;

/// Process exit codes: 0 success, 2 configuration rejected, 3 a numerical
/// gate failed during the run.
enum class CliExit : int { ok = 0, config_error = 2, numerics_failure = 3 };

/// Flat run configuration. File values are overridden by command-line flags;
/// fields irrelevant to a given subcommand are ignored by it.
struct RunConfig {
  std::string problem = "wave";
  std::string method = "exp-euler";
  std::vector<double> ell_list = {0.0, 0.5, 1.0, 1.5, 2.0, 2.5, 3.0};
  double t_max = 0.5;
  int n_phys = 512;
  int j_min = 4;
  int j_max = 9;
  std::vector<double> h_list;
  double epsilon = 1e-8;
  std::string output_dir = "out";
  bool dealias = false;
  bool contraction_guard = false;
  bool rosenbrock = false;
  double m_active = 32.0;
  double ell = 1.0;
  int n_steps = 256;
  std::vector<int> k_list = {8, 16, 32, 64};
  double lambda_re = -0.5;
  double lambda_im = 0.0;
  std::optional<double> weight_ell;
  std::vector<double> m_list = {8.0, 16.0, 32.0, 64.0};
  int n_time = 2048;
};

inline LadderSpec ladder_from(const RunConfig& c) {
  if (!c.h_list.empty()) {
    LadderSpec l;
    l.explicit_h = c.h_list;
    return l;
  }
  return LadderSpec::dyadic(c.j_min, c.j_max);
}

/// Shortest text that round-trips the double, except CSV cells which carry
/// the full 17 significant digits; '.' decimal always, no locale anywhere.
inline std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::general, 17);
  return std::string(buf, res.ptr);
}

inline void parse_ladder_string(const std::string& text, RunConfig& c) {
  auto colon = text.find(':');
  if (colon == std::string::npos)
    throw ConfigError("ladder must look like jmin:jmax, got '" + text + "'");
  int lo = 0, hi = 0;
  auto r1 = std::from_chars(text.data(), text.data() + colon, lo);
  auto r2 = std::from_chars(text.data() + colon + 1, text.data() + text.size(), hi);
  if (r1.ec != std::errc() || r1.ptr != text.data() + colon || r2.ec != std::errc() ||
      r2.ptr != text.data() + text.size())
    throw ConfigError("ladder must look like jmin:jmax, got '" + text + "'");
  c.j_min = lo;
  c.j_max = hi;
  c.h_list.clear();
}

namespace detail {

inline double json_number(const nlohmann::json& v, const std::string& key) {
  if (!v.is_number()) throw ConfigError("config key '" + key + "' must be a number");
  return v.get<double>();
}

inline int json_int(const nlohmann::json& v, const std::string& key) {
  if (!v.is_number_integer()) throw ConfigError("config key '" + key + "' must be an integer");
  return v.get<int>();
}

inline bool json_bool(const nlohmann::json& v, const std::string& key) {
  if (!v.is_boolean()) throw ConfigError("config key '" + key + "' must be a boolean");
  return v.get<bool>();
}

inline std::string json_string(const nlohmann::json& v, const std::string& key) {
  if (!v.is_string()) throw ConfigError("config key '" + key + "' must be a string");
  return v.get<std::string>();
}

template <class T, class Elem>
std::vector<T> json_array(const nlohmann::json& v, const std::string& key, Elem&& elem) {
  if (!v.is_array()) throw ConfigError("config key '" + key + "' must be an array");
  std::vector<T> out;
  for (const auto& e : v) out.push_back(elem(e, key));
  return out;
}

}  // namespace detail

/// Parse a flat JSON object into a config. Unknown keys are rejected so a
/// typo cannot silently fall back to a default.
inline RunConfig config_from_json(const std::string& text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  if (!doc.is_object()) throw ConfigError("config must be a JSON object");
  RunConfig c;
  using namespace detail;
  for (const auto& [key, value] : doc.items()) {
    if (key == "problem") c.problem = json_string(value, key);
    else if (key == "method") c.method = json_string(value, key);
    else if (key == "ell_list") c.ell_list = json_array<double>(value, key, json_number);
    else if (key == "t_max") c.t_max = json_number(value, key);
    else if (key == "n_phys") c.n_phys = json_int(value, key);
    else if (key == "ladder") parse_ladder_string(json_string(value, key), c);
    else if (key == "h_list") c.h_list = json_array<double>(value, key, json_number);
    else if (key == "epsilon") c.epsilon = json_number(value, key);
    else if (key == "output_dir") c.output_dir = json_string(value, key);
    else if (key == "dealias") c.dealias = json_bool(value, key);
    else if (key == "contraction_guard") c.contraction_guard = json_bool(value, key);
    else if (key == "rosenbrock") c.rosenbrock = json_bool(value, key);
    else if (key == "m_active") c.m_active = json_number(value, key);
    else if (key == "ell") c.ell = json_number(value, key);
    else if (key == "n_steps") c.n_steps = json_int(value, key);
    else if (key == "k_list") c.k_list = json_array<int>(value, key, json_int);
    else if (key == "lambda_re") c.lambda_re = json_number(value, key);
    else if (key == "lambda_im") c.lambda_im = json_number(value, key);
    else if (key == "weight_ell") {
      if (value.is_null()) c.weight_ell.reset();
      else c.weight_ell = json_number(value, key);
    } else if (key == "m_list") c.m_list = json_array<double>(value, key, json_number);
    else if (key == "n_time") c.n_time = json_int(value, key);
    else throw ConfigError("unknown config key '" + key + "'");
  }
  return c;
}

/// Full echo of a config, every field explicit: together with the command
/// name this is enough to reproduce a run with --config alone.
inline OrderedJson config_to_json(const RunConfig& c) {
  OrderedJson j;
  j["problem"] = c.problem;
  j["method"] = c.method;
  j["ell_list"] = c.ell_list;
  j["t_max"] = c.t_max;
  j["n_phys"] = c.n_phys;
  if (c.h_list.empty()) j["ladder"] = std::to_string(c.j_min) + ":" + std::to_string(c.j_max);
  else j["h_list"] = c.h_list;
  j["epsilon"] = c.epsilon;
  j["output_dir"] = c.output_dir;
  j["dealias"] = c.dealias;
  j["contraction_guard"] = c.contraction_guard;
  j["rosenbrock"] = c.rosenbrock;
  j["m_active"] = c.m_active;
  j["ell"] = c.ell;
  j["n_steps"] = c.n_steps;
  j["k_list"] = c.k_list;
  j["lambda_re"] = c.lambda_re;
  j["lambda_im"] = c.lambda_im;
  if (c.weight_ell) j["weight_ell"] = *c.weight_ell;
  else j["weight_ell"] = nullptr;
  j["m_list"] = c.m_list;
  j["n_time"] = c.n_time;
  return j;
}

inline ProblemSpec make_problem(const RunConfig& c) {
  if (c.problem == "wave") return make_wave(c.n_phys, c.dealias);
  if (c.problem == "nls") return make_nls(c.n_phys, c.dealias);
  if (c.problem == "linear-commuting") {
    Complex lambda(c.lambda_re, c.lambda_im);
    return make_linear_commuting(c.n_phys, [lambda](int) { return lambda; });
  }
  throw ConfigError("unknown problem '" + c.problem +
                    "'; available: wave, nls, linear-commuting");
}

inline const ExponentialTableau& resolve_method(const RunConfig& c) {
  const auto& table = c.rosenbrock ? builtin_rosenbrock_tableaus() : builtin_tableaus();
  auto it = table.find(c.method);
  if (it == table.end()) {
    std::string names;
    for (const auto& [name, tab] : table) {
      if (!names.empty()) names += ", ";
      names += name;
    }
    throw ConfigError("unknown method '" + c.method + "'; available: " + names);
  }
  return it->second;
}

/// Everything one command produced: file contents keyed by name (the summary
/// is files back(), manifest is written separately by the caller) and the
/// gate verdict for the manifest.
struct CommandResult {
  std::vector<std::pair<std::string, std::string>> files;
  bool pass = true;
};

namespace detail {

inline void csv_cell(std::string& out, double v) { out += format_double(v); }

inline void append_estimate(OrderedJson& j, const OrderEstimate& e) {
  j["slope"] = e.slope;
  j["intercept"] = e.intercept;
  j["max_residual"] = e.max_residual;
  j["points_used"] = e.points_used;
}

}  // namespace detail

inline CommandResult cmd_order_scan(const RunConfig& c) {
  if (c.rosenbrock) throw ConfigError("order-scan drives the Runge-Kutta steppers only");
  ProblemSpec p = make_problem(c);
  const ExponentialTableau& t = resolve_method(c);
  OrderScanResult r = order_scan(p, t, c.ell_list, c.t_max, ladder_from(c), c.epsilon);

  std::string ladder_csv = "ell,h,n_steps,error,excluded\n";
  for (std::size_t i = 0; i < r.ells.size(); ++i) {
    for (const LadderPoint& q : r.ladders[i]) {
      detail::csv_cell(ladder_csv, r.ells[i]);
      ladder_csv += ',';
      detail::csv_cell(ladder_csv, q.h);
      ladder_csv += ',' + std::to_string(q.n_steps) + ',';
      detail::csv_cell(ladder_csv, q.error);
      ladder_csv += ',';
      ladder_csv += q.excluded ? '1' : '0';
      ladder_csv += '\n';
    }
  }

  std::string qcurve = "ell,q,theory\n";
  for (std::size_t i = 0; i < r.ells.size(); ++i) {
    double theory = std::min(r.ells[i], static_cast<double>(t.order));
    detail::csv_cell(qcurve, r.ells[i]);
    qcurve += ',';
    detail::csv_cell(qcurve, r.estimates[i].slope);
    qcurve += ',';
    detail::csv_cell(qcurve, theory);
    qcurve += '\n';
  }

  OrderedJson summary;
  summary["problem"] = p.name;
  summary["method"] = t.name;
  summary["ells"] = c.ell_list;
  OrderedJson fits = OrderedJson::array();
  for (std::size_t i = 0; i < r.estimates.size(); ++i) {
    OrderedJson f;
    f["ell"] = r.ells[i];
    detail::append_estimate(f, r.estimates[i]);
    f["theory"] = std::min(r.ells[i], static_cast<double>(t.order));
    fits.push_back(f);
  }
  summary["fits"] = fits;

  CommandResult out;
  out.files.emplace_back("ladder.csv", std::move(ladder_csv));
  out.files.emplace_back("qcurve.csv", std::move(qcurve));
  out.files.emplace_back("summary.json", summary.dump(2) + "\n");
  return out;
}

inline CommandResult cmd_sharpness(const RunConfig& c) {
  if (c.rosenbrock) throw ConfigError("sharpness drives the Runge-Kutta steppers only");
  Complex lambda(c.lambda_re, c.lambda_im);
  auto rows = sharpness_probe(c.k_list, lambda, c.weight_ell);

  std::string csv = "k,h,n_steps,error\n";
  double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
  for (const SharpnessRow& r : rows) {
    csv += std::to_string(r.k) + ',';
    detail::csv_cell(csv, r.h);
    csv += ',' + std::to_string(r.n_steps) + ',';
    detail::csv_cell(csv, r.error);
    csv += '\n';
    lo = std::min(lo, r.error);
    hi = std::max(hi, r.error);
  }

  OrderedJson summary;
  summary["lambda"] = {c.lambda_re, c.lambda_im};
  if (c.weight_ell) summary["weight_ell"] = *c.weight_ell;
  else summary["weight_ell"] = nullptr;
  OrderedJson errs = OrderedJson::array();
  for (const SharpnessRow& r : rows) errs.push_back(r.error);
  summary["errors"] = errs;
  summary["max_min_ratio"] = hi / lo;
  OrderedJson ratios = OrderedJson::array();
  for (std::size_t i = 1; i < rows.size(); ++i)
    ratios.push_back(std::log2(rows[i - 1].error / rows[i].error));
  summary["log2_ratios"] = ratios;

  CommandResult out;
  out.files.emplace_back("sharpness.csv", std::move(csv));
  out.files.emplace_back("summary.json", summary.dump(2) + "\n");
  return out;
}

inline CommandResult cmd_galerkin_scan(const RunConfig& c) {
  if (c.rosenbrock) throw ConfigError("galerkin-scan drives the Runge-Kutta steppers only");
  ProblemSpec p = make_problem(c);

  std::string csv = "ell,m,error,excluded\n";
  OrderedJson fits = OrderedJson::array();
  for (double ell : c.ell_list) {
    SpectralState u0 = y_ell_initial_data(p, ell, c.epsilon);
    GalerkinResult r = galerkin_scan(p, u0, c.t_max, c.m_list, c.n_time);
    for (std::size_t i = 0; i < r.m_values.size(); ++i) {
      detail::csv_cell(csv, ell);
      csv += ',';
      detail::csv_cell(csv, r.m_values[i]);
      csv += ',';
      detail::csv_cell(csv, r.errors[i]);
      csv += ',';
      csv += r.errors[i] < noise_floor ? '1' : '0';
      csv += '\n';
    }
    OrderedJson f;
    f["ell"] = ell;
    detail::append_estimate(f, r.fit);
    fits.push_back(f);
  }

  OrderedJson summary;
  summary["problem"] = p.name;
  summary["ells"] = c.ell_list;
  summary["m_list"] = c.m_list;
  summary["fits"] = fits;

  CommandResult out;
  out.files.emplace_back("galerkin.csv", std::move(csv));
  out.files.emplace_back("summary.json", summary.dump(2) + "\n");
  return out;
}

inline CommandResult cmd_run(const RunConfig& c) {
  if (c.n_steps < 1) throw ConfigError("run: n_steps must be >= 1");
  if (!(c.t_max > 0.0)) throw ConfigError("run: step size must be positive");
  ProblemSpec p = make_problem(c);
  const ExponentialTableau& t = resolve_method(c);
  SpectralState u0 = y_ell_initial_data(p, c.ell, c.epsilon);
  StageSolveConfig scfg;
  scfg.contraction_guard = c.contraction_guard;

  std::vector<double> trace;
  IntegrateResult r = c.rosenbrock
      ? RosenbrockStepper(p, t, c.m_active, scfg).integrate(u0, c.t_max, c.n_steps, &trace)
      : integrate(p, t, u0, c.t_max, c.n_steps, scfg, &trace);

  const double h = c.t_max / c.n_steps;
  std::string traj = "step,t,norm\n";
  traj += "0,0,";
  detail::csv_cell(traj, l2_norm(u0));
  traj += '\n';
  for (std::size_t i = 0; i < trace.size(); ++i) {
    traj += std::to_string(i + 1) + ',';
    detail::csv_cell(traj, h * static_cast<double>(i + 1));
    traj += ',';
    detail::csv_cell(traj, trace[i]);
    traj += '\n';
  }

  std::string state = "component,mode,re,im\n";
  const auto& modes = p.grid->modes();
  for (int comp = 0; comp < r.u.n_comp; ++comp) {
    for (std::size_t j = 0; j < modes.size(); ++j) {
      Complex z = r.u.entry(comp, static_cast<int>(j));
      state += std::to_string(comp) + ',' + std::to_string(modes[j]) + ',';
      detail::csv_cell(state, z.real());
      state += ',';
      detail::csv_cell(state, z.imag());
      state += '\n';
    }
  }

  int iterations = 0;
  for (const StepReport& rep : r.reports) iterations += rep.iterations;

  OrderedJson summary;
  summary["problem"] = p.name;
  summary["method"] = t.name;
  summary["rosenbrock"] = c.rosenbrock;
  summary["h"] = h;
  summary["n_steps"] = c.n_steps;
  summary["final_norm"] = l2_norm(r.u);
  summary["stage_iterations_total"] = iterations;

  CommandResult out;
  out.files.emplace_back("trajectory.csv", std::move(traj));
  out.files.emplace_back("state.csv", std::move(state));
  out.files.emplace_back("summary.json", summary.dump(2) + "\n");
  return out;
}

namespace detail {

/// Composite 10-point Gauss-Legendre evaluation of the phi integral
///   phi_k(z) = int_0^1 e^((1-s) z) s^(k-1)/(k-1)! ds,  k >= 1,
/// used as the selftest's independent route against the series/recurrence.
inline Complex phi_by_quadrature(int k, Complex z) {
  static const auto rule = [] {
    constexpr int n = 10;
    std::array<double, n> nodes{}, weights{};
    for (int i = 0; i < n; ++i) {
      double x = std::cos(pi * (i + 0.75) / (n + 0.5));
      double dp = 0.0;
      for (int it = 0; it < 100; ++it) {
        double p0 = 1.0, p1 = x;
        for (int j = 2; j <= n; ++j) {
          double p2 = ((2.0 * j - 1.0) * x * p1 - (j - 1.0) * p0) / j;
          p0 = p1;
          p1 = p2;
        }
        dp = n * (x * p1 - p0) / (x * x - 1.0);
        double dx = p1 / dp;
        x -= dx;
        if (std::abs(dx) < 1e-15) break;
      }
      nodes[static_cast<std::size_t>(i)] = x;
      weights[static_cast<std::size_t>(i)] = 2.0 / ((1.0 - x * x) * dp * dp);
    }
    return std::pair(nodes, weights);
  }();
  double kfac = 1.0;
  for (int j = 2; j < k; ++j) kfac *= j;
  Complex acc(0, 0);
  const int panels = 192;
  const double hp = 1.0 / panels;
  for (int p = 0; p < panels; ++p) {
    double a = hp * p;
    for (std::size_t q = 0; q < rule.first.size(); ++q) {
      double s = a + 0.5 * hp * (rule.first[q] + 1.0);
      double sk = k == 1 ? 1.0 : std::pow(s, k - 1);
      acc += rule.second[q] * (0.5 * hp) * std::exp((1.0 - s) * z) * (sk / kfac);
    }
  }
  return acc;
}

}  // namespace detail

/// Accuracy sweep of the phi evaluator against quadrature on the standard
/// left-half-plane grid plus near-zero probes. Worst relative error above
/// 1e-10 fails the gate.
inline CommandResult cmd_phi_selftest(const RunConfig&) {
  std::vector<Complex> zs;
  for (int a = 0; a < 20; ++a)
    for (int b = 0; b < 20; ++b)
      zs.emplace_back(-50.0 + 50.0 * a / 19.0, -50.0 + 100.0 * b / 19.0);
  for (Complex z : {Complex(-1e-3, 0), Complex(-1e-4, 0), Complex(0, 1e-3), Complex(0, -1e-3),
                    Complex(-1e-3, 1e-3), Complex(0, 5e-4), Complex(-5e-4, -5e-4)})
    zs.push_back(z);

  std::string csv = "k,re,im,rel_err\n";
  double worst = 0.0;
  for (int k = 1; k <= 4; ++k) {
    for (Complex z : zs) {
      Complex want = detail::phi_by_quadrature(k, z);
      double rel = std::abs(phi_scalar(PhiOrder(k), z) - want) / std::abs(want);
      worst = std::max(worst, rel);
      csv += std::to_string(k) + ',';
      detail::csv_cell(csv, z.real());
      csv += ',';
      detail::csv_cell(csv, z.imag());
      csv += ',';
      detail::csv_cell(csv, rel);
      csv += '\n';
    }
  }

  OrderedJson summary;
  summary["max_rel_err"] = worst;
  summary["threshold"] = 1e-10;
  summary["pass"] = worst <= 1e-10;

  CommandResult out;
  out.files.emplace_back("phi_grid.csv", std::move(csv));
  out.files.emplace_back("summary.json", summary.dump(2) + "\n");
  out.pass = worst <= 1e-10;
  return out;
}

inline CommandResult dispatch_command(const std::string& command, const RunConfig& c) {
  if (command == "order-scan") return cmd_order_scan(c);
  if (command == "sharpness") return cmd_sharpness(c);
  if (command == "galerkin-scan") return cmd_galerkin_scan(c);
  if (command == "run") return cmd_run(c);
  if (command == "phi-selftest") return cmd_phi_selftest(c);
  throw ConfigError("unknown command '" + command + "'");
}

/// Run manifest: command, full config echo, library version, produced files,
/// gate verdict, and wall time. The timing field is the one value that varies
/// between reruns; every result file is byte-deterministic.
inline OrderedJson make_manifest(const std::string& command, const RunConfig& c,
                                 const CommandResult& result, double wall_seconds) {
  OrderedJson m;
  m["command"] = command;
  m["config"] = config_to_json(c);
  m["versions"] = {{"explab", version_string}};
  OrderedJson names = OrderedJson::array();
  for (const auto& [name, content] : result.files) names.push_back(name);
  m["outputs"] = names;
  m["pass"] = result.pass;
  m["wall_time_seconds"] = wall_seconds;
  return m;
}

inline void write_output_files(const std::string& dir,
                               const std::vector<std::pair<std::string, std::string>>& files) {
  std::filesystem::create_directories(dir);
  for (const auto& [name, content] : files) {
    std::ofstream f(std::filesystem::path(dir) / name, std::ios::binary);
    if (!f) throw ConfigError("cannot write to output directory '" + dir + "'");
    f << content;
  }
}

inline OrderedJson error_json(const std::string& kind, const std::string& what) {
  OrderedJson e;
  e["error"] = {{"kind", kind}, {"what", what}};
  return e;
}

}  // namespace explab
