#include <chrono>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "explab/cli.hpp"

using namespace explab;

namespace {

struct FlagValues {
  std::optional<std::string> config_path;
  std::optional<std::string> problem;
  std::optional<std::string> method;
  std::optional<std::string> ell;
  std::optional<double> t_max;
  std::optional<int> n_phys;
  std::optional<std::string> ladder;
  std::optional<std::string> out_dir;
  std::optional<double> epsilon;
  std::optional<int> n_steps;
  std::optional<double> m_active;
  bool rosenbrock = false;
  bool dealias = false;
  bool guard = false;
};

void add_common_flags(CLI::App* cmd, FlagValues& f) {
  cmd->add_option("--config", f.config_path, "JSON config file; flags override its values");
  cmd->add_option("--problem", f.problem, "problem name (wave, nls, linear-commuting)");
  cmd->add_option("--method", f.method, "tableau name");
  cmd->add_option("--ell", f.ell, "comma-separated regularity exponents");
  cmd->add_option("--tmax", f.t_max, "integration horizon");
  cmd->add_option("--grid", f.n_phys, "physical grid size (power of two)");
  cmd->add_option("--ladder", f.ladder, "dyadic step ladder jmin:jmax");
  cmd->add_option("--out", f.out_dir, "output directory");
  cmd->add_option("--epsilon", f.epsilon, "regularity margin of the rough data");
  cmd->add_option("--n-steps", f.n_steps, "steps for a single run");
  cmd->add_option("--m-active", f.m_active, "Rosenbrock linearization cutoff");
  cmd->add_flag("--rosenbrock", f.rosenbrock, "use the Rosenbrock stepper family");
  cmd->add_flag("--dealias", f.dealias, "dealias the quadratic/cubic products");
  cmd->add_flag("--guard", f.guard, "enforce the stage contraction guard");
}

std::vector<double> parse_double_list(const std::string& text) {
  std::vector<double> out;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t comma = text.find(',', pos);
    std::string item = text.substr(pos, comma == std::string::npos ? comma : comma - pos);
    double v = 0.0;
    auto r = std::from_chars(item.data(), item.data() + item.size(), v);
    if (r.ec != std::errc() || r.ptr != item.data() + item.size())
      throw ConfigError("cannot parse '" + item + "' as a number");
    out.push_back(v);
    if (comma == std::string::npos) break;
    pos = comma + 1;
  }
  if (out.empty()) throw ConfigError("--ell needs at least one value");
  return out;
}

RunConfig build_config(const FlagValues& f, const CLI::App* cmd) {
  RunConfig c;
  if (f.config_path) {
    std::ifstream in(*f.config_path, std::ios::binary);
    if (!in) throw ConfigError("cannot read config file '" + *f.config_path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    c = config_from_json(buf.str());
  }
  if (f.problem) c.problem = *f.problem;
  if (f.method) c.method = *f.method;
  if (f.ell) {
    c.ell_list = parse_double_list(*f.ell);
    if (c.ell_list.size() == 1) c.ell = c.ell_list.front();
  }
  if (f.t_max) c.t_max = *f.t_max;
  if (f.n_phys) c.n_phys = *f.n_phys;
  if (f.ladder) parse_ladder_string(*f.ladder, c);
  if (f.out_dir) c.output_dir = *f.out_dir;
  if (f.epsilon) c.epsilon = *f.epsilon;
  if (f.n_steps) c.n_steps = *f.n_steps;
  if (f.m_active) c.m_active = *f.m_active;
  if (cmd->count("--rosenbrock") > 0) c.rosenbrock = f.rosenbrock;
  if (cmd->count("--dealias") > 0) c.dealias = f.dealias;
  if (cmd->count("--guard") > 0) c.contraction_guard = f.guard;
  return c;
}

int fail(const std::string& kind, const std::string& what, const std::string& out_dir,
         CliExit code) {
  OrderedJson e = error_json(kind, what);
  std::cerr << e.dump() << "\n";
  try {
    write_output_files(out_dir, {{"error.json", e.dump(2) + "\n"}});
  } catch (...) {
  }
  return static_cast<int>(code);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"spectral exponential integrator laboratory"};
  app.require_subcommand(1);
  FlagValues flags;
  for (const char* name : {"order-scan", "sharpness", "galerkin-scan", "run", "phi-selftest"})
    add_common_flags(app.add_subcommand(name), flags);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << error_json("config", e.what()).dump() << "\n";
    return static_cast<int>(CliExit::config_error);
  }

  const CLI::App* cmd = app.get_subcommands().front();
  const std::string name = cmd->get_name();

  RunConfig cfg;
  try {
    cfg = build_config(flags, cmd);
  } catch (const std::invalid_argument& e) {
    return fail("config", e.what(), "out", CliExit::config_error);
  }

  auto start = std::chrono::steady_clock::now();
  CommandResult result;
  try {
    result = dispatch_command(name, cfg);
  } catch (const NumericsError& e) {
    return fail("numerics", e.what(), cfg.output_dir, CliExit::numerics_failure);
  } catch (const std::invalid_argument& e) {
    return fail("config", e.what(), cfg.output_dir, CliExit::config_error);
  } catch (const std::exception& e) {
    return fail("internal", e.what(), cfg.output_dir, CliExit::numerics_failure);
  }
  double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

  try {
    write_output_files(cfg.output_dir, result.files);
    OrderedJson manifest = make_manifest(name, cfg, result, wall);
    write_output_files(cfg.output_dir, {{"manifest.json", manifest.dump(2) + "\n"}});
  } catch (const std::exception& e) {
    return fail("config", e.what(), cfg.output_dir, CliExit::config_error);
  }

  if (!result.pass)
    return fail("numerics", name + ": gate failed, see summary.json", cfg.output_dir,
                CliExit::numerics_failure);

  std::cout << "ok: " << name << " -> " << cfg.output_dir << " (" << result.files.size() + 1
            << " files, " << format_double(wall) << "s)\n";
  return static_cast<int>(CliExit::ok);
}
