#include <catch2/catch_amalgamated.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>

#include "explab/cli.hpp"

using namespace explab;

namespace {

std::filesystem::path scratch_dir() {
  auto dir = std::filesystem::temp_directory_path() / "explab_cli_tests";
  std::filesystem::create_directories(dir);
  return dir;
}

int run_binary(const std::string& args) {
  std::string cmd = std::string(EXPLAB_CLI_PATH) + " " + args + " >/dev/null 2>&1";
  int status = std::system(cmd.c_str());
  REQUIRE(status != -1);
  return WEXITSTATUS(status);
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  REQUIRE(in.good());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

}  // namespace

TEST_CASE("empty config yields the documented defaults", "[cli]") {
  RunConfig c = config_from_json("{}");
  REQUIRE(c.problem == "wave");
  REQUIRE(c.method == "exp-euler");
  REQUIRE(c.ell_list == std::vector<double>{0.0, 0.5, 1.0, 1.5, 2.0, 2.5, 3.0});
  REQUIRE(c.t_max == 0.5);
  REQUIRE(c.n_phys == 512);
  REQUIRE(c.j_min == 4);
  REQUIRE(c.j_max == 9);
  REQUIRE(c.h_list.empty());
  REQUIRE(c.epsilon == 1e-8);
  REQUIRE_FALSE(c.dealias);
  REQUIRE_FALSE(c.contraction_guard);
  REQUIRE_FALSE(c.rosenbrock);
}

TEST_CASE("config json sets every field and echoes back losslessly", "[cli]") {
  const std::string text = R"({
    "problem": "nls", "method": "cox-matthews-4",
    "ell_list": [0.5, 1.5], "t_max": 0.25, "n_phys": 128,
    "ladder": "2:6", "epsilon": 1e-6, "output_dir": "results",
    "dealias": true, "contraction_guard": true, "rosenbrock": true,
    "m_active": 16.0, "ell": 2.5, "n_steps": 64,
    "k_list": [4, 8], "lambda_re": -0.25, "lambda_im": 0.1,
    "weight_ell": 1.5, "m_list": [4, 8, 16], "n_time": 512
  })";
  RunConfig c = config_from_json(text);
  REQUIRE(c.problem == "nls");
  REQUIRE(c.method == "cox-matthews-4");
  REQUIRE(c.ell_list == std::vector<double>{0.5, 1.5});
  REQUIRE(c.t_max == 0.25);
  REQUIRE(c.n_phys == 128);
  REQUIRE(c.j_min == 2);
  REQUIRE(c.j_max == 6);
  REQUIRE(c.epsilon == 1e-6);
  REQUIRE(c.output_dir == "results");
  REQUIRE(c.dealias);
  REQUIRE(c.contraction_guard);
  REQUIRE(c.rosenbrock);
  REQUIRE(c.m_active == 16.0);
  REQUIRE(c.ell == 2.5);
  REQUIRE(c.n_steps == 64);
  REQUIRE(c.k_list == std::vector<int>{4, 8});
  REQUIRE(c.lambda_re == -0.25);
  REQUIRE(c.lambda_im == 0.1);
  REQUIRE(c.weight_ell == 1.5);
  REQUIRE(c.m_list == std::vector<double>{4.0, 8.0, 16.0});
  REQUIRE(c.n_time == 512);

  RunConfig back = config_from_json(config_to_json(c).dump());
  REQUIRE(back.problem == c.problem);
  REQUIRE(back.ell_list == c.ell_list);
  REQUIRE(back.j_min == c.j_min);
  REQUIRE(back.j_max == c.j_max);
  REQUIRE(back.weight_ell == c.weight_ell);
  REQUIRE(back.m_list == c.m_list);
}

TEST_CASE("config parsing rejects malformed input", "[cli]") {
  REQUIRE_THROWS_AS(config_from_json("not json"), ConfigError);
  REQUIRE_THROWS_AS(config_from_json("[1,2]"), ConfigError);
  REQUIRE_THROWS_AS(config_from_json(R"({"tmax": 0.5})"), ConfigError);
  REQUIRE_THROWS_AS(config_from_json(R"({"t_max": "0.5"})"), ConfigError);
  REQUIRE_THROWS_AS(config_from_json(R"({"ell_list": 0.5})"), ConfigError);
  REQUIRE_THROWS_AS(config_from_json(R"({"n_phys": 2.5})"), ConfigError);
  REQUIRE_THROWS_AS(config_from_json(R"({"ladder": "4"})"), ConfigError);
  REQUIRE_THROWS_AS(config_from_json(R"({"ladder": "a:b"})"), ConfigError);
  REQUIRE_THROWS_AS(config_from_json(R"({"ladder": "4:"})"), ConfigError);
  REQUIRE_THROWS_AS(config_from_json(R"({"dealias": 1})"), ConfigError);
}

TEST_CASE("explicit step list takes precedence over the dyadic range", "[cli]") {
  RunConfig c = config_from_json(R"({"h_list": [0.25, 0.125, 0.0625], "t_max": 0.5})");
  LadderSpec l = ladder_from(c);
  REQUIRE(l.explicit_h.size() == 3);
  REQUIRE(l.resolve(0.5).size() == 3);

  RunConfig d = config_from_json(R"({"ladder": "3:7"})");
  auto rungs = ladder_from(d).resolve(1.0);
  REQUIRE(rungs.size() == 5);
  REQUIRE(rungs.front().second == 8);
}

TEST_CASE("doubles format with full precision and a point decimal", "[cli]") {
  REQUIRE(format_double(0.5) == "0.5");
  REQUIRE(format_double(pi) == "3.1415926535897931");
  for (double v : {1.0 / 3.0, 1e-17, 6.62607015e-34, 123456789.123456789}) {
    REQUIRE(std::stod(format_double(v)) == v);
    REQUIRE(format_double(v).find(',') == std::string::npos);
  }
}

TEST_CASE("problem and method names resolve through the registries", "[cli]") {
  RunConfig c;
  c.n_phys = 32;
  REQUIRE(make_problem(c).name == "wave");
  c.problem = "nls";
  REQUIRE(make_problem(c).name == "nls");
  c.problem = "linear-commuting";
  REQUIRE(make_problem(c).name == "linear-commuting");
  c.problem = "heat";
  REQUIRE_THROWS_WITH(make_problem(c), Catch::Matchers::ContainsSubstring("available"));

  RunConfig m;
  REQUIRE(resolve_method(m).name == "exp-euler");
  m.method = "rosenbrock-euler";
  REQUIRE_THROWS_WITH(resolve_method(m), Catch::Matchers::ContainsSubstring("exp-euler"));
  m.rosenbrock = true;
  REQUIRE(resolve_method(m).name == "rosenbrock-euler");
  m.method = "nope";
  REQUIRE_THROWS_WITH(resolve_method(m), Catch::Matchers::ContainsSubstring("rosenbrock-euler"));
}

TEST_CASE("sharpness command mirrors the library probe", "[cli]") {
  RunConfig c;
  c.k_list = {4, 8, 16};
  CommandResult r = cmd_sharpness(c);
  REQUIRE(r.pass);
  REQUIRE(r.files.size() == 2);
  REQUIRE(r.files[0].first == "sharpness.csv");
  REQUIRE(r.files[1].first == "summary.json");

  auto rows = sharpness_probe({4, 8, 16}, Complex(-0.5, 0.0));
  auto summary = nlohmann::json::parse(r.files[1].second);
  REQUIRE(summary["errors"].size() == 3);
  for (std::size_t i = 0; i < rows.size(); ++i)
    REQUIRE(summary["errors"][i].get<double>() == rows[i].error);
  REQUIRE(summary["max_min_ratio"].get<double>() >= 1.0);

  std::size_t lines = std::count(r.files[0].second.begin(), r.files[0].second.end(), '\n');
  REQUIRE(lines == 4);
}

TEST_CASE("phi selftest passes its own gate", "[cli]") {
  CommandResult r = cmd_phi_selftest(RunConfig{});
  REQUIRE(r.pass);
  auto summary = nlohmann::json::parse(r.files[1].second);
  REQUIRE(summary["max_rel_err"].get<double>() <= 1e-10);
  REQUIRE(summary["pass"].get<bool>());
  std::size_t lines = std::count(r.files[0].second.begin(), r.files[0].second.end(), '\n');
  REQUIRE(lines == 4 * 407 + 1);
}

TEST_CASE("run command produces a trajectory and a final state", "[cli]") {
  RunConfig c;
  c.n_phys = 32;
  c.t_max = 0.25;
  c.n_steps = 8;
  c.ell = 1.0;
  CommandResult r = cmd_run(c);
  REQUIRE(r.files.size() == 3);
  std::size_t traj_lines = std::count(r.files[0].second.begin(), r.files[0].second.end(), '\n');
  REQUIRE(traj_lines == 10);
  std::size_t state_lines = std::count(r.files[1].second.begin(), r.files[1].second.end(), '\n');
  REQUIRE(state_lines == 2 * 32 + 1);
  auto summary = nlohmann::json::parse(r.files[2].second);
  REQUIRE(summary["n_steps"].get<int>() == 8);
  REQUIRE(summary["final_norm"].get<double>() > 0.0);

  c.rosenbrock = true;
  c.method = "rosenbrock-euler";
  c.m_active = 8.0;
  CommandResult rb = cmd_run(c);
  REQUIRE(nlohmann::json::parse(rb.files[2].second)["rosenbrock"].get<bool>());

  RunConfig bad = c;
  bad.n_steps = 0;
  REQUIRE_THROWS_AS(cmd_run(bad), ConfigError);
  bad = c;
  bad.t_max = 0.0;
  REQUIRE_THROWS_AS(cmd_run(bad), ConfigError);
}

TEST_CASE("order scan command emits ladder, curve, and summary", "[cli]") {
  RunConfig c;
  c.problem = "linear-commuting";
  c.lambda_re = -0.3;
  c.lambda_im = 0.2;
  c.n_phys = 16;
  c.t_max = 1.0;
  c.j_min = 2;
  c.j_max = 5;
  c.ell_list = {0.5, 1.5, 2.5};
  CommandResult r = cmd_order_scan(c);
  REQUIRE(r.files.size() == 3);
  REQUIRE(r.files[0].first == "ladder.csv");
  REQUIRE(r.files[1].first == "qcurve.csv");

  std::size_t ladder_lines = std::count(r.files[0].second.begin(), r.files[0].second.end(), '\n');
  REQUIRE(ladder_lines == 3 * 4 + 1);
  std::size_t curve_lines = std::count(r.files[1].second.begin(), r.files[1].second.end(), '\n');
  REQUIRE(curve_lines == 4);

  auto summary = nlohmann::json::parse(r.files[2].second);
  REQUIRE(summary["fits"].size() == 3);
  for (const auto& fit : summary["fits"]) {
    double ell = fit["ell"].get<double>();
    REQUIRE(fit["theory"].get<double>() == std::min(ell, 1.0));
  }

  RunConfig bad = c;
  bad.rosenbrock = true;
  REQUIRE_THROWS_AS(cmd_order_scan(bad), ConfigError);
}

TEST_CASE("command outputs are byte-identical across reruns", "[cli]") {
  RunConfig c;
  c.k_list = {4, 8};
  CommandResult a = cmd_sharpness(c);
  CommandResult b = cmd_sharpness(c);
  REQUIRE(a.files == b.files);

  RunConfig o;
  o.problem = "linear-commuting";
  o.n_phys = 16;
  o.t_max = 1.0;
  o.j_min = 2;
  o.j_max = 5;
  o.ell_list = {1.0};
  REQUIRE(cmd_order_scan(o).files == cmd_order_scan(o).files);
}

TEST_CASE("manifest records enough to re-run the experiment", "[cli]") {
  RunConfig c;
  c.k_list = {4, 8};
  CommandResult r = cmd_sharpness(c);
  OrderedJson m = make_manifest("sharpness", c, r, 1.25);
  REQUIRE(m["command"] == "sharpness");
  REQUIRE(m["versions"]["explab"] == version_string);
  REQUIRE(m["outputs"].size() == 2);
  REQUIRE(m["pass"].get<bool>());
  REQUIRE(m["wall_time_seconds"].get<double>() == 1.25);
  RunConfig back = config_from_json(m["config"].dump());
  REQUIRE(back.k_list == c.k_list);
}

TEST_CASE("dispatch rejects unknown commands", "[cli]") {
  REQUIRE_THROWS_AS(dispatch_command("orderscan", RunConfig{}), ConfigError);
}

TEST_CASE("binary exits 0 on success and writes the output set", "[cli]") {
  auto dir = scratch_dir() / "ok_run";
  std::filesystem::remove_all(dir);
  int code = run_binary("run --problem wave --grid 32 --tmax 0.25 --n-steps 4 --ell 1 --out " +
                        dir.string());
  REQUIRE(code == 0);
  for (const char* name : {"trajectory.csv", "state.csv", "summary.json", "manifest.json"})
    REQUIRE(std::filesystem::exists(dir / name));
  auto manifest = nlohmann::json::parse(slurp(dir / "manifest.json"));
  REQUIRE(manifest["command"] == "run");
  REQUIRE(manifest["config"]["n_phys"].get<int>() == 32);
}

TEST_CASE("binary exits 2 on config errors with machine-readable detail", "[cli]") {
  auto dir = scratch_dir() / "bad_method";
  std::filesystem::remove_all(dir);
  REQUIRE(run_binary("order-scan --method nope --out " + dir.string()) == 2);
  auto err = nlohmann::json::parse(slurp(dir / "error.json"));
  REQUIRE(err["error"]["kind"] == "config");
  REQUIRE(err["error"]["what"].get<std::string>().find("available") != std::string::npos);

  REQUIRE(run_binary("run --tmax 0 --grid 32") == 2);
  REQUIRE(run_binary("no-such-command") == 2);
  REQUIRE(run_binary("run --config /definitely/missing.json") == 2);
}

TEST_CASE("binary exits 3 when a numerical gate fails", "[cli]") {
  auto dir = scratch_dir() / "gate";
  std::filesystem::remove_all(dir);
  auto cfg_path = scratch_dir() / "quiet.json";
  {
    std::ofstream f(cfg_path);
    f << R"({"problem": "linear-commuting", "lambda_re": 0.0, "lambda_im": 0.0,
             "n_phys": 16, "ell_list": [1.0], "ladder": "2:6", "t_max": 1.0})";
  }
  REQUIRE(run_binary("order-scan --config " + cfg_path.string() + " --out " + dir.string()) == 3);
  auto err = nlohmann::json::parse(slurp(dir / "error.json"));
  REQUIRE(err["error"]["kind"] == "numerics");
}

TEST_CASE("binary reruns reproduce result files byte for byte", "[cli]") {
  auto d1 = scratch_dir() / "rerun_a";
  auto d2 = scratch_dir() / "rerun_b";
  std::filesystem::remove_all(d1);
  std::filesystem::remove_all(d2);
  REQUIRE(run_binary("sharpness --out " + d1.string()) == 0);
  REQUIRE(run_binary("sharpness --out " + d2.string()) == 0);
  REQUIRE(slurp(d1 / "sharpness.csv") == slurp(d2 / "sharpness.csv"));
  REQUIRE(slurp(d1 / "summary.json") == slurp(d2 / "summary.json"));
}
