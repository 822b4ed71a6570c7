#include <doctest/doctest.h>

#include <sys/wait.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct CmdResult {
  int code = -1;
  std::string out;
};

CmdResult run_cmd(const std::string& cmd) {
  CmdResult r;
  FILE* p = popen((cmd + " 2>&1").c_str(), "r");
  REQUIRE(p != nullptr);
  char buf[4096];
  size_t n;
  while ((n = fread(buf, 1, sizeof buf, p)) > 0) r.out.append(buf, n);
  const int status = pclose(p);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

const std::string kBin = HEOMFCS_BIN;

void write_file(const std::string& path, const std::string& text) {
  std::ofstream os(path);
  REQUIRE(os.good());
  os << text;
}

std::string read_file(const std::string& path) {
  std::ifstream is(path);
  REQUIRE(is.good());
  std::stringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

json discrete_config(double t_end = 2.0) {
  json j;
  j["model"] = {
      {"two_level", {{"omega0", 1.0}, {"tunneling", 0.4}}},
      {"scheme", "two_point"},
      {"baths",
       json::array({{{"family", "discrete"},
                     {"modes", json::array({{{"omega", 1.2}, {"gamma", 0.3}}})},
                     {"temperature", 1.0},
                     {"counted", true}}})}};
  j["mode"] = "transient";
  j["numerics"] = {{"n_max", 4}, {"n_max_cap", 4}, {"dt", 0.01},
                   {"t_end", t_end}, {"m_max", 2}};
  j["output"] = {{"stride", 20}};
  return j;
}

json ohmic_config() {
  json j = discrete_config(1.5);
  j["model"]["baths"] = json::array(
      {{{"family", "ohmic_exp"}, {"lambda", 0.2}, {"omega_c", 2.0},
        {"temperature", 1.0}, {"counted", true}}});
  j["numerics"]["n_max"] = 3;
  j["numerics"]["n_max_cap"] = 3;
  j["numerics"]["fit_terms"] = 4;
  return j;
}

std::vector<std::vector<std::string>> csv_rows(const std::string& text) {
  std::vector<std::vector<std::string>> rows;
  std::istringstream is(text);
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::vector<std::string> fields;
    std::stringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) fields.push_back(cell);
    rows.push_back(std::move(fields));
  }
  return rows;
}

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& name) : path(name) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string operator/(const std::string& leaf) const {
    return (path / leaf).string();
  }
};

}  // namespace

TEST_CASE("transient run writes deterministic csv plus sidecar") {
  TempDir dir("cli_transient");
  write_file(dir / "run.json", discrete_config().dump());

  const auto r1 = run_cmd(kBin + " --config " + (dir / "run.json") + " --out " +
                          (dir / "a"));
  CAPTURE(r1.out);
  REQUIRE(r1.code == 0);
  CHECK(r1.out.find("status: ok") != std::string::npos);
  CHECK(r1.out.find("wrote ") != std::string::npos);

  const auto r2 = run_cmd(kBin + " --config " + (dir / "run.json") + " --out " +
                          (dir / "b"));
  REQUIRE(r2.code == 0);
  const auto csv_a = read_file(dir / "a/transient.csv");
  CHECK(csv_a == read_file(dir / "b/transient.csv"));
  CHECK(csv_a.rfind("time,moment_1,moment_2,cumulant_1,cumulant_2,"
                    "dcumulant_dt_1,dcumulant_dt_2,scheme\n", 0) == 0);
  CHECK(csv_a.find("two_point") != std::string::npos);

  const json sidecar = json::parse(read_file(dir / "a/transient.json"));
  CHECK(sidecar["converged"].get<bool>());
  CHECK(sidecar["n_max_used"].get<int>() == 4);
  CHECK(sidecar["config_hash"].get<std::string>().size() == 16);
  CHECK(sidecar["mode"] == "transient");
  CHECK(sidecar["max_trace_defect"].get<double>() < 1e-6);
  CHECK(sidecar["basis"][0]["terms"].get<int>() == 2);

  // worker count must not change a single output byte
  const auto r4 = run_cmd(kBin + " --config " + (dir / "run.json") + " --out " +
                          (dir / "w") + " --workers 4");
  REQUIRE(r4.code == 0);
  CHECK(read_file(dir / "w/transient.csv") == csv_a);
}

TEST_CASE("parse problems exit 2, value problems exit 3") {
  TempDir dir("cli_errors");

  write_file(dir / "broken.json", "{ this is not json");
  CHECK(run_cmd(kBin + " --config " + (dir / "broken.json")).code == 2);

  json unknown = discrete_config();
  unknown["numerics"]["n_biggest"] = 7;
  write_file(dir / "unknown.json", unknown.dump());
  const auto ru = run_cmd(kBin + " --config " + (dir / "unknown.json"));
  CHECK(ru.code == 2);
  CHECK(ru.out.find("n_biggest") != std::string::npos);

  CHECK(run_cmd(kBin + " --config " + (dir / "missing.json")).code == 2);
  CHECK(run_cmd(kBin).code == 2);  // --config is required

  json bad_dt = discrete_config();
  bad_dt["numerics"]["dt"] = -0.01;
  write_file(dir / "bad_dt.json", bad_dt.dump());
  const auto rv = run_cmd(kBin + " --config " + (dir / "bad_dt.json"));
  CHECK(rv.code == 3);
  CHECK(rv.out.find("validation error") != std::string::npos);

  // value-level failure through an override on top of a good file
  write_file(dir / "good.json", discrete_config().dump());
  CHECK(run_cmd(kBin + " --config " + (dir / "good.json") + " --dt 0").code ==
        3);
}

TEST_CASE("exhausted escalation exits 5 but still writes artifacts") {
  TempDir dir("cli_noconv");
  json j = discrete_config(1.0);
  j["model"]["baths"][0]["modes"][0]["gamma"] = 0.5;
  j["numerics"]["n_max"] = 1;
  j["numerics"]["n_max_step"] = 1;
  j["numerics"]["n_max_cap"] = 2;
  j["numerics"]["escalation_tol"] = 1e-12;
  write_file(dir / "run.json", j.dump());

  const auto r = run_cmd(kBin + " --config " + (dir / "run.json") + " --out " +
                         (dir / "out"));
  CAPTURE(r.out);
  CHECK(r.code == 5);
  CHECK(r.out.find("NOT CONVERGED") != std::string::npos);
  CHECK(fs::exists(dir / "out/transient.csv"));
  const json sidecar = json::parse(read_file(dir / "out/transient.json"));
  CHECK(!sidecar["converged"].get<bool>());
  CHECK(sidecar["worst_rel_change"].get<double>() > 1e-12);
}

TEST_CASE("chi scan artifacts and the compare subcommand verdicts") {
  TempDir dir("cli_chi");
  json j = discrete_config(1.5);
  j["mode"] = "chi_scan";
  j["chi"] = {{"values", {0.2, 0.4}}};
  j["numerics"]["n_max_cap"] = 8;
  j["numerics"]["n_max_step"] = 2;
  j["numerics"]["escalation_tol"] = 1e-6;
  write_file(dir / "run.json", j.dump());

  const auto r = run_cmd(kBin + " --config " + (dir / "run.json") + " --out " +
                         (dir / "out"));
  CAPTURE(r.out);
  REQUIRE(r.code == 0);
  const auto csv = read_file(dir / "out/chi_scan.csv");
  CHECK(csv.rfind("chi,time,re_g,im_g,scheme\n", 0) == 0);
  const json sidecar = json::parse(read_file(dir / "out/chi_scan.json"));
  CHECK(sidecar["points"].size() == 2);
  CHECK(sidecar["converged"].get<bool>());

  const auto same = run_cmd(kBin + " compare " + (dir / "out/chi_scan.csv") +
                            " " + (dir / "out/chi_scan.csv"));
  CHECK(same.code == 0);
  const json verdict = json::parse(same.out);
  CHECK(verdict["pass"].get<bool>());
  CHECK(verdict["columns"].size() == 5);

  write_file(dir / "x.csv", "value\n1.0\n2.0\n");
  write_file(dir / "y.csv", "value\n1.05\n2.0\n");
  const auto fails = run_cmd(kBin + " compare " + (dir / "x.csv") + " " +
                             (dir / "y.csv") + " --atol 0.01");
  CHECK(fails.code == 1);
  CHECK(!json::parse(fails.out)["pass"].get<bool>());
  const auto loose = run_cmd(kBin + " compare " + (dir / "x.csv") + " " +
                             (dir / "y.csv") + " --atol 0.1");
  CHECK(loose.code == 0);

  write_file(dir / "z.csv", "other\n1.0\n");
  CHECK(run_cmd(kBin + " compare " + (dir / "x.csv") + " " + (dir / "z.csv"))
            .code == 3);
}

TEST_CASE("a dumped basis reproduces the run byte for byte") {
  TempDir dir("cli_basis");
  write_file(dir / "run.json", ohmic_config().dump());

  const auto r1 =
      run_cmd(kBin + " --config " + (dir / "run.json") + " --out " +
              (dir / "a") + " --basis-out " + (dir / "basis.txt"));
  CAPTURE(r1.out);
  REQUIRE(r1.code == 0);
  REQUIRE(fs::exists(dir / "basis.txt"));

  const auto r2 =
      run_cmd(kBin + " --config " + (dir / "run.json") + " --out " +
              (dir / "b") + " --basis-in " + (dir / "basis.txt"));
  REQUIRE(r2.code == 0);
  CHECK(read_file(dir / "a/transient.csv") == read_file(dir / "b/transient.csv"));

  write_file(dir / "mangled.txt", "heomfcs-basis 1\nnot really\n");
  CHECK(run_cmd(kBin + " --config " + (dir / "run.json") + " --basis-in " +
                (dir / "mangled.txt") + " --out " + (dir / "c"))
            .code == 2);
}

TEST_CASE("checkpoint resume continues the very same trajectory") {
  TempDir dir("cli_ckpt");
  write_file(dir / "leg1.json", discrete_config(1.0).dump());
  write_file(dir / "full.json", discrete_config(2.0).dump());

  const auto r1 =
      run_cmd(kBin + " --config " + (dir / "leg1.json") + " --out " +
              (dir / "leg1") + " --checkpoint-out " + (dir / "state.ckpt"));
  CAPTURE(r1.out);
  REQUIRE(r1.code == 0);
  REQUIRE(fs::exists(dir / "state.ckpt"));

  const auto r2 =
      run_cmd(kBin + " --config " + (dir / "full.json") + " --out " +
              (dir / "leg2") + " --checkpoint-in " + (dir / "state.ckpt"));
  CAPTURE(r2.out);
  REQUIRE(r2.code == 0);

  const auto r3 = run_cmd(kBin + " --config " + (dir / "full.json") +
                          " --out " + (dir / "full"));
  REQUIRE(r3.code == 0);

  // the resumed leg reports [1, 2]; since both runs take identical RK4
  // steps, every overlapping row must agree. Derivative columns at the
  // resume point are skipped: that row is an endpoint of one grid and an
  // interior point of the other, so the stencils legitimately differ.
  const auto resumed = csv_rows(read_file(dir / "leg2/transient.csv"));
  const auto oneshot = csv_rows(read_file(dir / "full/transient.csv"));
  REQUIRE(resumed.size() >= 3);
  REQUIRE(resumed[0] == oneshot[0]);
  const size_t fields = resumed[0].size();
  int matched = 0;
  for (size_t i = 1; i < resumed.size(); ++i) {
    const double t = std::stod(resumed[i][0]);
    for (size_t j = 1; j < oneshot.size(); ++j) {
      if (std::abs(std::stod(oneshot[j][0]) - t) > 1e-9) continue;
      ++matched;
      for (size_t c = 1; c + 1 < fields; ++c) {
        const bool derivative_col = resumed[0][c].rfind("dcumulant", 0) == 0;
        if (i == 1 && derivative_col) continue;
        const double a = std::stod(resumed[i][c]);
        const double b = std::stod(oneshot[j][c]);
        const double tol = derivative_col ? 1e-9 : 1e-12;
        CHECK(std::abs(a - b) <=
              tol * std::max({1.0, std::abs(a), std::abs(b)}));
      }
      CHECK(resumed[i].back() == oneshot[j].back());
    }
  }
  CHECK(matched == static_cast<int>(resumed.size()) - 1);

  // resuming a state already at t_end is refused
  CHECK(run_cmd(kBin + " --config " + (dir / "leg1.json") +
                " --checkpoint-in " + (dir / "state.ckpt") + " --out " +
                (dir / "again"))
            .code == 3);

  // escalation and checkpoints are mutually exclusive
  json esc = discrete_config(2.0);
  esc["numerics"]["n_max_cap"] = 8;
  write_file(dir / "esc.json", esc.dump());
  CHECK(run_cmd(kBin + " --config " + (dir / "esc.json") +
                " --checkpoint-out " + (dir / "x.ckpt") + " --out " +
                (dir / "esc"))
            .code == 3);
}

TEST_CASE("every flag is mirrored by an environment variable") {
  TempDir dir("cli_env");
  write_file(dir / "run.json", discrete_config().dump());

  const auto flagged = run_cmd(kBin + " --config " + (dir / "run.json") +
                               " --out " + (dir / "a") + " --tmax 1.0");
  REQUIRE(flagged.code == 0);

  const auto env = run_cmd("HEOMFCS_CONFIG=" + (dir / "run.json") +
                           " HEOMFCS_OUT=" + (dir / "b") +
                           " HEOMFCS_TMAX=1.0 " + kBin);
  CAPTURE(env.out);
  REQUIRE(env.code == 0);
  CHECK(read_file(dir / "a/transient.csv") == read_file(dir / "b/transient.csv"));
}

TEST_CASE("oracle comparison mode validates the engine end to end") {
  TempDir dir("cli_oracle");
  json j = discrete_config(2.0);
  j["mode"] = "oracle_compare";
  j["oracle"] = {{"fock_cutoff", 14}, {"chi_values", {0.3}}};
  j["numerics"]["n_max"] = 4;
  j["numerics"]["n_max_step"] = 2;
  j["numerics"]["n_max_cap"] = 10;
  j["numerics"]["escalation_tol"] = 1e-7;
  write_file(dir / "run.json", j.dump());

  const auto r = run_cmd(kBin + " --config " + (dir / "run.json") + " --out " +
                         (dir / "out"));
  CAPTURE(r.out);
  REQUIRE(r.code == 0);
  const json sidecar = json::parse(read_file(dir / "out/oracle_compare.json"));
  CHECK(sidecar["max_abs_err"].get<double>() < 1e-5);
  CHECK(sidecar["fock_top_level_weight"].get<double>() < 1e-5);
  const auto csv = read_file(dir / "out/oracle_compare.csv");
  CHECK(csv.rfind("chi,time,re_g_heom,im_g_heom,re_g_exact,im_g_exact,"
                  "abs_err,scheme\n", 0) == 0);
}

TEST_CASE("conductance scan emits one judged row per parameter value") {
  TempDir dir("cli_cond");
  json j = discrete_config(3.0);
  j["mode"] = "conductance_scan";
  j["scan"] = {{"parameter", "temperature"}, {"values", {0.8, 1.2}}};
  j["numerics"]["n_max"] = 3;
  j["numerics"]["n_max_step"] = 2;
  j["numerics"]["n_max_cap"] = 7;
  j["numerics"]["escalation_tol"] = 0.05;
  write_file(dir / "run.json", j.dump());

  const auto r = run_cmd(kBin + " --config " + (dir / "run.json") + " --out " +
                         (dir / "out"));
  CAPTURE(r.out);
  REQUIRE(r.code == 0);
  const auto csv = read_file(dir / "out/conductance_scan.csv");
  CHECK(csv.rfind("temperature,kappa_bias,kappa_fluct,kappa_weak,"
                  "plateau_bias,plateau_fluct,plateau_wobble_bias,"
                  "plateau_wobble_fluct,n_max_used,converged\n", 0) == 0);
  std::istringstream is(csv);
  std::string line;
  int rows = 0;
  std::getline(is, line);
  while (std::getline(is, line)) {
    if (!line.empty()) ++rows;
  }
  CHECK(rows == 2);
  const json sidecar = json::parse(read_file(dir / "out/conductance_scan.json"));
  CHECK(sidecar["points"].get<int>() == 2);
}
