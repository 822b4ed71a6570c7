#include <doctest/doctest.h>

#include <cstdio>
#include <fstream>
#include <string>

#include <nlohmann/json.hpp>

#include "heomfcs/config.hpp"
#include "heomfcs/model.hpp"
#include "heomfcs/types.hpp"

using namespace heomfcs;
using nlohmann::json;

namespace {

json base_config() {
  return json::parse(R"({
    "model": {
      "two_level": {"omega0": 1.0, "tunneling": 0.4},
      "scheme": "two_point",
      "baths": [
        {"family": "ohmic_exp", "lambda": 0.2, "omega_c": 2.0,
         "temperature": 1.0, "counted": true}
      ]
    },
    "mode": "transient",
    "numerics": {"n_max": 5, "dt": 0.01, "t_end": 4.0, "m_max": 2},
    "output": {"directory": "outdir", "stride": 10}
  })");
}

std::string config_error_message(const std::string& text) {
  try {
    (void)parse_config(text);
  } catch (const config_error& e) {
    return e.what();
  }
  return "";
}

std::string validation_message(const RunConfig& cfg) {
  try {
    validate_config(cfg);
  } catch (const validation_error& e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST_CASE("shorthand and explicit model forms parse to the same config") {
  const auto cfg = parse_config(base_config().dump());
  CHECK(cfg.mode == RunMode::Transient);
  CHECK(cfg.numerics.n_max == 5);
  CHECK(cfg.numerics.dt == 0.01);
  CHECK(cfg.numerics.t_end == 4.0);
  CHECK(cfg.numerics.m_max == 2);
  CHECK(cfg.numerics.output_stride == 10);
  CHECK(cfg.out_dir == "outdir");
  CHECK(cfg.model.scheme == MeasurementScheme::TwoPoint);
  CHECK(cfg.model.dim() == 2);
  CHECK(cfg.model.baths.size() == 1);
  CHECK(cfg.model.baths[0].counted);
  validate_config(cfg);

  const auto direct = build_two_level_model(
      1.0, 0.4, {cfg.model.baths[0]}, MeasurementScheme::TwoPoint);
  CHECK((cfg.model.h_sys - direct.h_sys).cwiseAbs().maxCoeff() == 0.0);
  CHECK((cfg.model.rho0 - direct.rho0).cwiseAbs().maxCoeff() == 0.0);

  // spell the same model with explicit matrices; the canonical form and
  // therefore the run hash must coincide with the shorthand
  json explicit_cfg = base_config();
  explicit_cfg["model"].erase("two_level");
  auto mat = [](const ComplexMatrix& m) {
    json rows = json::array();
    for (int i = 0; i < m.rows(); ++i) {
      json row = json::array();
      for (int j = 0; j < m.cols(); ++j) {
        row.push_back(json::array({m(i, j).real(), m(i, j).imag()}));
      }
      rows.push_back(row);
    }
    return rows;
  };
  explicit_cfg["model"]["h_sys"] = mat(direct.h_sys);
  explicit_cfg["model"]["rho0"] = mat(direct.rho0);
  explicit_cfg["model"]["couplings"] = json::array({mat(direct.couplings[0])});
  const auto cfg2 = parse_config(explicit_cfg.dump());
  CHECK(cfg2.hash() == cfg.hash());
  CHECK(cfg2.canonical() == cfg.canonical());
}

TEST_CASE("formatting does not leak into the run hash, values do") {
  const auto a = parse_config(base_config().dump());
  const auto b = parse_config(base_config().dump(4));  // re-indented
  CHECK(a.hash() == b.hash());
  CHECK(a.canonical().dump() == a.canonical().dump());

  json tweaked = base_config();
  tweaked["numerics"]["dt"] = 0.02;
  CHECK(parse_config(tweaked.dump()).hash() != a.hash());

  json renamed = base_config();
  renamed["model"]["baths"][0]["name"] = "meter";
  CHECK(parse_config(renamed.dump()).hash() != a.hash());
}

TEST_CASE("unknown keys are rejected with their full path") {
  json j = base_config();
  j["surprise"] = 1;
  CHECK(config_error_message(j.dump()).find("$.surprise") != std::string::npos);

  j = base_config();
  j["numerics"]["n_mx"] = 3;
  CHECK(config_error_message(j.dump()).find("$.numerics.n_mx") !=
        std::string::npos);

  j = base_config();
  j["model"]["baths"][0]["coupling"] = 0.1;
  CHECK(config_error_message(j.dump()).find("$.model.baths[0].coupling") !=
        std::string::npos);

  j = base_config();
  j["model"]["two_level"]["gap"] = 2.0;
  CHECK(config_error_message(j.dump()).find("$.model.two_level.gap") !=
        std::string::npos);
}

TEST_CASE("shape and type errors carry the offending path") {
  CHECK(config_error_message("{ not json").find("config:") !=
        std::string::npos);

  json j = json::object();
  CHECK(config_error_message(j.dump()).find("$.model") != std::string::npos);

  j = base_config();
  j["numerics"]["dt"] = "fast";
  CHECK(config_error_message(j.dump()).find("$.numerics.dt") !=
        std::string::npos);

  j = base_config();
  j["numerics"]["n_max"] = 2.5;
  {
    const auto msg = config_error_message(j.dump());
    CHECK(msg.find("$.numerics.n_max") != std::string::npos);
    CHECK(msg.find("integer") != std::string::npos);
  }

  j = base_config();
  j["numerics"]["adaptive"] = 1;
  CHECK(config_error_message(j.dump()).find("boolean") != std::string::npos);

  j = base_config();
  j["mode"] = "steady_state";
  CHECK(config_error_message(j.dump()).find("unknown mode") !=
        std::string::npos);

  j = base_config();
  j["model"]["scheme"] = "both";
  CHECK(config_error_message(j.dump()).find("$.model.scheme") !=
        std::string::npos);

  j = base_config();
  j["model"]["baths"][0]["family"] = "lorentz";
  CHECK(config_error_message(j.dump()).find("unknown bath family") !=
        std::string::npos);

  j = base_config();
  j["model"]["baths"] = json::array();
  CHECK(config_error_message(j.dump()).find("$.model.baths") !=
        std::string::npos);

  j = base_config();
  j["model"]["h_sys"] = json::array({json::array({1.0, 0.0})});
  CHECK(config_error_message(j.dump()).find("two_level shorthand excludes") !=
        std::string::npos);

  j = base_config();
  j["model"]["baths"][0].erase("temperature");
  CHECK(config_error_message(j.dump())
            .find("$.model.baths[0].temperature") != std::string::npos);

  j = base_config();
  j["oracle"] = json{{"seed", -3}};
  CHECK(config_error_message(j.dump()).find("$.oracle.seed") !=
        std::string::npos);
}

TEST_CASE("explicit matrices reject ragged rows and bad complex entries") {
  json j = base_config();
  j["model"].erase("two_level");
  j["model"]["rho0"] = json::array(
      {json::array({0.5, 0.0}), json::array({0.0, 0.5})});
  j["model"]["couplings"] = json::array();
  j["model"]["h_sys"] =
      json::array({json::array({1.0, 0.0}), json::array({0.0})});
  {
    const auto msg = config_error_message(j.dump());
    CHECK(msg.find("ragged") != std::string::npos);
  }

  j["model"]["h_sys"] = json::array(
      {json::array({json::array({1.0}), 0.0}), json::array({0.0, -1.0})});
  CHECK(config_error_message(j.dump()).find("[re, im]") != std::string::npos);

  j["model"]["h_sys"] =
      json::array({json::array({1.0, 0.0}), json::array({0.0, -1.0})});
  // couplings array must match the bath count
  CHECK(config_error_message(j.dump()).find("one coupling matrix per bath") !=
        std::string::npos);
}

TEST_CASE("cli overrides apply on top of the file, lifting the cap if needed") {
  auto cfg = parse_config(base_config().dump());
  CHECK(cfg.numerics.n_max_cap == 12);

  CliOverrides o;
  o.mode = "chi_scan";
  o.nmax = 9;
  o.dt = 0.002;
  o.tmax = 7.5;
  o.out = "elsewhere";
  o.workers = 3;
  o.seed = 42u;
  o.basis_in = "basis.txt";
  o.checkpoint_out = "state.ckpt";
  apply_overrides(cfg, o);
  CHECK(cfg.mode == RunMode::ChiScan);
  CHECK(cfg.numerics.n_max == 9);
  CHECK(cfg.numerics.n_max_cap == 12);  // still above, untouched
  CHECK(cfg.numerics.dt == 0.002);
  CHECK(cfg.numerics.t_end == 7.5);
  CHECK(cfg.out_dir == "elsewhere");
  CHECK(cfg.numerics.workers == 3);
  CHECK(cfg.oracle.seed == 42u);
  CHECK(cfg.basis_in == "basis.txt");
  CHECK(cfg.checkpoint_out == "state.ckpt");

  CliOverrides deep;
  deep.nmax = 20;
  apply_overrides(cfg, deep);
  CHECK(cfg.numerics.n_max == 20);
  CHECK(cfg.numerics.n_max_cap == 20);  // cap lifted to keep the pair sane

  CliOverrides bad;
  bad.mode = "warp";
  CHECK_THROWS_AS(apply_overrides(cfg, bad), config_error);
}

TEST_CASE("semantic validation walks every constraint") {
  const auto good = parse_config(base_config().dump());
  validate_config(good);

  auto expect = [&](auto mutate, const char* needle) {
    RunConfig cfg = good;
    mutate(cfg);
    const auto msg = validation_message(cfg);
    CAPTURE(needle);
    CHECK(msg.find(needle) != std::string::npos);
  };

  expect([](RunConfig& c) { c.numerics.n_max = 0; }, "n_max must be >= 1");
  expect([](RunConfig& c) { c.numerics.n_max_step = 0; }, "n_max_step");
  expect([](RunConfig& c) { c.numerics.n_max_cap = 2; }, "n_max_cap");
  expect([](RunConfig& c) { c.numerics.dt = 0.0; }, "dt must be positive");
  expect([](RunConfig& c) { c.numerics.t_end = 0.001; }, "t_end must exceed");
  expect([](RunConfig& c) { c.numerics.m_max = -1; }, "m_max");
  expect([](RunConfig& c) { c.numerics.fit_terms = 0; }, "fit_terms");
  expect([](RunConfig& c) { c.numerics.escalation_tol = 0.0; },
         "escalation_tol");
  expect([](RunConfig& c) { c.numerics.adaptive_tol = -1.0; }, "adaptive_tol");
  expect([](RunConfig& c) { c.numerics.beta_delta_rel = 0.0; },
         "beta_delta_rel");
  expect([](RunConfig& c) { c.numerics.output_stride = 0; }, "stride");
  expect([](RunConfig& c) { c.numerics.workers = 0; }, "workers");

  expect([](RunConfig& c) { c.mode = RunMode::ConductanceScan; },
         "needs scan.values");
  expect(
      [](RunConfig& c) {
        c.mode = RunMode::ConductanceScan;
        c.scan.parameter = "coupling";
        c.scan.values = {0.1};
      },
      "scan.parameter");
  expect(
      [](RunConfig& c) {
        c.mode = RunMode::ConductanceScan;
        c.scan.values = {0.1, -0.2};
      },
      "must be positive");
  expect([](RunConfig& c) { c.mode = RunMode::ChiScan; }, "needs chi.values");

  expect(
      [](RunConfig& c) {
        c.mode = RunMode::ChiScan;
        c.chi.values = {0.1};
        c.checkpoint_out = "x.ckpt";
      },
      "transient mode only");
  expect([](RunConfig& c) { c.checkpoint_in = "x.ckpt"; },
         "n_max_cap == n_max");
  {
    RunConfig cfg = good;
    cfg.checkpoint_out = "x.ckpt";
    cfg.numerics.n_max_cap = cfg.numerics.n_max;
    validate_config(cfg);  // pinned truncation makes checkpoints legal
  }

  expect([](RunConfig& c) { c.mode = RunMode::OracleCompare; },
         "oracle.chi_values");
  expect(
      [](RunConfig& c) {
        c.mode = RunMode::OracleCompare;
        c.oracle.chi_values = {0.2};
        c.oracle.fock_cutoff = 1;
      },
      "fock_cutoff");
  expect(
      [](RunConfig& c) {
        c.mode = RunMode::OracleCompare;
        c.oracle.chi_values = {0.2};
      },
      "discrete baths");

  // model invariants run through the same gate
  expect([](RunConfig& c) { c.model.rho0(0, 0) = Complex{0.9, 0.0}; },
         "trace");
}

TEST_CASE("config files load through the same parser") {
  const std::string path = "config_roundtrip_tmp.json";
  {
    std::ofstream os(path);
    os << base_config().dump(2) << "\n";
  }
  const auto from_file = load_config_file(path);
  const auto from_text = parse_config(base_config().dump());
  CHECK(from_file.hash() == from_text.hash());
  std::remove(path.c_str());

  CHECK_THROWS_AS((void)load_config_file("no_such_dir/missing.json"),
                  config_error);
}

TEST_CASE("mode names round trip") {
  for (auto m : {RunMode::Transient, RunMode::ConductanceScan, RunMode::ChiScan,
                 RunMode::OracleCompare}) {
    CHECK(run_mode_from_string(to_string(m)) == m);
  }
  CHECK_THROWS_AS((void)run_mode_from_string(""), config_error);
}
