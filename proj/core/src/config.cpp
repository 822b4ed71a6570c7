#include "heomfcs/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

namespace heomfcs {

uint64_t fnv1a(const std::string& s);  // defined with the report helpers

namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& path, const std::string& what) {
  throw config_error("config: " + path + ": " + what);
}

const json& member(const json& obj, const std::string& path,
                   const std::string& key) {
  if (!obj.is_object()) fail(path, "expected an object");
  auto it = obj.find(key);
  if (it == obj.end()) fail(path + "." + key, "missing");
  return *it;
}

void check_keys(const json& obj, const std::string& path,
                const std::set<std::string>& allowed) {
  if (!obj.is_object()) fail(path, "expected an object");
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    if (allowed.count(it.key()) == 0) fail(path + "." + it.key(), "unknown key");
  }
}

double as_number(const json& v, const std::string& path) {
  if (!v.is_number()) fail(path, "expected a number");
  return v.get<double>();
}

int as_int(const json& v, const std::string& path) {
  if (!v.is_number_integer()) fail(path, "expected an integer");
  return v.get<int>();
}

bool as_bool(const json& v, const std::string& path) {
  if (!v.is_boolean()) fail(path, "expected a boolean");
  return v.get<bool>();
}

std::string as_string(const json& v, const std::string& path) {
  if (!v.is_string()) fail(path, "expected a string");
  return v.get<std::string>();
}

Complex as_complex(const json& v, const std::string& path) {
  if (v.is_number()) return Complex{v.get<double>(), 0.0};
  if (v.is_array() && v.size() == 2 && v[0].is_number() && v[1].is_number()) {
    return Complex{v[0].get<double>(), v[1].get<double>()};
  }
  fail(path, "expected a number or [re, im]");
}

ComplexMatrix as_matrix(const json& v, const std::string& path) {
  if (!v.is_array() || v.empty()) fail(path, "expected a matrix (array of rows)");
  const size_t rows = v.size();
  const size_t cols = v[0].is_array() ? v[0].size() : 0;
  if (cols == 0) fail(path, "expected a matrix (array of rows)");
  ComplexMatrix m(rows, cols);
  for (size_t i = 0; i < rows; ++i) {
    if (!v[i].is_array() || v[i].size() != cols) {
      fail(path, "ragged matrix rows");
    }
    for (size_t j = 0; j < cols; ++j) {
      m(static_cast<int>(i), static_cast<int>(j)) = as_complex(
          v[i][j], path + "[" + std::to_string(i) + "][" + std::to_string(j) +
                       "]");
    }
  }
  return m;
}

std::vector<double> as_number_list(const json& v, const std::string& path) {
  if (!v.is_array()) fail(path, "expected an array of numbers");
  std::vector<double> out;
  out.reserve(v.size());
  for (size_t i = 0; i < v.size(); ++i) {
    out.push_back(as_number(v[i], path + "[" + std::to_string(i) + "]"));
  }
  return out;
}

BathFamily family_from_string(const std::string& s, const std::string& path) {
  if (s == "ohmic_exp") return BathFamily::OhmicExpCutoff;
  if (s == "drude_lorentz") return BathFamily::DrudeLorentz;
  if (s == "discrete") return BathFamily::Discrete;
  fail(path, "unknown bath family '" + s + "'");
}

MeasurementScheme scheme_from_string(const std::string& s,
                                     const std::string& path) {
  if (s == "two_point") return MeasurementScheme::TwoPoint;
  if (s == "single") return MeasurementScheme::Single;
  fail(path, "unknown measurement scheme '" + s + "'");
}

BathModel parse_bath(const json& v, const std::string& path, int index) {
  check_keys(v, path, {"name", "family", "lambda", "omega_c", "modes",
                       "temperature", "counted"});
  BathModel bath;
  bath.name = v.contains("name") ? as_string(v["name"], path + ".name")
                                 : "bath" + std::to_string(index);
  bath.density.family =
      family_from_string(as_string(member(v, path, "family"), path + ".family"),
                         path + ".family");
  bath.temperature =
      as_number(member(v, path, "temperature"), path + ".temperature");
  if (v.contains("counted")) {
    bath.counted = as_bool(v["counted"], path + ".counted");
  }
  if (bath.density.family == BathFamily::Discrete) {
    const json& modes = member(v, path, "modes");
    if (!modes.is_array() || modes.empty()) {
      fail(path + ".modes", "expected a non-empty array");
    }
    for (size_t k = 0; k < modes.size(); ++k) {
      const std::string mp = path + ".modes[" + std::to_string(k) + "]";
      check_keys(modes[k], mp, {"omega", "gamma"});
      DiscreteMode m;
      m.omega = as_number(member(modes[k], mp, "omega"), mp + ".omega");
      m.gamma = as_number(member(modes[k], mp, "gamma"), mp + ".gamma");
      bath.density.modes.push_back(m);
    }
  } else {
    bath.density.lambda =
        as_number(member(v, path, "lambda"), path + ".lambda");
    bath.density.omega_c =
        as_number(member(v, path, "omega_c"), path + ".omega_c");
  }
  return bath;
}

SystemModel parse_model(const json& v, const std::string& path) {
  check_keys(v, path, {"two_level", "h_sys", "rho0", "couplings", "baths",
                       "scheme"});
  std::vector<BathModel> baths;
  const json& jb = member(v, path, "baths");
  if (!jb.is_array() || jb.empty()) {
    fail(path + ".baths", "expected a non-empty array");
  }
  for (size_t i = 0; i < jb.size(); ++i) {
    baths.push_back(parse_bath(jb[i], path + ".baths[" + std::to_string(i) + "]",
                               static_cast<int>(i)));
  }
  MeasurementScheme scheme = MeasurementScheme::TwoPoint;
  if (v.contains("scheme")) {
    scheme = scheme_from_string(as_string(v["scheme"], path + ".scheme"),
                                path + ".scheme");
  }
  if (v.contains("two_level")) {
    if (v.contains("h_sys") || v.contains("rho0") || v.contains("couplings")) {
      fail(path, "two_level shorthand excludes explicit matrices");
    }
    const json& tl = v["two_level"];
    check_keys(tl, path + ".two_level", {"omega0", "tunneling"});
    const double omega0 =
        as_number(member(tl, path + ".two_level", "omega0"),
                  path + ".two_level.omega0");
    const double tunneling =
        tl.contains("tunneling")
            ? as_number(tl["tunneling"], path + ".two_level.tunneling")
            : 0.0;
    return build_two_level_model(omega0, tunneling, std::move(baths), scheme);
  }
  SystemModel model;
  model.h_sys = as_matrix(member(v, path, "h_sys"), path + ".h_sys");
  model.rho0 = as_matrix(member(v, path, "rho0"), path + ".rho0");
  const json& jc = member(v, path, "couplings");
  if (!jc.is_array() || jc.size() != baths.size()) {
    fail(path + ".couplings", "expected one coupling matrix per bath");
  }
  for (size_t i = 0; i < jc.size(); ++i) {
    model.couplings.push_back(
        as_matrix(jc[i], path + ".couplings[" + std::to_string(i) + "]"));
  }
  model.baths = std::move(baths);
  model.scheme = scheme;
  return model;
}

void parse_numerics(const json& v, const std::string& path,
                    NumericsConfig& num) {
  check_keys(v, path,
             {"n_max", "n_max_step", "n_max_cap", "dt", "t_end", "m_max",
              "fit_terms", "fit_window", "fit_samples", "escalation_tol",
              "adaptive", "adaptive_tol", "beta_delta_rel", "workers"});
  auto opt_int = [&](const char* key, int& field) {
    if (v.contains(key)) field = as_int(v[key], path + "." + key);
  };
  auto opt_num = [&](const char* key, double& field) {
    if (v.contains(key)) field = as_number(v[key], path + "." + key);
  };
  opt_int("n_max", num.n_max);
  opt_int("n_max_step", num.n_max_step);
  opt_int("n_max_cap", num.n_max_cap);
  opt_num("dt", num.dt);
  opt_num("t_end", num.t_end);
  opt_int("m_max", num.m_max);
  opt_int("fit_terms", num.fit_terms);
  opt_num("fit_window", num.fit_window);
  opt_int("fit_samples", num.fit_samples);
  opt_num("escalation_tol", num.escalation_tol);
  if (v.contains("adaptive")) {
    num.adaptive = as_bool(v["adaptive"], path + ".adaptive");
  }
  opt_num("adaptive_tol", num.adaptive_tol);
  opt_num("beta_delta_rel", num.beta_delta_rel);
  opt_int("workers", num.workers);
}

json complex_to_json(const Complex& z) { return json::array({z.real(), z.imag()}); }

json matrix_to_json(const ComplexMatrix& m) {
  json rows = json::array();
  for (int i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (int j = 0; j < m.cols(); ++j) row.push_back(complex_to_json(m(i, j)));
    rows.push_back(row);
  }
  return rows;
}

}  // namespace

const char* to_string(RunMode m) {
  switch (m) {
    case RunMode::Transient: return "transient";
    case RunMode::ConductanceScan: return "conductance_scan";
    case RunMode::ChiScan: return "chi_scan";
    case RunMode::OracleCompare: return "oracle_compare";
  }
  return "?";
}

RunMode run_mode_from_string(const std::string& s) {
  if (s == "transient") return RunMode::Transient;
  if (s == "conductance_scan") return RunMode::ConductanceScan;
  if (s == "chi_scan") return RunMode::ChiScan;
  if (s == "oracle_compare") return RunMode::OracleCompare;
  throw config_error("config: mode: unknown mode '" + s + "'");
}

RunConfig parse_config(const std::string& text) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::exception& e) {
    throw config_error(std::string("config: ") + e.what());
  }
  check_keys(root, "$", {"model", "numerics", "mode", "output", "scan", "chi",
                         "oracle", "io"});
  RunConfig cfg;
  cfg.model = parse_model(member(root, "$", "model"), "$.model");
  if (root.contains("mode")) {
    cfg.mode = run_mode_from_string(as_string(root["mode"], "$.mode"));
  }
  if (root.contains("numerics")) {
    parse_numerics(root["numerics"], "$.numerics", cfg.numerics);
  }
  if (root.contains("output")) {
    const json& out = root["output"];
    check_keys(out, "$.output", {"directory", "stride"});
    if (out.contains("directory")) {
      cfg.out_dir = as_string(out["directory"], "$.output.directory");
    }
    if (out.contains("stride")) {
      cfg.numerics.output_stride = as_int(out["stride"], "$.output.stride");
    }
  }
  if (root.contains("scan")) {
    const json& sc = root["scan"];
    check_keys(sc, "$.scan", {"parameter", "values"});
    if (sc.contains("parameter")) {
      cfg.scan.parameter = as_string(sc["parameter"], "$.scan.parameter");
    }
    cfg.scan.values = as_number_list(member(sc, "$.scan", "values"),
                                     "$.scan.values");
  }
  if (root.contains("chi")) {
    const json& ch = root["chi"];
    check_keys(ch, "$.chi", {"values"});
    cfg.chi.values = as_number_list(member(ch, "$.chi", "values"),
                                    "$.chi.values");
  }
  if (root.contains("io")) {
    const json& io = root["io"];
    check_keys(io, "$.io", {"basis_in", "basis_out", "checkpoint_in",
                            "checkpoint_out"});
    auto opt_path = [&](const char* key, std::string& field) {
      if (io.contains(key)) field = as_string(io[key], std::string("$.io.") + key);
    };
    opt_path("basis_in", cfg.basis_in);
    opt_path("basis_out", cfg.basis_out);
    opt_path("checkpoint_in", cfg.checkpoint_in);
    opt_path("checkpoint_out", cfg.checkpoint_out);
  }
  if (root.contains("oracle")) {
    const json& orc = root["oracle"];
    check_keys(orc, "$.oracle", {"fock_cutoff", "chi_values", "seed"});
    if (orc.contains("fock_cutoff")) {
      cfg.oracle.fock_cutoff = as_int(orc["fock_cutoff"], "$.oracle.fock_cutoff");
    }
    if (orc.contains("chi_values")) {
      cfg.oracle.chi_values =
          as_number_list(orc["chi_values"], "$.oracle.chi_values");
    }
    if (orc.contains("seed")) {
      const int s = as_int(orc["seed"], "$.oracle.seed");
      if (s < 0) fail("$.oracle.seed", "expected a non-negative integer");
      cfg.oracle.seed = static_cast<unsigned>(s);
    }
  }
  return cfg;
}

RunConfig load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw config_error("config: cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

void apply_overrides(RunConfig& cfg, const CliOverrides& o) {
  if (o.mode) cfg.mode = run_mode_from_string(*o.mode);
  if (o.nmax) {
    cfg.numerics.n_max = *o.nmax;
    cfg.numerics.n_max_cap = std::max(cfg.numerics.n_max_cap, *o.nmax);
  }
  if (o.dt) cfg.numerics.dt = *o.dt;
  if (o.tmax) cfg.numerics.t_end = *o.tmax;
  if (o.out) cfg.out_dir = *o.out;
  if (o.workers) cfg.numerics.workers = *o.workers;
  if (o.seed) cfg.oracle.seed = *o.seed;
  if (o.basis_in) cfg.basis_in = *o.basis_in;
  if (o.basis_out) cfg.basis_out = *o.basis_out;
  if (o.checkpoint_in) cfg.checkpoint_in = *o.checkpoint_in;
  if (o.checkpoint_out) cfg.checkpoint_out = *o.checkpoint_out;
}

nlohmann::json RunConfig::canonical() const {
  json jm;
  jm["h_sys"] = matrix_to_json(model.h_sys);
  jm["rho0"] = matrix_to_json(model.rho0);
  json jc = json::array();
  for (const auto& v : model.couplings) jc.push_back(matrix_to_json(v));
  jm["couplings"] = jc;
  jm["scheme"] = to_string(model.scheme);
  json jb = json::array();
  for (const auto& bath : model.baths) {
    json b;
    b["name"] = bath.name;
    b["family"] = to_string(bath.density.family);
    b["temperature"] = bath.temperature;
    b["counted"] = bath.counted;
    if (bath.density.family == BathFamily::Discrete) {
      json modes = json::array();
      for (const auto& m : bath.density.modes) {
        modes.push_back(json{{"omega", m.omega}, {"gamma", m.gamma}});
      }
      b["modes"] = modes;
    } else {
      b["lambda"] = bath.density.lambda;
      b["omega_c"] = bath.density.omega_c;
    }
    jb.push_back(b);
  }
  jm["baths"] = jb;

  json jn;
  jn["n_max"] = numerics.n_max;
  jn["n_max_step"] = numerics.n_max_step;
  jn["n_max_cap"] = numerics.n_max_cap;
  jn["dt"] = numerics.dt;
  jn["t_end"] = numerics.t_end;
  jn["m_max"] = numerics.m_max;
  jn["fit_terms"] = numerics.fit_terms;
  jn["fit_window"] = numerics.fit_window;
  jn["fit_samples"] = numerics.fit_samples;
  jn["escalation_tol"] = numerics.escalation_tol;
  jn["adaptive"] = numerics.adaptive;
  jn["adaptive_tol"] = numerics.adaptive_tol;
  jn["beta_delta_rel"] = numerics.beta_delta_rel;
  jn["workers"] = numerics.workers;

  json root;
  root["model"] = jm;
  root["numerics"] = jn;
  root["mode"] = to_string(mode);
  root["output"] = json{{"directory", out_dir},
                        {"stride", numerics.output_stride}};
  root["scan"] = json{{"parameter", scan.parameter}, {"values", scan.values}};
  root["chi"] = json{{"values", chi.values}};
  root["oracle"] = json{{"fock_cutoff", oracle.fock_cutoff},
                        {"chi_values", oracle.chi_values},
                        {"seed", oracle.seed}};
  root["io"] = json{{"basis_in", basis_in},
                    {"basis_out", basis_out},
                    {"checkpoint_in", checkpoint_in},
                    {"checkpoint_out", checkpoint_out}};
  return root;
}

uint64_t RunConfig::hash() const { return fnv1a(canonical().dump()); }

void validate_config(const RunConfig& cfg) {
  const auto& n = cfg.numerics;
  auto require = [](bool ok, const char* what) {
    if (!ok) throw validation_error(std::string("config: ") + what);
  };
  require(n.n_max >= 1, "n_max must be >= 1");
  require(n.n_max_step >= 1, "n_max_step must be >= 1");
  require(n.n_max_cap >= n.n_max, "n_max_cap must be >= n_max");
  require(n.dt > 0.0, "dt must be positive");
  require(n.t_end > n.dt, "t_end must exceed dt");
  require(n.m_max >= 0, "m_max must be >= 0");
  require(n.fit_terms >= 1, "fit_terms must be >= 1");
  require(n.escalation_tol > 0.0, "escalation_tol must be positive");
  require(n.adaptive_tol > 0.0, "adaptive_tol must be positive");
  require(n.beta_delta_rel > 0.0, "beta_delta_rel must be positive");
  require(n.output_stride >= 1, "output stride must be >= 1");
  require(n.workers >= 1, "workers must be >= 1");
  if (cfg.mode == RunMode::ConductanceScan) {
    require(!cfg.scan.values.empty(), "conductance_scan needs scan.values");
    require(cfg.scan.parameter == "lambda" || cfg.scan.parameter == "omega_c" ||
                cfg.scan.parameter == "temperature",
            "scan.parameter must be lambda, omega_c, or temperature");
    for (double v : cfg.scan.values) {
      require(v > 0.0, "scan.values must be positive");
    }
  }
  if (cfg.mode == RunMode::ChiScan) {
    require(!cfg.chi.values.empty(), "chi_scan needs chi.values");
  }
  const bool has_checkpoint =
      !cfg.checkpoint_in.empty() || !cfg.checkpoint_out.empty();
  if (has_checkpoint) {
    require(cfg.mode == RunMode::Transient,
            "checkpoints apply to transient mode only");
    require(n.n_max_cap == n.n_max,
            "checkpoints pin the truncation: set n_max_cap == n_max");
  }
  if (cfg.mode == RunMode::OracleCompare) {
    require(!cfg.oracle.chi_values.empty(),
            "oracle_compare needs oracle.chi_values");
    require(cfg.oracle.fock_cutoff >= 2, "oracle.fock_cutoff must be >= 2");
    for (const auto& bath : cfg.model.baths) {
      require(bath.density.family == BathFamily::Discrete,
              "oracle_compare needs discrete baths");
    }
  }
  validate(cfg.model);
}

}  // namespace heomfcs
