#include "heomfcs/runner.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "heomfcs/oracle.hpp"
#include "heomfcs/propagator.hpp"

namespace heomfcs {

namespace {

DecomposeOptions decompose_options(const NumericsConfig& num) {
  DecomposeOptions opts;
  opts.max_terms = num.fit_terms;
  opts.window = num.fit_window;
  opts.samples = num.fit_samples;
  return opts;
}

IntegratorOptions integrator_options(const NumericsConfig& num) {
  IntegratorOptions opts;
  opts.dt = num.dt;
  opts.t_end = num.t_end;
  opts.output_stride = num.output_stride;
  opts.adaptive = num.adaptive;
  opts.adaptive_tol = num.adaptive_tol;
  opts.workers = num.workers;
  return opts;
}

std::vector<int> terms_per_bath(const ExpansionBasis& basis) {
  std::vector<int> out;
  out.reserve(basis.baths.size());
  for (const auto& b : basis.baths) out.push_back(b.terms());
  return out;
}

// per order: max_t |a - b| / max(max_t |b|, 1e-8); worst across orders
double series_rel_change(const CumulantSeries& fine,
                         const CumulantSeries& coarse) {
  if (fine.order() != coarse.order() || fine.t.size() != coarse.t.size()) {
    throw validation_error("escalation rungs disagree on shape");
  }
  double worst = 0.0;
  for (int n = 0; n < fine.order(); ++n) {
    double dev = 0.0, scale = 0.0;
    for (size_t ti = 0; ti < fine.t.size(); ++ti) {
      dev = std::max(dev, std::abs(fine.kappa[n][ti] - coarse.kappa[n][ti]));
      scale = std::max(scale, std::abs(fine.kappa[n][ti]));
    }
    worst = std::max(worst, dev / std::max(scale, 1e-8));
  }
  return worst;
}

std::string hash_hex(uint64_t h) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

nlohmann::json basis_diagnostics(const ExpansionBasis& basis,
                                 const SystemModel& model) {
  nlohmann::json out = nlohmann::json::array();
  for (size_t nu = 0; nu < basis.baths.size(); ++nu) {
    const auto& b = basis.baths[nu];
    out.push_back({{"bath", model.baths[nu].name},
                   {"terms", b.terms()},
                   {"fit_residual", b.fit_residual},
                   {"fit_scale", b.fit_scale}});
  }
  return out;
}

nlohmann::json base_sidecar(const RunConfig& cfg) {
  nlohmann::json j;
  j["config_hash"] = hash_hex(cfg.hash());
  j["mode"] = to_string(cfg.mode);
  j["scheme"] = to_string(cfg.model.scheme);
  j["config"] = cfg.canonical();
  return j;
}

// write_csv plus one constant trailing string column (same number format)
void write_labeled_csv(const std::string& path, const std::vector<Column>& cols,
                       const std::string& label_name,
                       const std::string& label_value) {
  if (cols.empty()) throw validation_error("csv writer needs columns");
  const size_t rows = cols[0].data->size();
  for (const auto& c : cols) {
    if (c.data->size() != rows) {
      throw validation_error("csv writer: ragged columns");
    }
  }
  std::ofstream os(path);
  if (!os) throw numerical_error("cannot open " + path + " for writing");
  for (size_t c = 0; c < cols.size(); ++c) {
    os << (c ? "," : "") << cols[c].name;
  }
  os << "," << label_name << "\n";
  char buf[40];
  for (size_t r = 0; r < rows; ++r) {
    for (size_t c = 0; c < cols.size(); ++c) {
      std::snprintf(buf, sizeof buf, "%.17g", (*cols[c].data)[r]);
      os << (c ? "," : "") << buf;
    }
    os << "," << label_value << "\n";
  }
  if (!os) throw numerical_error("write failed: " + path);
}

ExpansionBasis load_or_build_basis(const RunConfig& cfg) {
  if (!cfg.basis_in.empty()) {
    std::ifstream is(cfg.basis_in);
    if (!is) throw config_error("cannot open basis file " + cfg.basis_in);
    auto basis = restore_basis(is);
    if (basis.baths.size() != cfg.model.baths.size()) {
      throw validation_error("restored basis has the wrong bath count");
    }
    return basis;
  }
  return build_basis(cfg.model, decompose_options(cfg.numerics));
}

void maybe_dump_basis(const RunConfig& cfg, const ExpansionBasis& basis) {
  if (cfg.basis_out.empty()) return;
  std::ofstream os(cfg.basis_out);
  if (!os) throw config_error("cannot write basis file " + cfg.basis_out);
  dump_basis(basis, os);
}

SystemModel with_parameter(const SystemModel& base, const std::string& param,
                           double value) {
  SystemModel m = base;
  for (auto& bath : m.baths) {
    if (param == "lambda") {
      bath.density.lambda = value;
    } else if (param == "omega_c") {
      bath.density.omega_c = value;
    } else {
      bath.temperature = value;
    }
  }
  return m;
}

}  // namespace

TransientResult run_transient_fixed(const SystemModel& model,
                                    const ExpansionBasis& basis,
                                    const NumericsConfig& num, int n_max,
                                    int m_max, double counted_beta) {
  const auto space =
      IndexSpace::enumerate(terms_per_bath(basis), n_max, m_max);
  const auto tables = cascade_coefficients(model, basis, m_max, counted_beta);
  const Propagator prop(model, basis, tables, space,
                        PropagationMode::MomentCascade);
  auto state = prop.initial_state();
  const auto traj = prop.integrate(state, 0.0, integrator_options(num));
  TransientResult res;
  res.moments = moments_from_fields(traj, space);
  res.cumulants = cumulants_from_moment_series(res.moments);
  res.n_max_used = n_max;
  return res;
}

TransientResult run_transient(const SystemModel& model,
                              const ExpansionBasis& basis,
                              const NumericsConfig& num, int m_max,
                              double counted_beta) {
  int n = num.n_max;
  TransientResult prev;
  bool have_prev = false;
  while (true) {
    TransientResult cur =
        run_transient_fixed(model, basis, num, n, m_max, counted_beta);
    if (have_prev) {
      cur.worst_rel_change =
          series_rel_change(cur.cumulants, prev.cumulants);
      if (cur.worst_rel_change <= num.escalation_tol) {
        cur.converged = true;
        return cur;
      }
    }
    if (n + num.n_max_step > num.n_max_cap) {
      // a degenerate ladder (cap == first rung) disables escalation by
      // explicit request; an exhausted one is a real failure
      cur.converged = !have_prev;
      return cur;
    }
    prev = std::move(cur);
    have_prev = true;
    n += num.n_max_step;
  }
}

BetaFamily build_beta_family(const SystemModel& model,
                             const ExpansionBasis& basis,
                             const NumericsConfig& num, int n_max, int n_hi,
                             int m_hi) {
  if (m_hi < 0 || m_hi > 3) {
    throw validation_error("beta family supports m_hi in 0..3");
  }
  const int counted = counted_bath_index(model);
  BetaFamily fam;
  fam.beta = model.baths[counted].beta();
  fam.delta = num.beta_delta_rel * fam.beta;
  std::vector<double> mults{0.0};
  if (m_hi >= 1) {
    mults.insert(mults.end(), {0.5, -0.5, 1.0, -1.0});
  }
  if (m_hi >= 3) {
    mults.insert(mults.end(), {2.0, -2.0});
  }
  for (double mult : mults) {
    // every offset (the central one included) goes through the frozen-basis
    // re-projection so the stencil differences share its bias
    const double beta_arg = fam.beta + mult * fam.delta;
    auto res = run_transient_fixed(model, basis, num, n_max, n_hi, beta_arg);
    fam.runs.emplace(mult, std::move(res.cumulants));
  }
  return fam;
}

ChiResult run_chi_point(const SystemModel& model, const ExpansionBasis& basis,
                        const NumericsConfig& num, double chi) {
  ChiResult out;
  out.chi = chi;
  const auto tables = chi_coefficients(model, basis, Complex{chi, 0.0});
  int n = num.n_max;
  std::vector<Complex> prev;
  while (true) {
    const auto space = IndexSpace::enumerate(terms_per_bath(basis), n, 0);
    const Propagator prop(model, basis, tables, space,
                          PropagationMode::ChiResolved);
    auto state = prop.initial_state();
    const auto traj = prop.integrate(state, 0.0, integrator_options(num));
    out.g = traj.cgf;
    out.t.clear();
    for (const auto& snap : traj.snapshots) out.t.push_back(snap.t);
    out.n_max_used = n;
    if (!prev.empty()) {
      double dev = 0.0, scale = 0.0;
      for (size_t i = 0; i < out.g.size(); ++i) {
        dev = std::max(dev, std::abs(out.g[i] - prev[i]));
        scale = std::max(scale, std::abs(out.g[i]));
      }
      if (dev <= num.escalation_tol * std::max(scale, 1e-8)) {
        out.converged = true;
        return out;
      }
    }
    if (n + num.n_max_step > num.n_max_cap) {
      out.converged = prev.empty();
      return out;
    }
    prev = out.g;
    n += num.n_max_step;
  }
}

ConductancePoint conductance_point(const SystemModel& model,
                                   const NumericsConfig& num) {
  const auto basis = build_basis(model, decompose_options(num));
  SystemModel two = model;
  two.scheme = MeasurementScheme::TwoPoint;
  SystemModel single = model;
  single.scheme = MeasurementScheme::Single;
  const double beta = model.baths[counted_bath_index(model)].beta();

  auto central = run_transient(two, basis, num, 2);
  auto single_run =
      run_transient_fixed(single, basis, num, central.n_max_used, 2);
  const auto kappa_fluct = conductance_from_fluctuations(
      central.cumulants, single_run.cumulants, beta);

  const auto family =
      build_beta_family(two, basis, num, central.n_max_used, 1, 1);
  const auto jt = j_coefficients(family, 1, 1);
  const auto kappa_bias = conductance_from_bias(jt, beta);

  ConductancePoint out;
  out.n_max_used = central.n_max_used;
  out.converged = central.converged;
  const auto pb = detect_plateau(jt.t, kappa_bias);
  const auto pf = detect_plateau(central.cumulants.t, kappa_fluct);
  out.kappa_bias = pb.level;
  out.plateau_bias = pb.reached;
  out.plateau_wobble_bias = pb.wobble;
  out.kappa_fluct = pf.level;
  out.plateau_fluct = pf.reached;
  out.plateau_wobble_fluct = pf.wobble;
  if (model.dim() == 2) {
    out.kappa_weak = weak_coupling_reference(model).kappa;
  }
  return out;
}

namespace {

// fixed-truncation propagation with explicit state restore/save
TransientResult run_transient_checkpointed(const RunConfig& cfg,
                                           const ExpansionBasis& basis,
                                           int m_max) {
  const auto& num = cfg.numerics;
  const auto space =
      IndexSpace::enumerate(terms_per_bath(basis), num.n_max, m_max);
  const auto tables = cascade_coefficients(cfg.model, basis, m_max);
  const Propagator prop(cfg.model, basis, tables, space,
                        PropagationMode::MomentCascade);
  std::vector<Complex> state;
  double t0 = 0.0;
  if (!cfg.checkpoint_in.empty()) {
    std::ifstream is(cfg.checkpoint_in, std::ios::binary);
    if (!is) throw config_error("cannot open checkpoint " + cfg.checkpoint_in);
    t0 = prop.load_checkpoint(is, state);
    if (t0 >= num.t_end - 1e-12) {
      throw validation_error("checkpoint is already at or past t_end");
    }
  } else {
    state = prop.initial_state();
  }
  const auto traj = prop.integrate(state, t0, integrator_options(num));
  if (!cfg.checkpoint_out.empty()) {
    std::ofstream os(cfg.checkpoint_out, std::ios::binary);
    if (!os) throw config_error("cannot write checkpoint " + cfg.checkpoint_out);
    prop.save_checkpoint(os, state, num.t_end);
  }
  TransientResult res;
  res.moments = moments_from_fields(traj, space);
  res.cumulants = cumulants_from_moment_series(res.moments);
  res.n_max_used = num.n_max;
  return res;
}

RunReport run_transient_mode(const RunConfig& cfg) {
  const auto basis = load_or_build_basis(cfg);
  maybe_dump_basis(cfg, basis);
  const int m_max = std::max(1, cfg.numerics.m_max);
  const bool checkpointed =
      !cfg.checkpoint_in.empty() || !cfg.checkpoint_out.empty();
  const auto res = checkpointed
                       ? run_transient_checkpointed(cfg, basis, m_max)
                       : run_transient(cfg.model, basis, cfg.numerics, m_max);

  std::vector<Column> cols;
  cols.push_back({"time", &res.cumulants.t});
  std::vector<std::vector<double>> dkappa(res.cumulants.order());
  for (int n = 0; n < res.moments.order(); ++n) {
    cols.push_back({"moment_" + std::to_string(n + 1), &res.moments.mu[n]});
  }
  for (int n = 0; n < res.cumulants.order(); ++n) {
    cols.push_back(
        {"cumulant_" + std::to_string(n + 1), &res.cumulants.kappa[n]});
  }
  for (int n = 0; n < res.cumulants.order(); ++n) {
    dkappa[n] = time_derivative(res.cumulants.t, res.cumulants.kappa[n]);
    cols.push_back({"dcumulant_dt_" + std::to_string(n + 1), &dkappa[n]});
  }
  const std::string csv = cfg.out_dir + "/transient.csv";
  const std::string sidecar = cfg.out_dir + "/transient.json";
  write_labeled_csv(csv, cols, "scheme", to_string(cfg.model.scheme));

  nlohmann::json j = base_sidecar(cfg);
  j["n_max_used"] = res.n_max_used;
  j["converged"] = res.converged;
  j["worst_rel_change"] = res.worst_rel_change;
  j["escalation_tol"] = cfg.numerics.escalation_tol;
  j["max_imag"] = res.moments.max_imag;
  j["max_trace_defect"] = res.moments.max_trace_defect;
  j["basis"] = basis_diagnostics(basis, cfg.model);
  j["artifacts"] = {csv};
  write_json_file(sidecar, j);

  RunReport report;
  report.artifacts = {csv, sidecar};
  report.converged = res.converged;
  report.summary = std::move(j);
  return report;
}

RunReport run_conductance_mode(const RunConfig& cfg) {
  std::vector<double> value, kb, kf, kw, pb, pf, wb, wf, nmax, conv;
  bool all_converged = true;
  for (double v : cfg.scan.values) {
    const auto model = with_parameter(cfg.model, cfg.scan.parameter, v);
    validate(model);
    const auto point = conductance_point(model, cfg.numerics);
    value.push_back(v);
    kb.push_back(point.kappa_bias);
    kf.push_back(point.kappa_fluct);
    kw.push_back(point.kappa_weak);
    pb.push_back(point.plateau_bias ? 1.0 : 0.0);
    pf.push_back(point.plateau_fluct ? 1.0 : 0.0);
    wb.push_back(point.plateau_wobble_bias);
    wf.push_back(point.plateau_wobble_fluct);
    nmax.push_back(point.n_max_used);
    conv.push_back(point.converged ? 1.0 : 0.0);
    all_converged = all_converged && point.converged;
  }
  const std::vector<Column> cols{{cfg.scan.parameter, &value},
                                 {"kappa_bias", &kb},
                                 {"kappa_fluct", &kf},
                                 {"kappa_weak", &kw},
                                 {"plateau_bias", &pb},
                                 {"plateau_fluct", &pf},
                                 {"plateau_wobble_bias", &wb},
                                 {"plateau_wobble_fluct", &wf},
                                 {"n_max_used", &nmax},
                                 {"converged", &conv}};
  const std::string csv = cfg.out_dir + "/conductance_scan.csv";
  const std::string sidecar = cfg.out_dir + "/conductance_scan.json";
  write_csv(csv, cols);

  nlohmann::json j = base_sidecar(cfg);
  j["parameter"] = cfg.scan.parameter;
  j["points"] = cfg.scan.values.size();
  j["converged"] = all_converged;
  j["artifacts"] = {csv};
  write_json_file(sidecar, j);

  RunReport report;
  report.artifacts = {csv, sidecar};
  report.converged = all_converged;
  report.summary = std::move(j);
  return report;
}

RunReport run_chi_mode(const RunConfig& cfg) {
  const auto basis = load_or_build_basis(cfg);
  maybe_dump_basis(cfg, basis);
  std::vector<double> chi_col, t_col, re_col, im_col;
  nlohmann::json points = nlohmann::json::array();
  bool all_converged = true;
  for (double chi : cfg.chi.values) {
    const auto res = run_chi_point(cfg.model, basis, cfg.numerics, chi);
    for (size_t i = 0; i < res.t.size(); ++i) {
      chi_col.push_back(chi);
      t_col.push_back(res.t[i]);
      re_col.push_back(res.g[i].real());
      im_col.push_back(res.g[i].imag());
    }
    points.push_back({{"chi", chi},
                      {"n_max_used", res.n_max_used},
                      {"converged", res.converged}});
    all_converged = all_converged && res.converged;
  }
  const std::vector<Column> cols{
      {"chi", &chi_col}, {"time", &t_col}, {"re_g", &re_col}, {"im_g", &im_col}};
  const std::string csv = cfg.out_dir + "/chi_scan.csv";
  const std::string sidecar = cfg.out_dir + "/chi_scan.json";
  write_labeled_csv(csv, cols, "scheme", to_string(cfg.model.scheme));

  nlohmann::json j = base_sidecar(cfg);
  j["points"] = points;
  j["converged"] = all_converged;
  j["basis"] = basis_diagnostics(basis, cfg.model);
  j["artifacts"] = {csv};
  write_json_file(sidecar, j);

  RunReport report;
  report.artifacts = {csv, sidecar};
  report.converged = all_converged;
  report.summary = std::move(j);
  return report;
}

RunReport run_oracle_mode(const RunConfig& cfg) {
  const auto basis = load_or_build_basis(cfg);
  maybe_dump_basis(cfg, basis);
  const FiniteModeSystem fm(cfg.model, cfg.oracle.fock_cutoff);
  std::vector<double> chi_col, t_col, re_h, im_h, re_e, im_e, err_col;
  nlohmann::json points = nlohmann::json::array();
  double max_err = 0.0;
  bool all_converged = true;
  std::vector<double> grid;
  for (double chi : cfg.oracle.chi_values) {
    const auto res = run_chi_point(cfg.model, basis, cfg.numerics, chi);
    if (grid.empty()) grid = res.t;
    const auto exact =
        fm.exact_cgf(cfg.model.scheme, Complex{chi, 0.0}, res.t);
    double point_err = 0.0;
    for (size_t i = 0; i < res.t.size(); ++i) {
      const double err = std::abs(res.g[i] - exact[i]);
      point_err = std::max(point_err, err);
      chi_col.push_back(chi);
      t_col.push_back(res.t[i]);
      re_h.push_back(res.g[i].real());
      im_h.push_back(res.g[i].imag());
      re_e.push_back(exact[i].real());
      im_e.push_back(exact[i].imag());
      err_col.push_back(err);
    }
    max_err = std::max(max_err, point_err);
    points.push_back({{"chi", chi},
                      {"n_max_used", res.n_max_used},
                      {"converged", res.converged},
                      {"max_abs_err", point_err}});
    all_converged = all_converged && res.converged;
  }
  const std::vector<Column> cols{
      {"chi", &chi_col},   {"time", &t_col}, {"re_g_heom", &re_h},
      {"im_g_heom", &im_h}, {"re_g_exact", &re_e}, {"im_g_exact", &im_e},
      {"abs_err", &err_col}};
  const std::string csv = cfg.out_dir + "/oracle_compare.csv";
  const std::string sidecar = cfg.out_dir + "/oracle_compare.json";
  write_labeled_csv(csv, cols, "scheme", to_string(cfg.model.scheme));

  nlohmann::json j = base_sidecar(cfg);
  j["points"] = points;
  j["max_abs_err"] = max_err;
  j["fock_cutoff"] = cfg.oracle.fock_cutoff;
  j["fock_top_level_weight"] = grid.empty() ? 0.0 : fm.top_level_weight(grid);
  j["converged"] = all_converged;
  j["artifacts"] = {csv};
  write_json_file(sidecar, j);

  RunReport report;
  report.artifacts = {csv, sidecar};
  report.converged = all_converged;
  report.summary = std::move(j);
  return report;
}

}  // namespace

RunReport run(const RunConfig& cfg) {
  validate_config(cfg);
  std::error_code ec;
  std::filesystem::create_directories(cfg.out_dir, ec);
  if (ec) {
    throw config_error("cannot create output directory " + cfg.out_dir);
  }
  switch (cfg.mode) {
    case RunMode::Transient:
      return run_transient_mode(cfg);
    case RunMode::ConductanceScan:
      return run_conductance_mode(cfg);
    case RunMode::ChiScan:
      return run_chi_mode(cfg);
    case RunMode::OracleCompare:
      return run_oracle_mode(cfg);
  }
  throw config_error("unknown run mode");
}

namespace {

struct CsvTable {
  std::vector<std::string> header;
  // cells kept as text; numeric parse attempted per cell during comparison
  std::vector<std::vector<std::string>> rows;
};

CsvTable read_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw config_error("cannot open " + path);
  CsvTable t;
  std::string line;
  auto split = [](const std::string& s) {
    std::vector<std::string> cells;
    std::string cur;
    for (char c : s) {
      if (c == ',') {
        cells.push_back(cur);
        cur.clear();
      } else if (c != '\r') {
        cur += c;
      }
    }
    cells.push_back(cur);
    return cells;
  };
  if (!std::getline(in, line)) throw config_error("empty csv: " + path);
  t.header = split(line);
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto cells = split(line);
    if (cells.size() != t.header.size()) {
      throw config_error("ragged csv row in " + path);
    }
    t.rows.push_back(std::move(cells));
  }
  return t;
}

bool parse_number(const std::string& s, double& out) {
  if (s.empty()) return false;
  char* end = nullptr;
  out = std::strtod(s.c_str(), &end);
  return end == s.c_str() + s.size();
}

}  // namespace

CompareVerdict compare_reports(const std::string& csv_a,
                               const std::string& csv_b, double rtol,
                               double atol) {
  const auto a = read_csv(csv_a);
  const auto b = read_csv(csv_b);
  if (a.header != b.header) {
    throw validation_error("compare: column layouts differ");
  }
  if (a.rows.size() != b.rows.size()) {
    throw validation_error("compare: row counts differ");
  }
  CompareVerdict verdict;
  for (size_t c = 0; c < a.header.size(); ++c) {
    CompareVerdict::Row row;
    row.column = a.header[c];
    for (size_t r = 0; r < a.rows.size(); ++r) {
      double va = 0.0, vb = 0.0;
      const bool na = parse_number(a.rows[r][c], va);
      const bool nb = parse_number(b.rows[r][c], vb);
      if (na != nb) {
        row.pass = false;
        continue;
      }
      if (!na) {
        if (a.rows[r][c] != b.rows[r][c]) row.pass = false;
        continue;
      }
      const double dev = std::abs(va - vb);
      const double scale = std::max(std::abs(va), std::abs(vb));
      row.max_abs_dev = std::max(row.max_abs_dev, dev);
      if (scale > 0.0) {
        row.max_rel_dev = std::max(row.max_rel_dev, dev / scale);
      }
      if (dev > atol + rtol * scale) row.pass = false;
    }
    verdict.pass = verdict.pass && row.pass;
    verdict.rows.push_back(std::move(row));
  }
  return verdict;
}

}  // namespace heomfcs
