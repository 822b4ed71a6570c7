#include "heomfcs/propagator.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <istream>
#include <ostream>
#include <thread>

namespace heomfcs {

namespace {

bool is_sigma_z_like(const ComplexMatrix& v) {
  if (v.rows() != 2 || v.cols() != 2) return false;
  return std::abs(v(0, 0) - Complex{1.0, 0.0}) == 0.0 &&
         std::abs(v(1, 1) + Complex{1.0, 0.0}) == 0.0 &&
         std::abs(v(0, 1)) == 0.0 && std::abs(v(1, 0)) == 0.0;
}

}  // namespace

Propagator::Propagator(const SystemModel& model, const ExpansionBasis& basis,
                       const CoeffTables& tables, const IndexSpace& space,
                       PropagationMode mode)
    : space_(space), mode_(mode), d_(model.dim()) {
  if (mode_ == PropagationMode::ChiResolved && space_.sector_count() != 1) {
    throw validation_error(
        "field-resolved propagation runs in the plain sector space");
  }
  if (mode_ == PropagationMode::MomentCascade &&
      tables.q_max < space_.derivative_order()) {
    throw validation_error(
        "coefficient tables carry fewer derivative stacks than the sector "
        "space needs");
  }
  const int slots = space_.slots();
  if (slots != basis.total_slots()) {
    throw validation_error("index space and basis disagree on slot count");
  }
  q_max_ = space_.derivative_order();
  h_sys_ = model.h_sys;
  rho0_ = model.rho0;

  slot_g_.resize(slots);
  slot_side_.resize(slots);
  slot_bath_.resize(slots);
  couplings_.resize(slots);
  alpha_.assign(static_cast<size_t>(q_max_ + 1) * slots, Complex{});
  beta_.assign(static_cast<size_t>(q_max_ + 1) * slots, Complex{});
  sum_.assign(alpha_.size(), Complex{});
  diff_.assign(alpha_.size(), Complex{});
  for (size_t nu = 0; nu < basis.baths.size(); ++nu) {
    const auto& bb = basis.baths[nu];
    for (int r = 0; r < bb.terms(); ++r) {
      for (int k = 0; k < 2; ++k) {
        const int s = basis.slot(static_cast<int>(nu), r, k);
        slot_g_[s] = bb.exponents[r];
        slot_side_[s] = k;
        slot_bath_[s] = static_cast<int>(nu);
        couplings_[s] = model.couplings[nu];
        const auto& cell = tables.slots[nu][r][k];
        const int q_have = static_cast<int>(cell.alpha.size()) - 1;
        for (int q = 0; q <= q_max_; ++q) {
          const Complex a = q <= q_have ? cell.alpha[q] : Complex{};
          const Complex b = q <= q_have ? cell.beta[q] : Complex{};
          alpha_[static_cast<size_t>(q) * slots + s] = a;
          beta_[static_cast<size_t>(q) * slots + s] = b;
          sum_[static_cast<size_t>(q) * slots + s] = a + b;
          diff_[static_cast<size_t>(q) * slots + s] = a - b;
        }
      }
    }
  }

  fast_two_level_ = d_ == 2;
  for (const auto& v : model.couplings) {
    fast_two_level_ = fast_two_level_ && is_sigma_z_like(v);
  }

  damp_.resize(space_.n_count());
  for (int i = 0; i < space_.n_count(); ++i) {
    const uint8_t* occ = space_.occupations(i);
    Complex acc{0.0, 0.0};
    for (int s = 0; s < slots; ++s) {
      acc += static_cast<double>(occ[s]) * slot_g_[s];
    }
    damp_[i] = acc;
  }

  cascade_q_.resize(space_.sector_count());
  cascade_mq_.resize(space_.sector_count());
  cascade_sec_.resize(space_.sector_count());
  for (int sec = 0; sec < space_.sector_count(); ++sec) {
    const auto& part = space_.partition(sec);
    for (int q = 1; q <= q_max_; ++q) {
      const int mq = part[q - 1];
      if (mq == 0) continue;
      cascade_q_[sec].push_back(q);
      cascade_mq_[sec].push_back(mq);
      cascade_sec_[sec].push_back(space_.lower_m(sec, q));
    }
  }
}

size_t Propagator::state_size() const {
  return static_cast<size_t>(space_.total()) * d_ * d_;
}

std::vector<Complex> Propagator::initial_state() const {
  std::vector<Complex> state(state_size(), Complex{0.0, 0.0});
  for (int r = 0; r < d_; ++r) {
    for (int c = 0; c < d_; ++c) {
      state[static_cast<size_t>(r) * d_ + c] = rho0_(r, c);
    }
  }
  return state;
}

Complex Propagator::top_trace(const std::vector<Complex>& state,
                              int sector) const {
  const size_t base =
      static_cast<size_t>(sector) * space_.n_count() * d_ * d_;
  Complex tr{0.0, 0.0};
  for (int r = 0; r < d_; ++r) tr += state[base + static_cast<size_t>(r) * d_ + r];
  return tr;
}

void Propagator::rhs_range(const Complex* state, Complex* out, int field_begin,
                           int field_end) const {
  const int slots = space_.slots();
  const int ncount = space_.n_count();
  const size_t dd = static_cast<size_t>(d_) * d_;

  if (fast_two_level_) {
    const Complex h0 = h_sys_(0, 0), h1 = h_sys_(0, 1), h2 = h_sys_(1, 0),
                  h3 = h_sys_(1, 1);
    const Complex e = h0 - h3;
    for (int f = field_begin; f < field_end; ++f) {
      const int sec = f / ncount;
      const int i = f - sec * ncount;
      const Complex* x = state + static_cast<size_t>(f) * 4;
      Complex y0, y1, y2, y3;
      {
        const Complex dmp = damp_[i];
        y0 = -im_unit * (h1 * x[2] - h2 * x[1]) + dmp * x[0];
        y1 = -im_unit * (e * x[1] + h1 * (x[3] - x[0])) + dmp * x[1];
        y2 = -im_unit * (h2 * (x[0] - x[3]) - e * x[2]) + dmp * x[2];
        y3 = -im_unit * (h2 * x[1] - h1 * x[2]) + dmp * x[3];
      }
      const uint8_t* occ = space_.occupations(i);
      for (int s = 0; s < slots; ++s) {
        const int j = space_.raise_n(i, s);
        if (j >= 0) {
          const Complex* xp =
              state + (static_cast<size_t>(sec) * ncount + j) * 4;
          const Complex sv = sum_[s], dv = diff_[s];
          y0 -= sv * xp[0];
          y1 -= dv * xp[1];
          y2 += dv * xp[2];
          y3 += sv * xp[3];
        }
        const int ns = occ[s];
        if (ns > 0) {
          const Complex* xl =
              state +
              (static_cast<size_t>(sec) * ncount + space_.lower_n(i, s)) * 4;
          const double w = static_cast<double>(ns);
          if (slot_side_[s] == 0) {
            y0 += w * xl[0];
            y1 += w * xl[1];
            y2 -= w * xl[2];
            y3 -= w * xl[3];
          } else {
            y0 += w * xl[0];
            y1 -= w * xl[1];
            y2 += w * xl[2];
            y3 -= w * xl[3];
          }
        }
      }
      const auto& cq = cascade_q_[sec];
      for (size_t c = 0; c < cq.size(); ++c) {
        const double mq = cascade_mq_[sec][c];
        const size_t qoff = static_cast<size_t>(cq[c]) * slots;
        const size_t sec_base =
            static_cast<size_t>(cascade_sec_[sec][c]) * ncount;
        for (int s = 0; s < slots; ++s) {
          const int j = space_.raise_n(i, s);
          if (j < 0) continue;
          const Complex sv = sum_[qoff + s];
          const Complex dv = diff_[qoff + s];
          if (sv == Complex{0.0, 0.0} && dv == Complex{0.0, 0.0}) continue;
          const Complex* xp = state + (sec_base + j) * 4;
          y0 -= mq * (sv * xp[0]);
          y1 -= mq * (dv * xp[1]);
          y2 += mq * (dv * xp[2]);
          y3 += mq * (sv * xp[3]);
        }
      }
      Complex* y = out + static_cast<size_t>(f) * 4;
      y[0] = y0;
      y[1] = y1;
      y[2] = y2;
      y[3] = y3;
    }
    return;
  }

  // generic dimension path
  std::vector<Complex> buf(dd);
  for (int f = field_begin; f < field_end; ++f) {
    const int sec = f / ncount;
    const int i = f - sec * ncount;
    const Complex* x = state + static_cast<size_t>(f) * dd;
    Complex* y = out + static_cast<size_t>(f) * dd;
    const Complex dmp = damp_[i];
    for (int r = 0; r < d_; ++r) {
      for (int c = 0; c < d_; ++c) {
        Complex acc{0.0, 0.0};
        for (int k = 0; k < d_; ++k) {
          acc += h_sys_(r, k) * x[static_cast<size_t>(k) * d_ + c] -
                 x[static_cast<size_t>(r) * d_ + k] * h_sys_(k, c);
        }
        y[static_cast<size_t>(r) * d_ + c] =
            -im_unit * acc + dmp * x[static_cast<size_t>(r) * d_ + c];
      }
    }
    const uint8_t* occ = space_.occupations(i);
    auto add_edges = [&](int sector_from, size_t qoff, double weight) {
      for (int s = 0; s < slots; ++s) {
        const int j = space_.raise_n(i, s);
        if (j < 0) continue;
        const Complex a = alpha_[qoff + s] * weight;
        const Complex b = beta_[qoff + s] * weight;
        if (a == Complex{0.0, 0.0} && b == Complex{0.0, 0.0}) continue;
        const Complex* xp =
            state + (static_cast<size_t>(sector_from) * ncount + j) * dd;
        const auto& v = couplings_[s];
        for (int r = 0; r < d_; ++r) {
          for (int c = 0; c < d_; ++c) {
            Complex acc{0.0, 0.0};
            for (int k = 0; k < d_; ++k) {
              acc += a * v(r, k) * xp[static_cast<size_t>(k) * d_ + c] +
                     b * xp[static_cast<size_t>(r) * d_ + k] * v(k, c);
            }
            y[static_cast<size_t>(r) * d_ + c] -= acc;
          }
        }
      }
    };
    add_edges(sec, 0, 1.0);
    const auto& cq = cascade_q_[sec];
    for (size_t c = 0; c < cq.size(); ++c) {
      add_edges(cascade_sec_[sec][c],
                static_cast<size_t>(cq[c]) * slots,
                static_cast<double>(cascade_mq_[sec][c]));
    }
    for (int s = 0; s < slots; ++s) {
      const int ns = occ[s];
      if (ns == 0) continue;
      const Complex* xl =
          state +
          (static_cast<size_t>(sec) * ncount + space_.lower_n(i, s)) * dd;
      const auto& v = couplings_[s];
      const double w = static_cast<double>(ns);
      for (int r = 0; r < d_; ++r) {
        for (int c = 0; c < d_; ++c) {
          Complex acc{0.0, 0.0};
          if (slot_side_[s] == 0) {
            for (int k = 0; k < d_; ++k) {
              acc += v(r, k) * xl[static_cast<size_t>(k) * d_ + c];
            }
          } else {
            for (int k = 0; k < d_; ++k) {
              acc += xl[static_cast<size_t>(r) * d_ + k] * v(k, c);
            }
          }
          y[static_cast<size_t>(r) * d_ + c] += w * acc;
        }
      }
    }
  }
}

void Propagator::rhs(const std::vector<Complex>& state,
                     std::vector<Complex>& out, int workers) const {
  const int fields = static_cast<int>(space_.total());
  out.resize(state.size());
  if (workers <= 1) {
    rhs_range(state.data(), out.data(), 0, fields);
    return;
  }
  std::vector<std::thread> pool;
  const int chunk = (fields + workers - 1) / workers;
  for (int w = 0; w < workers; ++w) {
    const int b = w * chunk;
    const int e = std::min(fields, b + chunk);
    if (b >= e) break;
    pool.emplace_back(
        [this, &state, &out, b, e] { rhs_range(state.data(), out.data(), b, e); });
  }
  for (auto& th : pool) th.join();
}

void Propagator::collect(const std::vector<Complex>& state, double t,
                         Trajectory& traj) const {
  Snapshot snap;
  snap.t = t;
  snap.top.reserve(space_.sector_count());
  const size_t dd = static_cast<size_t>(d_) * d_;
  for (int sec = 0; sec < space_.sector_count(); ++sec) {
    ComplexMatrix m(d_, d_);
    const size_t base = static_cast<size_t>(sec) * space_.n_count() * dd;
    for (int r = 0; r < d_; ++r) {
      for (int c = 0; c < d_; ++c) {
        m(r, c) = state[base + static_cast<size_t>(r) * d_ + c];
      }
    }
    snap.top.push_back(std::move(m));
  }
  if (mode_ == PropagationMode::ChiResolved) {
    const Complex tr = snap.top[0].trace();
    if (std::abs(tr) < 1e-300) {
      throw numerical_error("generating function trace vanished at t=" +
                            std::to_string(t));
    }
    Complex lg = std::log(tr);
    if (!traj.cgf.empty()) {
      const double prev = traj.cgf.back().imag();
      const double k = std::round((prev - lg.imag()) / (2.0 * M_PI));
      lg += Complex{0.0, 2.0 * M_PI * k};
    }
    traj.cgf.push_back(lg);
  }
  traj.snapshots.push_back(std::move(snap));
}

namespace {

bool all_finite(const std::vector<Complex>& v) {
  for (const Complex& z : v) {
    if (!std::isfinite(z.real()) || !std::isfinite(z.imag())) return false;
  }
  return true;
}

double max_abs_diff(const std::vector<Complex>& a,
                    const std::vector<Complex>& b) {
  double m = 0.0;
  for (size_t i = 0; i < a.size(); ++i) {
    m = std::max(m, std::abs(a[i] - b[i]));
  }
  return m;
}

}  // namespace

Trajectory Propagator::integrate(std::vector<Complex>& state, double t_start,
                                 const IntegratorOptions& opts) const {
  if (state.size() != state_size()) {
    throw validation_error("state size does not match the index space");
  }
  if (!(opts.dt > 0.0)) throw validation_error("dt must be > 0");
  if (!(opts.t_end > t_start)) {
    throw validation_error("t_end must exceed the start time");
  }
  const long long steps =
      std::max<long long>(1, std::llround((opts.t_end - t_start) / opts.dt));
  const double h = (opts.t_end - t_start) / static_cast<double>(steps);
  const int stride = std::max(1, opts.output_stride);
  const int workers = std::max(1, opts.workers);

  Trajectory traj;
  collect(state, t_start, traj);

  std::vector<Complex> k(state.size()), tmp(state.size()), acc(state.size());
  auto rk4_step = [&](std::vector<Complex>& y, double hh) {
    rhs(y, k, workers);
    traj.rhs_evaluations++;
    for (size_t idx = 0; idx < y.size(); ++idx) {
      acc[idx] = y[idx] + hh / 6.0 * k[idx];
      tmp[idx] = y[idx] + 0.5 * hh * k[idx];
    }
    rhs(tmp, k, workers);
    traj.rhs_evaluations++;
    for (size_t idx = 0; idx < y.size(); ++idx) {
      acc[idx] += hh / 3.0 * k[idx];
      tmp[idx] = y[idx] + 0.5 * hh * k[idx];
    }
    rhs(tmp, k, workers);
    traj.rhs_evaluations++;
    for (size_t idx = 0; idx < y.size(); ++idx) {
      acc[idx] += hh / 3.0 * k[idx];
      tmp[idx] = y[idx] + hh * k[idx];
    }
    rhs(tmp, k, workers);
    traj.rhs_evaluations++;
    for (size_t idx = 0; idx < y.size(); ++idx) {
      acc[idx] += hh / 6.0 * k[idx];
    }
    y.swap(acc);
  };

  if (!opts.adaptive) {
    for (long long step = 1; step <= steps; ++step) {
      rk4_step(state, h);
      traj.steps_taken++;
      if (step % 32 == 0 || step == steps) {
        if (!all_finite(state)) {
          throw numerical_error("non-finite state at t=" +
                                std::to_string(t_start + step * h));
        }
      }
      if (step % stride == 0 || step == steps) {
        collect(state, t_start + static_cast<double>(step) * h, traj);
      }
    }
    return traj;
  }

  // Step-halving control: advance output-interval by output-interval so the
  // reporting grid stays identical to the fixed-step path.
  std::vector<Complex> one(state.size()), two(state.size());
  const double out_dt = h * stride;
  const long long out_points = (steps + stride - 1) / stride;
  double t = t_start;
  for (long long op = 1; op <= out_points; ++op) {
    const double t_target = t_start + std::min<double>(
        static_cast<double>(op) * out_dt, opts.t_end - t_start);
    double hh = std::min(h, t_target - t);
    while (t < t_target - 1e-12 * std::max(1.0, std::abs(t_target))) {
      hh = std::min(hh, t_target - t);
      one = state;
      rk4_step(one, hh);
      two = state;
      rk4_step(two, 0.5 * hh);
      rk4_step(two, 0.5 * hh);
      const double err = max_abs_diff(one, two);
      double scale = 0.0;
      for (const Complex& z : two) scale = std::max(scale, std::abs(z));
      if (err <= opts.adaptive_tol * (1.0 + scale)) {
        state.swap(two);
        t += hh;
        traj.steps_taken += 2;
        if (err < 0.03 * opts.adaptive_tol * (1.0 + scale)) {
          hh = std::min(2.0 * hh, out_dt);
        }
      } else {
        hh *= 0.5;
        if (hh < 1e-12) {
          throw numerical_error("adaptive step collapsed at t=" +
                                std::to_string(t));
        }
      }
      if (!all_finite(state)) {
        throw numerical_error("non-finite state at t=" + std::to_string(t));
      }
    }
    collect(state, t_target, traj);
  }
  return traj;
}

void Propagator::save_checkpoint(std::ostream& os,
                                 const std::vector<Complex>& state,
                                 double t) const {
  if (state.size() != state_size()) {
    throw validation_error("checkpoint state size mismatch");
  }
  const char magic[4] = {'H', 'F', 'C', '1'};
  os.write(magic, 4);
  const uint64_t hash = space_.structure_hash();
  const uint32_t d = static_cast<uint32_t>(d_);
  const uint32_t sectors = static_cast<uint32_t>(space_.sector_count());
  const uint32_t ncount = static_cast<uint32_t>(space_.n_count());
  const uint32_t mode = mode_ == PropagationMode::MomentCascade ? 0u : 1u;
  os.write(reinterpret_cast<const char*>(&hash), sizeof hash);
  os.write(reinterpret_cast<const char*>(&d), sizeof d);
  os.write(reinterpret_cast<const char*>(&sectors), sizeof sectors);
  os.write(reinterpret_cast<const char*>(&ncount), sizeof ncount);
  os.write(reinterpret_cast<const char*>(&mode), sizeof mode);
  os.write(reinterpret_cast<const char*>(&t), sizeof t);
  os.write(reinterpret_cast<const char*>(state.data()),
           static_cast<std::streamsize>(state.size() * sizeof(Complex)));
  if (!os) throw numerical_error("checkpoint write failed");
}

double Propagator::load_checkpoint(std::istream& is,
                                   std::vector<Complex>& state) const {
  char magic[4] = {};
  is.read(magic, 4);
  if (!is || std::memcmp(magic, "HFC1", 4) != 0) {
    throw config_error("checkpoint: bad magic");
  }
  uint64_t hash = 0;
  uint32_t d = 0, sectors = 0, ncount = 0, mode = 0;
  double t = 0.0;
  is.read(reinterpret_cast<char*>(&hash), sizeof hash);
  is.read(reinterpret_cast<char*>(&d), sizeof d);
  is.read(reinterpret_cast<char*>(&sectors), sizeof sectors);
  is.read(reinterpret_cast<char*>(&ncount), sizeof ncount);
  is.read(reinterpret_cast<char*>(&mode), sizeof mode);
  is.read(reinterpret_cast<char*>(&t), sizeof t);
  if (!is) throw config_error("checkpoint: truncated header");
  if (hash != space_.structure_hash()) {
    throw validation_error("checkpoint: index space fingerprint mismatch");
  }
  if (d != static_cast<uint32_t>(d_) ||
      sectors != static_cast<uint32_t>(space_.sector_count()) ||
      ncount != static_cast<uint32_t>(space_.n_count())) {
    throw validation_error("checkpoint: layout mismatch");
  }
  const uint32_t expect_mode =
      mode_ == PropagationMode::MomentCascade ? 0u : 1u;
  if (mode != expect_mode) {
    throw validation_error("checkpoint: propagation mode mismatch");
  }
  state.assign(state_size(), Complex{});
  is.read(reinterpret_cast<char*>(state.data()),
          static_cast<std::streamsize>(state.size() * sizeof(Complex)));
  if (!is) throw config_error("checkpoint: truncated payload");
  return t;
}

}  // namespace heomfcs
