#include "esqpt/classical.hpp"

#include <boost/numeric/odeint.hpp>

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace esqpt {

namespace odeint = boost::numeric::odeint;

namespace {

double coupling(const ModelParams& p) { return p.geometry == Geometry::two_spin ? p.v : 0.0; }

using Vec3 = Eigen::Vector3d;

inline Vec3 load(const double* x) { return Vec3(x[0], x[1], x[2]); }
inline void store(double* x, const Vec3& v) {
  x[0] = v.x();
  x[1] = v.y();
  x[2] = v.z();
}

// grad h cross m for both spins, packed as (m_s, m_e).
void flow(const double* x, double* dx, double lambda, double v) {
  const Vec3 ms = load(x);
  const Vec3 me = load(x + 3);
  const Vec3 gs(-1.0, 0.0, lambda * ms.z() + 0.25 * v * me.z());
  const Vec3 ge(-1.0, 0.0, 0.25 * v * ms.z());
  store(dx, gs.cross(ms));
  store(dx + 3, ge.cross(me));
}

// Linearized flow acting on the tangent vector (dm_s, dm_e).
void tangent_flow(const double* x, const double* dxt, double* out, double lambda, double v) {
  const Vec3 ms = load(x);
  const Vec3 me = load(x + 3);
  const Vec3 ds = load(dxt);
  const Vec3 de = load(dxt + 3);
  const Vec3 gs(-1.0, 0.0, lambda * ms.z() + 0.25 * v * me.z());
  const Vec3 ge(-1.0, 0.0, 0.25 * v * ms.z());
  const Vec3 dgs(0.0, 0.0, lambda * ds.z() + 0.25 * v * de.z());
  const Vec3 dge(0.0, 0.0, 0.25 * v * ds.z());
  store(out, dgs.cross(ms) + gs.cross(ds));
  store(out + 3, dge.cross(me) + ge.cross(de));
}

template <std::size_t N>
void renormalize_spins(std::array<double, N>& x) {
  for (std::size_t off : {std::size_t{0}, std::size_t{3}}) {
    const double n = std::sqrt(x[off] * x[off] + x[off + 1] * x[off + 1] + x[off + 2] * x[off + 2]);
    x[off] /= n;
    x[off + 1] /= n;
    x[off + 2] /= n;
  }
}

// Controlled integration from t to t_end with renormalization after each
// accepted step. on_step(x_before, t_before, x_after, t_after, dt) is
// invoked after renormalization.
template <std::size_t N, typename System, typename OnStep>
std::size_t advance_controlled(const System& sys, std::array<double, N>& x, double& t, double t_end,
                               double& dt, const IntegratorOptions& opts, OnStep&& on_step) {
  using State = std::array<double, N>;
  // Error scaled by the state only (a_dxdt = 0): the default also scales by
  // dt * |dx/dt|, which loosens control on fast high-energy orbits.
  using Base = odeint::runge_kutta_fehlberg78<State>;
  using Checker = odeint::default_error_checker<double, odeint::array_algebra, odeint::default_operations>;
  odeint::controlled_runge_kutta<Base> stepper(Checker(opts.abs_tol, opts.rel_tol, 1.0, 0.0));
  std::size_t steps = 0;
  while (t < t_end) {
    const double remaining = t_end - t;
    const bool last = dt >= remaining;
    double h = last ? remaining : dt;
    const State before = x;
    const double t_before = t;
    const double h_try = h;
    if (stepper.try_step(sys, x, t, h) == odeint::success) {
      if (last && h_try == remaining) t = t_end;  // land exactly
      renormalize_spins(x);
      ++steps;
      on_step(before, t_before, x, t, t - t_before);
      // try_step proposes the next step in h; keep the larger of the
      // proposal and the pre-truncation step so grid points don't shrink it.
      dt = last ? std::max(h, dt) : h;
    } else {
      dt = h;
      if (dt < opts.min_step) {
        throw std::runtime_error("integrate: step size underflow at t = " + std::to_string(t));
      }
    }
  }
  return steps;
}

struct FlowSystem {
  double lambda;
  double v;
  void operator()(const std::array<double, 6>& x, std::array<double, 6>& dx, double) const {
    flow(x.data(), dx.data(), lambda, v);
  }
};

struct TangentSystem {
  double lambda;
  double v;
  void operator()(const std::array<double, 12>& x, std::array<double, 12>& dx, double) const {
    flow(x.data(), dx.data(), lambda, v);
    tangent_flow(x.data(), x.data() + 6, dx.data() + 6, lambda, v);
  }
};

}  // namespace

CanonicalRates eom_canonical(const ClassicalState::Canonical& x, const ModelParams& p) {
  constexpr double kPole = 1.0 - 1e-9;
  if (std::abs(x.z_s) >= kPole || std::abs(x.z_e) >= kPole) {
    throw std::domain_error("eom_canonical: state too close to a pole; use the Cartesian form");
  }
  const double v = coupling(p);
  const double rs = std::sqrt(1.0 - x.z_s * x.z_s);
  const double re = std::sqrt(1.0 - x.z_e * x.z_e);
  CanonicalRates r;
  r.z_s = -rs * std::sin(x.phi_s);
  r.phi_s = x.z_s * std::cos(x.phi_s) / rs + p.lambda * x.z_s + 0.25 * v * x.z_e;
  r.z_e = -re * std::sin(x.phi_e);
  r.phi_e = x.z_e * std::cos(x.phi_e) / re + 0.25 * v * x.z_s;
  return r;
}

CartesianRates eom(const ClassicalState& x, const ModelParams& p) {
  const auto packed = FlowIntegrator::pack(x);
  std::array<double, 6> dx{};
  flow(packed.data(), dx.data(), p.lambda, coupling(p));
  return CartesianRates{load(dx.data()), load(dx.data() + 3)};
}

double Trajectory::max_energy_drift() const {
  double worst = 0.0;
  for (double e : energy) worst = std::max(worst, std::abs(e - energy.front()));
  return worst;
}

double Trajectory::max_norm_error() const {
  double worst = 0.0;
  for (const auto& s : states) {
    worst = std::max({worst, std::abs(s.m_s.norm() - 1.0), std::abs(s.m_e.norm() - 1.0)});
  }
  return worst;
}

FlowIntegrator::FlowIntegrator(const ModelParams& p, IntegratorOptions opts)
    : p_(p), opts_(opts), dt_(opts.initial_step) {}

FlowIntegrator::State FlowIntegrator::pack(const ClassicalState& x) {
  return {x.m_s.x(), x.m_s.y(), x.m_s.z(), x.m_e.x(), x.m_e.y(), x.m_e.z()};
}

ClassicalState FlowIntegrator::unpack(const State& x) {
  ClassicalState s;
  s.m_s = load(x.data());
  s.m_e = load(x.data() + 3);
  return s;
}

void FlowIntegrator::advance(State& x, double& t, double t_end) {
  steps_ += advance_controlled(FlowSystem{p_.lambda, coupling(p_)}, x, t, t_end, dt_, opts_,
                               [](auto&&...) {});
}

Trajectory integrate(const ClassicalState& x0, const ModelParams& p, double duration,
                     IntegratorOptions opts) {
  if (!(duration > 0.0)) throw std::invalid_argument("integrate: duration must be positive");
  if (!(opts.sample_dt > 0.0)) throw std::invalid_argument("integrate: sample_dt must be positive");
  FlowIntegrator flow_integrator(p, opts);
  auto x = FlowIntegrator::pack(x0);
  {
    ClassicalState s = x0;
    s.renormalize();
    x = FlowIntegrator::pack(s);
  }
  Trajectory traj;
  double t = 0.0;
  auto record = [&] {
    const ClassicalState s = FlowIntegrator::unpack(x);
    traj.t.push_back(t);
    traj.states.push_back(s);
    traj.energy.push_back(total_classical_energy(s, p));
  };
  record();
  const auto samples = static_cast<std::size_t>(std::ceil(duration / opts.sample_dt - 1e-9));
  for (std::size_t k = 1; k <= samples; ++k) {
    const double target = std::min(duration, static_cast<double>(k) * opts.sample_dt);
    flow_integrator.advance(x, t, target);
    record();
  }
  return traj;
}

LyapunovResult lyapunov_max(const ClassicalState& x0, const ModelParams& p, LyapunovOptions opts) {
  if (!(opts.renorm_interval > 0.0) || !(opts.duration > opts.transient + opts.renorm_interval)) {
    throw std::invalid_argument("lyapunov_max: need duration > transient + renorm_interval > 0");
  }
  const double v = coupling(p);
  const TangentSystem sys{p.lambda, v};
  std::array<double, 12> x{};
  {
    ClassicalState s = x0;
    s.renormalize();
    const auto base = FlowIntegrator::pack(s);
    std::copy(base.begin(), base.end(), x.begin());
  }
  // Tangent vectors are kept orthogonal to both spins; radial deviations are neutral.
  auto project_and_normalize = [&x]() {
    for (std::size_t off : {std::size_t{0}, std::size_t{3}}) {
      const Vec3 m = load(x.data() + off);
      Vec3 d = load(x.data() + 6 + off);
      d -= m.dot(d) * m;
      store(x.data() + 6 + off, d);
    }
    double n2 = 0.0;
    for (std::size_t k = 6; k < 12; ++k) n2 += x[k] * x[k];
    const double n = std::sqrt(n2);
    for (std::size_t k = 6; k < 12; ++k) x[k] /= n;
    return n;
  };
  const double seed_dir[6] = {0.31, -0.52, 0.77, 0.45, 0.28, -0.63};
  for (std::size_t k = 0; k < 6; ++k) x[6 + k] = seed_dir[k];
  project_and_normalize();

  double t = 0.0;
  double dt = opts.integrator.initial_step;
  auto noop = [](auto&&...) {};
  // Transient: align the tangent vector with the unstable direction.
  while (t < opts.transient) {
    const double target = std::min(opts.transient, t + opts.renorm_interval);
    advance_controlled(sys, x, t, target, dt, opts.integrator, noop);
    project_and_normalize();
  }

  const double span = opts.duration - opts.transient;
  const auto intervals = static_cast<std::size_t>(std::llround(span / opts.renorm_interval));
  const std::size_t nblocks = std::max<std::size_t>(1, std::min<std::size_t>(
                                                          static_cast<std::size_t>(opts.blocks), intervals));
  std::vector<double> block_log(nblocks, 0.0);
  std::vector<double> block_time(nblocks, 0.0);
  double total = 0.0;
  LyapunovResult out;
  for (std::size_t k = 0; k < intervals; ++k) {
    const double t_start = t;
    const double target = opts.transient + static_cast<double>(k + 1) * opts.renorm_interval;
    advance_controlled(sys, x, t, target, dt, opts.integrator, noop);
    const double growth = std::log(project_and_normalize());
    total += growth;
    const std::size_t b = std::min(nblocks - 1, k * nblocks / intervals);
    block_log[b] += growth;
    block_time[b] += t - t_start;
    ++out.renormalizations;
  }
  out.rate = total / (t - opts.transient);
  if (nblocks > 1) {
    double mean = 0.0;
    std::vector<double> rates(nblocks);
    for (std::size_t b = 0; b < nblocks; ++b) {
      rates[b] = block_log[b] / block_time[b];
      mean += rates[b];
    }
    mean /= static_cast<double>(nblocks);
    double var = 0.0;
    for (double r : rates) var += (r - mean) * (r - mean);
    var /= static_cast<double>(nblocks - 1);
    out.stderr_ = std::sqrt(var / static_cast<double>(nblocks));
  }
  return out;
}

PoincareSection poincare_section(const ClassicalState& x0, const ModelParams& p,
                                 PoincareOptions opts) {
  using State = std::array<double, 6>;
  const FlowSystem sys{p.lambda, coupling(p)};
  odeint::runge_kutta_fehlberg78<State> single;
  State x;
  {
    ClassicalState s = x0;
    s.renormalize();
    x = FlowIntegrator::pack(s);
  }
  const double c = opts.plane;
  PoincareSection out;
  double t = 0.0;
  double dt = opts.integrator.initial_step;

  auto on_step = [&](const State& before, double t0, const State& after, double, double h) {
    if (out.points.size() >= opts.crossings) return;
    const double g0 = before[5] - c;
    const double g1 = after[5] - c;
    if (!(g0 < 0.0 && g1 >= 0.0)) return;
    // Bisect on the sub-step length, re-integrating from the step start.
    double lo = 0.0;
    double hi = h;
    State probe = after;
    for (int it = 0; it < 200; ++it) {
      const double mid = 0.5 * (lo + hi);
      single.do_step(sys, before, t0, probe, mid);
      const double g = probe[5] - c;
      if (std::abs(g) < opts.event_tol || hi - lo < 1e-15) break;
      (g < 0.0 ? lo : hi) = mid;
    }
    const ClassicalState s = FlowIntegrator::unpack(probe);
    const auto can = s.canonical();
    out.points.emplace_back(can.phi_s, can.z_s);
    out.times.push_back(t0 + 0.5 * (lo + hi));
  };

  // Advance in unit chunks so the crossing budget is checked regularly.
  while (t < opts.t_max && out.points.size() < opts.crossings) {
    const double target = std::min(opts.t_max, t + 1.0);
    advance_controlled(sys, x, t, target, dt, opts.integrator, on_step);
  }
  out.complete = out.points.size() >= opts.crossings;
  return out;
}

ClassicalState chaos_map_start(double energy, double lambda) {
  return ClassicalState::from_canonical(0.0, energy_z(0.0, energy, lambda), 0.0, 0.0);
}

}  // namespace esqpt
