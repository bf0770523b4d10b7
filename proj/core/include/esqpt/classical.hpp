#pragma once

// Classical limit of the two-spin model. Each collective spin is a unit
// vector m = S/S evolving as dm/dt = grad_m(h) x m, with
// h = (lambda/2) (m_s^z)^2 - m_s^x - m_e^x + (v/4) m_s^z m_e^z and time in 1/h.

#include "esqpt/model.hpp"

#include <array>
#include <cstddef>
#include <utility>
#include <vector>

namespace esqpt {

struct CanonicalRates {
  double phi_s = 0.0;
  double z_s = 0.0;
  double phi_e = 0.0;
  double z_e = 0.0;
};

/// Rates in (phi, z) coordinates. Throws std::domain_error within 1e-9 of a
/// pole, where the angle is singular.
CanonicalRates eom_canonical(const ClassicalState::Canonical& x, const ModelParams& p);

struct CartesianRates {
  Eigen::Vector3d m_s;
  Eigen::Vector3d m_e;
};

CartesianRates eom(const ClassicalState& x, const ModelParams& p);

struct IntegratorOptions {
  double rel_tol = 1e-10;
  double abs_tol = 1e-11;
  double sample_dt = 0.1;      // Trajectory sampling interval
  double initial_step = 1e-2;
  double min_step = 1e-12;     // below this the integration aborts
};

struct Trajectory {
  std::vector<double> t;
  std::vector<ClassicalState> states;
  std::vector<double> energy;  // total_classical_energy per sample

  double max_energy_drift() const;
  /// max over samples of | |m| - 1 | for either spin.
  double max_norm_error() const;
};

/// Adaptive Fehlberg 7(8) integration in Cartesian coordinates; both unit
/// vectors are renormalized after every accepted step. Throws
/// std::runtime_error on step-size underflow.
Trajectory integrate(const ClassicalState& x0, const ModelParams& p, double duration,
                     IntegratorOptions opts = {});

/// Step-level access used by the Lyapunov, Poincare and TWA drivers.
class FlowIntegrator {
public:
  using State = std::array<double, 6>;

  FlowIntegrator(const ModelParams& p, IntegratorOptions opts = {});

  /// Advances x from t to t_end exactly.
  void advance(State& x, double& t, double t_end);
  std::size_t steps() const { return steps_; }

  static State pack(const ClassicalState& x);
  static ClassicalState unpack(const State& x);

private:
  ModelParams p_;
  IntegratorOptions opts_;
  double dt_;
  std::size_t steps_ = 0;
};

struct LyapunovOptions {
  double duration = 1e4;          // total integration time
  double renorm_interval = 1.0;
  double transient = 1e2;         // discarded before accumulating
  int blocks = 50;                // for the standard error
  IntegratorOptions integrator{};
};

struct LyapunovResult {
  double rate = 0.0;     // 1/time
  double stderr_ = 0.0;  // standard error over accumulation blocks
  std::size_t renormalizations = 0;
};

/// Benettin estimate of the maximal exponent from the co-integrated tangent flow.
LyapunovResult lyapunov_max(const ClassicalState& x0, const ModelParams& p, LyapunovOptions opts = {});

struct PoincareOptions {
  double plane = -0.1;        // section z_e = plane, crossed with dz_e/dt > 0
  std::size_t crossings = 500;
  double t_max = 1e4;
  double event_tol = 1e-10;
  IntegratorOptions integrator{};
};

struct PoincareSection {
  std::vector<std::pair<double, double>> points;  // (phi_s, z_s)
  std::vector<double> times;
  bool complete = false;  // false when t_max ran out first
};

PoincareSection poincare_section(const ClassicalState& x0, const ModelParams& p,
                                 PoincareOptions opts = {});

/// Initial state used for the chaos maps: phi_s = 0, z_s on the energy
/// surface E(0, z_s) = energy, environment at (phi_e, z_e) = (0, 0).
ClassicalState chaos_map_start(double energy, double lambda);

}  // namespace esqpt
