#pragma once

// Truncated Wigner sampling of the initial product coherent state and
// ensemble-averaged classical evolution.

#include "esqpt/classical.hpp"
#include "esqpt/model.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace esqpt {

struct TwaEnsemble {
  std::size_t n_samples = 0;
  std::uint64_t seed = 0;
  double phi0 = 0.0;
  std::vector<ClassicalState> members;
  std::vector<double> weights;  // uniform, 1/n
};

/// Seed for member `index` of an ensemble drawn with `seed`.
std::uint64_t member_seed(std::uint64_t seed, std::uint64_t index);

/// Gaussian tangent-plane sampling: transverse deviations of each unit vector
/// have standard deviation 1/sqrt(2S), then renormalize. The system points
/// at (phi0, separatrix_z(phi0)); the environment along +x (or -x). Only the
/// system is sampled in system-only geometry. Throws for n == 0.
TwaEnsemble twa_sample(double phi0, const ModelParams& p, std::size_t n, std::uint64_t seed,
                       EnvPolarization env = EnvPolarization::plus_x);

/// Single sample around direction (phi, z) for spin S.
Eigen::Vector3d sample_direction(double phi, double z, SpinSize s, std::uint64_t member_seed);

struct TwaOptions {
  std::vector<double> times;  // empty selects 0, 1, ..., 1000
  std::optional<std::pair<double, double>> window = std::pair{100.0, 1000.0};
  IntegratorOptions integrator{};
  unsigned threads = 1;
};

struct TwaResult {
  std::vector<double> times;
  std::vector<std::string> names;            // Sx_s, Sz_s, Sz_e, Sx_e
  std::vector<std::vector<double>> mean;     // [obs][t], spin units
  std::vector<std::vector<double>> spread;   // ensemble standard deviation
  std::vector<std::vector<double>> stderr_;  // spread / sqrt(n)
  // Window statistics, empty when no window was requested.
  std::vector<double> long_time;
  std::vector<double> long_time_stderr;  // over per-member window means
  std::vector<double> window_stderr_rms; // RMS of stderr_ over the window
  std::size_t window_points = 0;
  std::size_t n_samples = 0;
};

/// Integrates every member and averages S*m components per time. Reduction
/// is in fixed member order, so results do not depend on `threads`.
TwaResult twa_expectation(const TwaEnsemble& ens, const ModelParams& p, const TwaOptions& opts = {});

}  // namespace esqpt
