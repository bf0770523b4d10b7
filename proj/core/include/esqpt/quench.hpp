#pragma once

#include "esqpt/model.hpp"
#include "esqpt/spectral.hpp"
#include "esqpt/spin.hpp"

#include <map>
#include <span>
#include <string>
#include <vector>

namespace esqpt {

struct QuenchSpec {
  ModelParams params;
  double phi0 = 0.0;  // initial system phase in [0, pi]
  std::vector<std::string> observables{"Sx_s", "Sz_s", "Sz_e", "Sx_e"};
  EnvPolarization env = EnvPolarization::plus_x;
};

/// |phi0, z0> (x) |psi_e> with z0 = separatrix_z(phi0). In system-only
/// geometry the environment factor is dropped.
StateVector initial_product_state(const ModelParams& p, double phi0,
                                  EnvPolarization env = EnvPolarization::plus_x);
StateVector initial_product_state(const QuenchSpec& spec);

/// Amplitudes c_n = <n|psi> in the eigenbasis of a full-spectrum SpectralData.
struct OverlapVector {
  Eigen::VectorXcd c;
  double total_weight() const { return c.squaredNorm(); }
};

OverlapVector overlaps(const StateVector& psi, const SpectralData& sd);

/// Default grouping tolerance 1e-10 * max(1, S), in units of h.
double default_degeneracy_tol(SpinSize s);

/// Runs of ascending levels whose adjacent gaps are below tol (transitively).
/// Block b covers levels [start[b], start[b+1]).
struct EnergyBlocks {
  std::vector<Index> start;

  Index count() const { return static_cast<Index>(start.size()) - 1; }
  Index begin(Index b) const { return start[static_cast<std::size_t>(b)]; }
  Index end(Index b) const { return start[static_cast<std::size_t>(b) + 1]; }
  Index multi_count() const;
  Index largest() const;
};

EnergyBlocks group_levels(const Eigen::VectorXd& energies, double tol);

/// Infinite-time average sum_b <P_b psi|O|P_b psi> over near-degenerate
/// blocks P_b. Reusable across initial states; prepare() caches the
/// eigenstate diagonals <n|O|n> used for singleton blocks.
class DiagonalEnsemble {
public:
  DiagonalEnsemble(const SpectralData& sd, double degeneracy_tol);

  void prepare(const LocalObservable& o);
  double average(const OverlapVector& c, const LocalObservable& o) const;
  double average(const OverlapVector& c, const Operator& o) const;

  const EnergyBlocks& blocks() const { return blocks_; }
  const SpectralData& spectrum() const { return *sd_; }

private:
  Eigen::VectorXcd block_state(const OverlapVector& c, Index b) const;

  const SpectralData* sd_;
  EnergyBlocks blocks_;
  std::map<std::string, Eigen::VectorXd> diagonals_;
};

double diagonal_ensemble_average(const OverlapVector& c, const SpectralData& sd,
                                 const LocalObservable& o, double degeneracy_tol);
double diagonal_ensemble_average(const OverlapVector& c, const SpectralData& sd, const Operator& o,
                                 double degeneracy_tol);

/// |psi(t)> = sum_n c_n exp(-i e_n t) |n> in the product basis.
StateVector evolve_state(const OverlapVector& c, const SpectralData& sd, double t);

struct EvolutionSeries {
  std::vector<double> times;
  std::vector<std::string> names;
  std::vector<std::vector<double>> values;  // [observable][time]
  std::vector<double> norm;
  std::vector<double> energy;  // <H>(t); filled when the spectrum carries model params
};

/// <psi(t)|O|psi(t)> on a time grid, via rotation in the eigenbasis.
EvolutionSeries evolve_expectation(const StateVector& psi, const SpectralData& sd,
                                   std::span<const LocalObservable> observables,
                                   std::span<const double> times);

/// Uniform grid 0, t_max/(n-1), ..., t_max.
std::vector<double> time_grid(double t_max, double dt);

struct QuenchResult {
  double phi0 = 0.0;
  double energy = 0.0;  // <H> of the initial state, units of h
  std::vector<std::string> names;
  std::vector<double> averages;  // long-time averages, same order as names
  double total_weight = 0.0;
  Index blocks = 0;
  Index multi_blocks = 0;
};

/// Prepare, project and average for one initial phase.
QuenchResult run_quench(const DiagonalEnsemble& de, const QuenchSpec& spec);

struct MemoryPoint {
  double phi0;
  double value;   // long-time average, spin units
  double energy;  // <H> of the initial state, units of h
};

struct MemoryCurve {
  ModelParams params;
  std::string observable;
  std::vector<MemoryPoint> points;
};

/// n equally spaced phases covering [0, pi] inclusive (default 9).
std::vector<double> default_phi_grid(int n = 9);

struct MemoryOptions {
  EnvPolarization env = EnvPolarization::plus_x;
  double degeneracy_tol = -1.0;  // < 0 selects default_degeneracy_tol
};

/// One curve per observable name, all from a single full-spectrum solve.
std::vector<MemoryCurve> memory_curves(const SpectralData& sd, std::span<const double> phi_grid,
                                       std::span<const std::string> observables,
                                       MemoryOptions opts = {});
MemoryCurve memory_curve(const SpectralData& sd, std::span<const double> phi_grid,
                         const std::string& observable, MemoryOptions opts = {});

/// (max_phi O - min_phi O) / S. Throws std::invalid_argument on an empty curve.
double memory_quantifier(const MemoryCurve& curve);

}  // namespace esqpt
