#pragma once

// Quantum Hamiltonians of the collective system spin coupled to a collective
// environment spin, and their classical energy surfaces. Energies are in units
// of the transverse field h (h = 1); time is in units of 1/h.

#include "esqpt/spin.hpp"

#include <Eigen/Dense>

#include <cstddef>

namespace esqpt {

enum class Geometry {
  two_spin,     // system (x) environment, dimension (2S+1)^2
  system_only,  // the system spin alone, dimension 2S+1
};

struct ModelParams {
  SpinSize spin{1.0};
  double lambda = 10.0;  // Lambda / h
  double v = 0.0;        // V / h
  Geometry geometry = Geometry::two_spin;

  /// Spins per subsystem, N = 2S.
  double n_spins() const { return static_cast<double>(spin.twice()); }
  Index dim() const { return geometry == Geometry::two_spin ? spin.product_dim() : spin.dim(); }
  /// Throws std::invalid_argument for negative couplings.
  void validate() const;
};

/// Initial environment polarization. plus_x is the ground state of H_e
/// (<Sx_e> = +S); minus_x is the literal S^x_e|psi_e> = -S|psi_e> reading.
enum class EnvPolarization { plus_x, minus_x };

/// Refuses dense allocations above this many bytes (std::length_error).
/// Defaults to 3 GiB; adjustable for larger hosts.
std::size_t dense_memory_budget();
void set_dense_memory_budget(std::size_t bytes);

/// H = -Sx_s - Sx_e + (Lambda/N) (Sz_s)^2 + (V/2N) Sz_s Sz_e, or H_s alone for
/// Geometry::system_only. Dense, real symmetric.
RealOperator build_hamiltonian(const ModelParams& p);

/// H_s = -Sx + (Lambda/N) Sz^2 on one collective spin.
RealOperator build_system_hamiltonian(SpinSize s, double lambda);

/// The parity map matching the model geometry (both spins, or the single spin).
ParityMap model_parity(const ModelParams& p);

/// The Hamiltonian restricted to one parity sector, assembled directly from
/// its sparse structure without forming the full dense matrix.
RealOperator sector_hamiltonian(const ModelParams& p, Sector sector);

/// y = H x without storing H.
StateVector apply_hamiltonian(const ModelParams& p, const StateVector& x);
double energy_expectation(const ModelParams& p, const StateVector& x);

/// Classical limit of H_s / (hS): (lambda/2) z^2 - sqrt(1-z^2) cos(phi).
double classical_energy(double phi, double z, double lambda);

/// Non-negative z with classical_energy(phi, z, lambda) == energy, found by
/// bracketed root finding. Throws std::domain_error when no root is bracketed.
double energy_z(double phi, double energy, double lambda);

/// The separatrix branch z >= 0 through the unstable fixed point (pi, 0).
double separatrix_z(double phi, double lambda);

/// Phase-space point of both collective spins as unit vectors.
struct ClassicalState {
  Eigen::Vector3d m_s{1.0, 0.0, 0.0};
  Eigen::Vector3d m_e{1.0, 0.0, 0.0};

  struct Canonical {
    double phi_s = 0.0;
    double z_s = 0.0;
    double phi_e = 0.0;
    double z_e = 0.0;
  };

  static ClassicalState from_canonical(const Canonical& c);
  static ClassicalState from_canonical(double phi_s, double z_s, double phi_e, double z_e);
  Canonical canonical() const;
  void renormalize();
};

/// Classical H / (hS) for both spins:
/// (lambda/2) z_s^2 - sqrt(1-z_s^2) cos phi_s - sqrt(1-z_e^2) cos phi_e + (v/4) z_s z_e.
double total_classical_energy(const ClassicalState& x, const ModelParams& p);

}  // namespace esqpt
