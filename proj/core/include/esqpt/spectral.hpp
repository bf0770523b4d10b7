#pragma once

#include "esqpt/model.hpp"
#include "esqpt/spin.hpp"

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace esqpt {

/// Eigenvalues (ascending, units of h) and eigenvectors of a Hamiltonian,
/// optionally restricted to a parity sector.
struct SpectralData {
  std::optional<ModelParams> params;
  Sector sector = Sector::full;
  Eigen::VectorXd energies;
  /// Eigenvectors as columns in sector-basis coordinates; empty when only
  /// eigenvalues were requested.
  RealOperator vectors;
  /// Map from sector coordinates back to the product Dicke basis.
  SectorBasis basis;

  Index size() const { return energies.size(); }
  Index product_dim() const { return basis.product_dim(); }
  bool has_vectors() const { return vectors.size() > 0; }

  /// Eigenvector n in the product Dicke basis.
  Eigen::VectorXd product_vector(Index n) const;
  RealOperator product_vectors() const;
};

struct SolveOptions {
  bool vectors = true;
};

/// Dense symmetric eigendecomposition. For a sector other than full, h is
/// first congruence-transformed into the parity-adapted basis of `parity`.
/// Throws std::invalid_argument if h is not symmetric (relative Frobenius
/// residual above 1e-12) or does not commute with the parity map.
SpectralData eigensolve(const RealOperator& h, Sector sector, const ParityMap& parity,
                        SolveOptions opts = {});
/// Same, with the index-reversal parity (the two-spin and single-spin Z2 map).
SpectralData eigensolve(const RealOperator& h, Sector sector = Sector::full, SolveOptions opts = {});

/// Solves the model Hamiltonian. Sector blocks are assembled directly; a full
/// solve diagonalizes the even and odd blocks and merges them.
SpectralData solve_model(const ModelParams& p, Sector sector, SolveOptions opts = {});

/// Combines the two parity sectors of one Hamiltonian into a full-spectrum
/// SpectralData with product-basis eigenvectors.
SpectralData merge_sectors(const SpectralData& even, const SpectralData& odd);

/// ||H V - V diag(e)||_F / ||H||_F with V in the product basis.
double eigen_residual(const RealOperator& h, const SpectralData& sd);
/// ||V^T V - 1||_max in sector coordinates.
double orthonormality_error(const SpectralData& sd);

/// Number of dense eigensolves performed by this process.
std::uint64_t eigensolve_count();

struct EnergyWindow {
  double lo;
  double hi;
};

struct LevelStats {
  std::vector<double> ratios;
  double mean = 0.0;
  Index levels = 0;
  /// Ratios forced to 0 because a spacing vanished exactly.
  Index zero_spacings = 0;
};

/// r_n = min(s_n, s_{n-1}) / max(s_n, s_{n-1}) over ascending levels. An
/// optional window keeps only levels with lo <= e <= hi. Throws
/// std::invalid_argument for fewer than 3 levels.
LevelStats level_spacing_ratios(std::span<const double> energies,
                                std::optional<EnergyWindow> window = std::nullopt);

inline constexpr double kDefaultDegeneracyTolerance = 1e-7;

/// Lower member of every adjacent pair closer than tol.
std::vector<double> degeneracy_scan(std::span<const double> energies,
                                    double tol = kDefaultDegeneracyTolerance);

struct EigenstateCurve {
  std::vector<double> energy;
  std::vector<double> value;

  /// Rescaled copy: energy / (h S), value / S.
  EigenstateCurve normalized(double s) const;
};

/// Pairs (e_n, <n|O|n>) for every eigenstate.
EigenstateCurve eigenstate_expectation(const SpectralData& sd, const LocalObservable& o);
EigenstateCurve eigenstate_expectation(const SpectralData& sd, const Operator& o);

}  // namespace esqpt
