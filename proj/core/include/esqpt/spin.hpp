#pragma once

// Collective-spin linear algebra in the Dicke basis |S,m>, m = -S..S ascending.
// Two-spin product states are ordered with the system spin as the outer index:
// product index = (m_s + S) * (2S+1) + (m_e + S).

#include <Eigen/Dense>

#include <complex>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace esqpt {

using Index = Eigen::Index;
using Complex = std::complex<double>;
using Operator = Eigen::MatrixXcd;
using RealOperator = Eigen::MatrixXd;
using StateVector = Eigen::VectorXcd;

/// Spin magnitude S, stored as the integer 2S so half-integers are exact.
class SpinSize {
public:
  /// Throws std::invalid_argument unless 2S is a positive integer.
  explicit SpinSize(double s);
  static SpinSize from_twice(int twice_s);

  double value() const { return 0.5 * twice_; }
  int twice() const { return twice_; }
  /// Single-spin Hilbert dimension 2S+1.
  Index dim() const { return twice_ + 1; }
  /// Two-spin product dimension (2S+1)^2.
  Index product_dim() const { return dim() * dim(); }
  bool is_integer() const { return twice_ % 2 == 0; }

  friend bool operator==(SpinSize a, SpinSize b) { return a.twice_ == b.twice_; }

private:
  struct Twice {};
  SpinSize(int twice_s, Twice);
  int twice_;
};

struct SpinMatrices {
  Operator x;
  Operator y;
  Operator z;
};

/// Matrix elements <m+1|S^+|m> = sqrt(S(S+1) - m(m+1)) for m = -S..S-1.
std::vector<double> raising_elements(SpinSize s);

/// Dense Sx, Sy, Sz in the Dicke basis.
SpinMatrices spin_matrices(SpinSize s);

enum class Slot { system, environment };

/// op (x) 1 for the system slot, 1 (x) op for the environment slot.
/// Throws std::invalid_argument if op is not (2S+1)x(2S+1).
Operator embed(const Operator& op, Slot slot, SpinSize s);
RealOperator embed(const RealOperator& op, Slot slot, SpinSize s);

/// Ground state of -n.S with n = (sqrt(1-z^2) cos phi, sqrt(1-z^2) sin phi, z).
/// The largest-magnitude amplitude is made real and positive.
/// Throws std::invalid_argument if |z| > 1.
StateVector coherent_state(double phi, double z, SpinSize s);

/// Kronecker product a (x) b in the system-outer ordering.
StateVector product_state(const StateVector& system, const StateVector& environment);

enum class Sector { full, even, odd };
std::string_view to_string(Sector sector);
Sector sector_from_string(std::string_view name);

/// Orthonormal basis of one parity sector. Each column is either a fixed
/// basis state |i> (even sector only) or (|i> +/- |P(i)>)/sqrt(2) with i < P(i).
class SectorBasis {
public:
  struct Column {
    Index first;
    Index second;  // == first for a fixed point
    double sign;   // +1 even, -1 odd
  };

  SectorBasis() = default;
  SectorBasis(Sector sector, Index product_dim, std::vector<Column> columns);

  Sector sector() const { return sector_; }
  Index dim() const { return sector_ == Sector::full ? product_dim_ : static_cast<Index>(columns_.size()); }
  Index product_dim() const { return product_dim_; }
  const std::vector<Column>& columns() const { return columns_; }

  /// B^T H B, where B holds the sector basis vectors as columns.
  RealOperator congruence(const RealOperator& h) const;

  Eigen::VectorXd to_product(const Eigen::Ref<const Eigen::VectorXd>& sector_coords) const;
  /// B^T x for a product-basis vector x.
  StateVector to_sector(const StateVector& product) const;
  /// Expands every column of a sector-coordinate matrix into the product basis.
  RealOperator expand(const RealOperator& sector_vectors) const;
  /// Orthogonal projector onto the sector, as a dense product-basis matrix.
  RealOperator projector() const;

private:
  Sector sector_ = Sector::full;
  Index product_dim_ = 0;
  std::vector<Column> columns_;
};

/// Z2 parity as a basis permutation. For both spins it sends
/// (m_s, m_e) -> (-m_s, -m_e), which is the index reversal i -> D-1-i.
class ParityMap {
public:
  enum class Slots { single, both };

  ParityMap(SpinSize s, Slots slots);
  /// Plain index reversal on an n-dimensional space.
  static ParityMap reversal(Index n);

  Index size() const { return static_cast<Index>(perm_.size()); }
  Index operator()(Index i) const { return perm_[static_cast<std::size_t>(i)]; }
  const std::vector<Index>& permutation() const { return perm_; }

  Index sector_dim(Sector sector) const;
  SectorBasis basis(Sector sector) const;
  /// Dense permutation matrix U with U|i> = |P(i)>.
  RealOperator matrix() const;

  /// max_ij |H_ij - H_{P(i)P(j)}|, i.e. the largest entry of H - U H U^T.
  double commutator_residual(const RealOperator& h) const;

private:
  explicit ParityMap(std::vector<Index> perm);
  std::vector<Index> perm_;
};

enum class SpinComponent { x, y, z };

/// A single collective-spin component acting on one subsystem, applied through
/// its tridiagonal Dicke-basis structure rather than a dense matrix.
class LocalObservable {
public:
  /// For single-spin spaces pass two_spin = false; slot is then ignored.
  LocalObservable(SpinComponent component, Slot slot, SpinSize s, bool two_spin = true);

  /// Parses names like "Sx_s", "Sz_e" (case-insensitive on the component).
  static LocalObservable parse(std::string_view name, SpinSize s, bool two_spin = true);

  SpinComponent component() const { return component_; }
  Slot slot() const { return slot_; }
  bool two_spin() const { return two_spin_; }
  SpinSize spin() const { return spin_; }
  std::string name() const;
  Index dim() const;
  /// Parity-odd observables (Sy, Sz) anticommute with the Z2 map.
  bool parity_odd() const { return component_ != SpinComponent::x; }

  StateVector apply(const StateVector& x) const;
  /// <x|O|x> for a normalized or unnormalized vector (real for Hermitian O).
  double expectation(const StateVector& x) const;
  /// <x|O|x> for a real vector; Sy gives zero.
  double real_expectation(const Eigen::Ref<const Eigen::VectorXd>& x) const;
  Operator dense() const;

private:
  SpinComponent component_;
  Slot slot_;
  SpinSize spin_;
  bool two_spin_;
  std::vector<double> raise_;
};

}  // namespace esqpt
