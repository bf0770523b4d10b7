#include "esqpt/spectral.hpp"

#include <lapacke.h>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <stdexcept>
#include <string>

namespace esqpt {

namespace {

std::atomic<std::uint64_t> g_eigensolves{0};

void check_symmetric(const RealOperator& h) {
  if (h.rows() != h.cols()) throw std::invalid_argument("eigensolve: matrix is not square");
  const double norm = h.norm();
  if (norm == 0.0) return;
  const double asym = (h - h.transpose()).norm();
  if (asym > 1e-12 * norm) {
    throw std::invalid_argument("eigensolve: matrix is not Hermitian (relative residual " +
                                std::to_string(asym / norm) + ")");
  }
}

// In-place LAPACK driver. On return `a` holds eigenvectors (if requested).
void dense_symmetric_eigen(RealOperator& a, Eigen::VectorXd& w, RealOperator& z, bool vectors) {
  const lapack_int n = static_cast<lapack_int>(a.rows());
  w.resize(n);
  if (n == 0) return;
  lapack_int found = 0;
  std::vector<lapack_int> support(2 * static_cast<std::size_t>(n));
  if (vectors) z.resize(n, n);
  else z.resize(0, 0);
  const lapack_int info = LAPACKE_dsyevr(
      LAPACK_COL_MAJOR, vectors ? 'V' : 'N', 'A', 'L', n, a.data(), n, 0.0, 0.0, 0, 0, 0.0,
      &found, w.data(), vectors ? z.data() : nullptr, vectors ? n : 1, support.data());
  if (info != 0 || found != n) {
    throw std::runtime_error("eigensolve: LAPACK dsyevr failed (info=" + std::to_string(info) +
                             ")");
  }
  g_eigensolves.fetch_add(1);
}

}  // namespace

Eigen::VectorXd SpectralData::product_vector(Index n) const {
  if (!has_vectors()) throw std::logic_error("SpectralData holds no eigenvectors");
  return basis.to_product(vectors.col(n));
}

RealOperator SpectralData::product_vectors() const {
  if (!has_vectors()) throw std::logic_error("SpectralData holds no eigenvectors");
  return basis.expand(vectors);
}

SpectralData eigensolve(const RealOperator& h, Sector sector, const ParityMap& parity,
                        SolveOptions opts) {
  check_symmetric(h);
  SpectralData out;
  out.sector = sector;
  RealOperator block;
  if (sector == Sector::full) {
    out.basis = SectorBasis(Sector::full, h.rows(), {});
    block = h;
  } else {
    if (parity.size() != h.rows()) throw std::invalid_argument("eigensolve: parity map dimension mismatch");
    const double scale = std::max(1.0, h.cwiseAbs().maxCoeff());
    const double residual = parity.commutator_residual(h);
    if (residual > 1e-10 * scale) {
      throw std::invalid_argument("eigensolve: Hamiltonian does not commute with the parity map (" +
                                  std::to_string(residual) + ")");
    }
    out.basis = parity.basis(sector);
    block = out.basis.congruence(h);
  }
  dense_symmetric_eigen(block, out.energies, out.vectors, opts.vectors);
  return out;
}

SpectralData eigensolve(const RealOperator& h, Sector sector, SolveOptions opts) {
  return eigensolve(h, sector, ParityMap::reversal(h.rows()), opts);
}

SpectralData solve_model(const ModelParams& p, Sector sector, SolveOptions opts) {
  if (sector == Sector::full) {
    SpectralData even = solve_model(p, Sector::even, opts);
    SpectralData odd = solve_model(p, Sector::odd, opts);
    return merge_sectors(even, odd);
  }
  SpectralData out;
  out.params = p;
  out.sector = sector;
  out.basis = model_parity(p).basis(sector);
  RealOperator block = sector_hamiltonian(p, sector);
  dense_symmetric_eigen(block, out.energies, out.vectors, opts.vectors);
  return out;
}

SpectralData merge_sectors(const SpectralData& even, const SpectralData& odd) {
  if (even.sector != Sector::even || odd.sector != Sector::odd) {
    throw std::invalid_argument("merge_sectors: expected an even and an odd sector");
  }
  if (even.product_dim() != odd.product_dim()) {
    throw std::invalid_argument("merge_sectors: product dimensions differ");
  }
  const Index n = even.size() + odd.size();
  const Index dim = even.product_dim();
  if (n != dim) throw std::invalid_argument("merge_sectors: sectors do not span the space");
  const bool vectors = even.has_vectors() && odd.has_vectors();

  SpectralData out;
  out.params = even.params;
  out.sector = Sector::full;
  out.basis = SectorBasis(Sector::full, dim, {});
  out.energies.resize(n);
  if (vectors) out.vectors.resize(dim, n);

  Index i = 0;
  Index j = 0;
  for (Index k = 0; k < n; ++k) {
    // Ties go to the even sector so the ordering is deterministic.
    const bool take_even =
        j >= odd.size() || (i < even.size() && even.energies(i) <= odd.energies(j));
    if (take_even) {
      out.energies(k) = even.energies(i);
      if (vectors) out.vectors.col(k) = even.basis.to_product(even.vectors.col(i));
      ++i;
    } else {
      out.energies(k) = odd.energies(j);
      if (vectors) out.vectors.col(k) = odd.basis.to_product(odd.vectors.col(j));
      ++j;
    }
  }
  return out;
}

double eigen_residual(const RealOperator& h, const SpectralData& sd) {
  const RealOperator v = sd.product_vectors();
  const double norm = h.norm();
  const RealOperator r = h * v - v * sd.energies.asDiagonal();
  return norm == 0.0 ? r.norm() : r.norm() / norm;
}

double orthonormality_error(const SpectralData& sd) {
  const RealOperator g = sd.vectors.transpose() * sd.vectors;
  return (g - RealOperator::Identity(g.rows(), g.cols())).cwiseAbs().maxCoeff();
}

std::uint64_t eigensolve_count() { return g_eigensolves.load(); }

LevelStats level_spacing_ratios(std::span<const double> energies,
                                std::optional<EnergyWindow> window) {
  std::vector<double> e;
  e.reserve(energies.size());
  for (double x : energies) {
    if (!window || (x >= window->lo && x <= window->hi)) e.push_back(x);
  }
  if (e.size() < 3) {
    throw std::invalid_argument("level_spacing_ratios: need at least 3 levels, got " +
                                std::to_string(e.size()));
  }
  if (!std::is_sorted(e.begin(), e.end())) {
    throw std::invalid_argument("level_spacing_ratios: energies must be ascending");
  }
  LevelStats out;
  out.levels = static_cast<Index>(e.size());
  out.ratios.reserve(e.size() - 2);
  double sum = 0.0;
  for (std::size_t n = 1; n + 1 < e.size(); ++n) {
    const double prev = e[n] - e[n - 1];
    const double next = e[n + 1] - e[n];
    const double hi = std::max(prev, next);
    double r = 0.0;
    if (prev == 0.0 || next == 0.0) ++out.zero_spacings;
    if (hi > 0.0) r = std::min(prev, next) / hi;
    out.ratios.push_back(r);
    sum += r;
  }
  out.mean = sum / static_cast<double>(out.ratios.size());
  return out;
}

std::vector<double> degeneracy_scan(std::span<const double> energies, double tol) {
  if (!(tol > 0.0)) throw std::invalid_argument("degeneracy_scan: tolerance must be positive");
  std::vector<double> out;
  for (std::size_t n = 0; n + 1 < energies.size(); ++n) {
    if (std::abs(energies[n + 1] - energies[n]) < tol) out.push_back(energies[n]);
  }
  return out;
}

EigenstateCurve EigenstateCurve::normalized(double s) const {
  EigenstateCurve out = *this;
  for (double& x : out.energy) x /= s;
  for (double& x : out.value) x /= s;
  return out;
}

EigenstateCurve eigenstate_expectation(const SpectralData& sd, const LocalObservable& o) {
  if (o.dim() != sd.product_dim()) {
    throw std::invalid_argument("eigenstate_expectation: observable dimension mismatch");
  }
  EigenstateCurve out;
  out.energy.resize(static_cast<std::size_t>(sd.size()));
  out.value.resize(static_cast<std::size_t>(sd.size()));
  for (Index n = 0; n < sd.size(); ++n) {
    out.energy[static_cast<std::size_t>(n)] = sd.energies(n);
    out.value[static_cast<std::size_t>(n)] = o.real_expectation(sd.product_vector(n));
  }
  return out;
}

EigenstateCurve eigenstate_expectation(const SpectralData& sd, const Operator& o) {
  if (o.rows() != sd.product_dim() || o.cols() != sd.product_dim()) {
    throw std::invalid_argument("eigenstate_expectation: operator dimension mismatch");
  }
  EigenstateCurve out;
  for (Index n = 0; n < sd.size(); ++n) {
    const Eigen::VectorXcd v = sd.product_vector(n).cast<Complex>();
    out.energy.push_back(sd.energies(n));
    out.value.push_back(std::real(v.dot(o * v)));
  }
  return out;
}

}  // namespace esqpt
