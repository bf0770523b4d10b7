#include "esqpt/model.hpp"

#include <boost/math/tools/roots.hpp>

#include <atomic>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace esqpt {

void ModelParams::validate() const {
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) {
    throw std::invalid_argument("lambda must be finite and >= 0");
  }
  if (!(v >= 0.0) || !std::isfinite(v)) {
    throw std::invalid_argument("v must be finite and >= 0");
  }
}

namespace {

std::atomic<std::size_t> g_dense_budget{std::size_t{3} << 30};

void check_budget(Index n) {
  const double bytes = static_cast<double>(n) * static_cast<double>(n) * sizeof(double);
  if (bytes > static_cast<double>(g_dense_budget.load())) {
    throw std::length_error("dense " + std::to_string(n) + "x" + std::to_string(n) +
                            " matrix exceeds the configured memory budget");
  }
}

// Calls emit(row, value) for every nonzero of column q of H.
template <typename Emit>
void hamiltonian_column(const ModelParams& p, const std::vector<double>& c, Index q, Emit&& emit) {
  const SpinSize s = p.spin;
  const double S = s.value();
  const double n = p.n_spins();
  const Index d = s.dim();
  if (p.geometry == Geometry::system_only) {
    const double m = -S + static_cast<double>(q);
    emit(q, p.lambda / n * m * m);
    if (q + 1 < d) emit(q + 1, -0.5 * c[static_cast<std::size_t>(q)]);
    if (q > 0) emit(q - 1, -0.5 * c[static_cast<std::size_t>(q - 1)]);
    return;
  }
  const Index ks = q / d;
  const Index ke = q % d;
  const double ms = -S + static_cast<double>(ks);
  const double me = -S + static_cast<double>(ke);
  emit(q, p.lambda / n * ms * ms + p.v / (2.0 * n) * ms * me);
  if (ks + 1 < d) emit(q + d, -0.5 * c[static_cast<std::size_t>(ks)]);
  if (ks > 0) emit(q - d, -0.5 * c[static_cast<std::size_t>(ks - 1)]);
  if (ke + 1 < d) emit(q + 1, -0.5 * c[static_cast<std::size_t>(ke)]);
  if (ke > 0) emit(q - 1, -0.5 * c[static_cast<std::size_t>(ke - 1)]);
}

}  // namespace

std::size_t dense_memory_budget() { return g_dense_budget.load(); }
void set_dense_memory_budget(std::size_t bytes) { g_dense_budget.store(bytes); }

RealOperator build_hamiltonian(const ModelParams& p) {
  p.validate();
  const Index n = p.dim();
  check_budget(n);
  const auto c = raising_elements(p.spin);
  RealOperator h = RealOperator::Zero(n, n);
  for (Index q = 0; q < n; ++q) {
    hamiltonian_column(p, c, q, [&](Index row, double value) { h(row, q) += value; });
  }
  return h;
}

RealOperator build_system_hamiltonian(SpinSize s, double lambda) {
  ModelParams p;
  p.spin = s;
  p.lambda = lambda;
  p.geometry = Geometry::system_only;
  return build_hamiltonian(p);
}

ParityMap model_parity(const ModelParams& p) {
  return ParityMap(p.spin, p.geometry == Geometry::two_spin ? ParityMap::Slots::both
                                                            : ParityMap::Slots::single);
}

RealOperator sector_hamiltonian(const ModelParams& p, Sector sector) {
  if (sector == Sector::full) return build_hamiltonian(p);
  p.validate();
  const SectorBasis basis = model_parity(p).basis(sector);
  const Index n = basis.dim();
  check_budget(n);
  const auto c = raising_elements(p.spin);

  // product index -> (sector column, coefficient)
  std::vector<Index> owner(static_cast<std::size_t>(p.dim()), -1);
  std::vector<double> weight(static_cast<std::size_t>(p.dim()), 0.0);
  const double r = 1.0 / std::sqrt(2.0);
  for (Index a = 0; a < n; ++a) {
    const auto& col = basis.columns()[static_cast<std::size_t>(a)];
    if (col.first == col.second) {
      owner[static_cast<std::size_t>(col.first)] = a;
      weight[static_cast<std::size_t>(col.first)] = 1.0;
    } else {
      owner[static_cast<std::size_t>(col.first)] = a;
      weight[static_cast<std::size_t>(col.first)] = r;
      owner[static_cast<std::size_t>(col.second)] = a;
      weight[static_cast<std::size_t>(col.second)] = col.sign * r;
    }
  }

  RealOperator h = RealOperator::Zero(n, n);
  for (Index b = 0; b < n; ++b) {
    const auto& col = basis.columns()[static_cast<std::size_t>(b)];
    auto accumulate = [&](Index q, double wq) {
      hamiltonian_column(p, c, q, [&](Index row, double value) {
        const Index a = owner[static_cast<std::size_t>(row)];
        if (a >= 0) h(a, b) += weight[static_cast<std::size_t>(row)] * wq * value;
      });
    };
    if (col.first == col.second) {
      accumulate(col.first, 1.0);
    } else {
      accumulate(col.first, r);
      accumulate(col.second, col.sign * r);
    }
  }
  return h;
}

StateVector apply_hamiltonian(const ModelParams& p, const StateVector& x) {
  if (x.size() != p.dim()) throw std::invalid_argument("apply_hamiltonian: dimension mismatch");
  const auto c = raising_elements(p.spin);
  StateVector y = StateVector::Zero(x.size());
  for (Index q = 0; q < x.size(); ++q) {
    const Complex xq = x(q);
    if (xq == Complex(0.0, 0.0)) continue;
    hamiltonian_column(p, c, q, [&](Index row, double value) { y(row) += value * xq; });
  }
  return y;
}

double energy_expectation(const ModelParams& p, const StateVector& x) {
  return std::real(x.dot(apply_hamiltonian(p, x))) / x.squaredNorm();
}

double classical_energy(double phi, double z, double lambda) {
  return 0.5 * lambda * z * z - std::sqrt(std::max(0.0, 1.0 - z * z)) * std::cos(phi);
}

double energy_z(double phi, double energy, double lambda) {
  auto f = [&](double z) { return classical_energy(phi, z, lambda) - energy; };
  const double f0 = f(0.0);
  if (f0 == 0.0) return 0.0;
  if (f0 > 0.0) {
    throw std::domain_error("energy_z: energy " + std::to_string(energy) +
                            " lies below the z = 0 value at phi = " + std::to_string(phi));
  }
  // f can turn over near z = 1 when cos(phi) < 0; scan for the first sign change.
  constexpr int kScan = 512;
  double lo = 0.0;
  double hi = -1.0;
  for (int k = 1; k <= kScan; ++k) {
    const double z = static_cast<double>(k) / kScan;
    if (f(z) >= 0.0) {
      hi = z;
      break;
    }
    lo = z;
  }
  if (hi < 0.0) {
    throw std::domain_error("energy_z: no root bracketed for energy " + std::to_string(energy) +
                            " at phi = " + std::to_string(phi));
  }
  if (f(hi) == 0.0) return hi;
  std::uintmax_t iters = 200;
  const auto [a, b] = boost::math::tools::toms748_solve(
      f, lo, hi, boost::math::tools::eps_tolerance<double>(52), iters);
  return std::abs(f(a)) <= std::abs(f(b)) ? a : b;
}

double separatrix_z(double phi, double lambda) {
  if (!(lambda > 1.0)) {
    throw std::domain_error("separatrix_z: lambda must exceed 1 for an unstable fixed point");
  }
  return energy_z(phi, 1.0, lambda);
}

ClassicalState ClassicalState::from_canonical(const Canonical& c) {
  auto unit = [](double phi, double z) {
    const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
    return Eigen::Vector3d(r * std::cos(phi), r * std::sin(phi), z);
  };
  ClassicalState x;
  x.m_s = unit(c.phi_s, c.z_s);
  x.m_e = unit(c.phi_e, c.z_e);
  return x;
}

ClassicalState ClassicalState::from_canonical(double phi_s, double z_s, double phi_e, double z_e) {
  return from_canonical(Canonical{phi_s, z_s, phi_e, z_e});
}

ClassicalState::Canonical ClassicalState::canonical() const {
  return Canonical{std::atan2(m_s.y(), m_s.x()), m_s.z(), std::atan2(m_e.y(), m_e.x()), m_e.z()};
}

void ClassicalState::renormalize() {
  m_s.normalize();
  m_e.normalize();
}

double total_classical_energy(const ClassicalState& x, const ModelParams& p) {
  return 0.5 * p.lambda * x.m_s.z() * x.m_s.z() - x.m_s.x() - x.m_e.x() +
         0.25 * p.v * x.m_s.z() * x.m_e.z();
}

}  // namespace esqpt
