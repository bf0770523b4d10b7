#include "esqpt/model.hpp"
#include "esqpt/spectral.hpp"

#include <gtest/gtest.h>
#include <unsupported/Eigen/KroneckerProduct>

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

using namespace esqpt;

namespace {

constexpr double kPi = std::numbers::pi;

ModelParams two_spin(double s, double lambda, double v) {
  ModelParams p;
  p.spin = SpinSize(s);
  p.lambda = lambda;
  p.v = v;
  return p;
}

Eigen::VectorXd sorted_eigenvalues(const RealOperator& h) {
  Eigen::SelfAdjointEigenSolver<RealOperator> es(h, Eigen::EigenvaluesOnly);
  return es.eigenvalues();
}

// H on N system qubits and N environment qubits from the local Pauli form:
// -h/2 sum sx_i - h/2 sum sx_e,i + Lambda/(4N) sum_ij sz_i sz_j + V/(8N) sum_ij sz_i sz_e,j.
RealOperator local_pauli_hamiltonian(int n_per_side, double lambda, double v) {
  const int qubits = 2 * n_per_side;
  const Index dim = Index{1} << qubits;
  RealOperator sx(2, 2), sz(2, 2), id = RealOperator::Identity(2, 2);
  sx << 0, 1, 1, 0;
  sz << 1, 0, 0, -1;
  auto single = [&](const RealOperator& op, int site) {
    RealOperator out = RealOperator::Identity(1, 1);
    for (int q = 0; q < qubits; ++q) out = Eigen::kroneckerProduct(out, q == site ? op : id).eval();
    return out;
  };
  const double N = n_per_side;
  RealOperator h = RealOperator::Zero(dim, dim);
  for (int i = 0; i < qubits; ++i) h -= 0.5 * single(sx, i);
  for (int i = 0; i < n_per_side; ++i) {
    for (int j = 0; j < n_per_side; ++j) {
      h += lambda / (4 * N) * single(sz, i) * single(sz, j);
      h += v / (8 * N) * single(sz, i) * single(sz, n_per_side + j);
    }
  }
  return h;
}

}  // namespace

TEST(ModelParams, Validation) {
  ModelParams p;
  EXPECT_DOUBLE_EQ(p.lambda, 10.0);
  EXPECT_NO_THROW(p.validate());
  p.v = -1;
  EXPECT_THROW(p.validate(), std::invalid_argument);
  p.v = 0;
  p.lambda = -0.5;
  EXPECT_THROW(p.validate(), std::invalid_argument);
  p.lambda = std::nan("");
  EXPECT_THROW(p.validate(), std::invalid_argument);
  EXPECT_EQ(two_spin(2.5, 10, 0).n_spins(), 5.0);
}

TEST(BuildHamiltonian, SpinHalfAgainstPauliKronecker) {
  // Independent 4x4 construction with Pauli matrices and N = 1.
  RealOperator sx(2, 2), sz(2, 2), id = RealOperator::Identity(2, 2);
  sx << 0, 0.5, 0.5, 0;
  sz << -0.5, 0, 0, 0.5;
  const double lambda = 10, v = 0, N = 1;
  const RealOperator oracle = -RealOperator(Eigen::kroneckerProduct(sx, id)) -
                              RealOperator(Eigen::kroneckerProduct(id, sx)) +
                              lambda / N * RealOperator(Eigen::kroneckerProduct(sz * sz, id)) +
                              v / (2 * N) * RealOperator(Eigen::kroneckerProduct(sz, sz));
  const RealOperator h = build_hamiltonian(two_spin(0.5, lambda, v));
  EXPECT_LT((h - oracle).cwiseAbs().maxCoeff(), 1e-15);
  const Eigen::VectorXd e = sorted_eigenvalues(oracle);
  const Eigen::Vector4d expected(1.5, 2.5, 2.5, 3.5);
  EXPECT_LT((e - expected).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(BuildHamiltonian, FreeSpinsSpectrum) {
  const Eigen::VectorXd e = sorted_eigenvalues(build_hamiltonian(two_spin(1, 0, 0)));
  Eigen::VectorXd expected(9);
  expected << -2, -1, -1, 0, 0, 0, 1, 1, 2;
  EXPECT_LT((e - expected).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(BuildHamiltonian, CollectiveSpectrumInsideLocalPauliSpectrum) {
  // N = 2 qubits per side: the S = 1 collective spectrum is the symmetric
  // subspace of the 16-dim local model.
  for (double v : {0.0, 7.0, 13.0}) {
    const Eigen::VectorXd local = sorted_eigenvalues(local_pauli_hamiltonian(2, 10.0, v));
    const Eigen::VectorXd coll = sorted_eigenvalues(build_hamiltonian(two_spin(1, 10.0, v)));
    std::vector<bool> used(static_cast<std::size_t>(local.size()), false);
    for (Index k = 0; k < coll.size(); ++k) {
      bool found = false;
      for (Index j = 0; j < local.size() && !found; ++j) {
        if (!used[static_cast<std::size_t>(j)] && std::abs(local(j) - coll(k)) < 1e-10) {
          used[static_cast<std::size_t>(j)] = true;
          found = true;
        }
      }
      EXPECT_TRUE(found) << "level " << coll(k) << " at v=" << v;
    }
  }
}

TEST(BuildHamiltonian, HermitianAndParitySymmetric) {
  for (auto [S, v] : {std::pair{3.0, 13.0}, std::pair{2.0, 7.0}, std::pair{2.5, 4.0}}) {
    const ModelParams p = two_spin(S, 10, v);
    const RealOperator h = build_hamiltonian(p);
    EXPECT_LT((h - h.transpose()).norm(), 1e-12 * h.norm());
    const RealOperator U = model_parity(p).matrix();
    EXPECT_LT((h * U - U * h).norm(), 1e-10);
    EXPECT_LT(model_parity(p).commutator_residual(h), 1e-10);
  }
}

TEST(BuildHamiltonian, DecoupledEqualsKroneckerSum) {
  const SpinSize s(2.5);
  ModelParams p = two_spin(2.5, 10, 0);
  const RealOperator hs = build_system_hamiltonian(s, 10);
  const RealOperator id = RealOperator::Identity(s.dim(), s.dim());
  const RealOperator sx = spin_matrices(s).x.real();
  const RealOperator expected =
      RealOperator(Eigen::kroneckerProduct(hs, id)) + RealOperator(Eigen::kroneckerProduct(id, -sx));
  EXPECT_EQ((build_hamiltonian(p) - expected).cwiseAbs().maxCoeff(), 0.0);
}

TEST(BuildHamiltonian, SystemOnlyGeometry) {
  ModelParams p = two_spin(3, 10, 5);
  p.geometry = Geometry::system_only;
  EXPECT_EQ(p.dim(), 7);
  EXPECT_EQ((build_hamiltonian(p) - build_system_hamiltonian(SpinSize(3), 10)).cwiseAbs().maxCoeff(), 0.0);
  EXPECT_EQ(model_parity(p).size(), 7);
}

TEST(BuildHamiltonian, MemoryBudgetGuard) {
  const std::size_t saved = dense_memory_budget();
  set_dense_memory_budget(1000);
  EXPECT_THROW(build_hamiltonian(two_spin(3, 10, 1)), std::length_error);
  EXPECT_THROW(sector_hamiltonian(two_spin(3, 10, 1), Sector::even), std::length_error);
  set_dense_memory_budget(saved);
  EXPECT_NO_THROW(build_hamiltonian(two_spin(3, 10, 1)));
}

TEST(SystemHamiltonian, Examples) {
  const Eigen::VectorXd e = sorted_eigenvalues(build_system_hamiltonian(SpinSize(0.5), 10));
  EXPECT_NEAR(e(0), 2.0, 1e-12);
  EXPECT_NEAR(e(1), 3.0, 1e-12);
  for (double S : {1.0, 2.5, 6.0}) {
    const SpinSize s(S);
    const Eigen::VectorXd e0 = sorted_eigenvalues(build_system_hamiltonian(s, 0));
    for (Index k = 0; k < s.dim(); ++k) EXPECT_NEAR(e0(k), -S + static_cast<double>(k), 1e-12);
  }
}

TEST(SystemHamiltonian, FixedPointEnergyCorrectionIsOrderOne) {
  // <H_s> in the coherent state at (pi, 0) is S + lambda/4 exactly.
  for (double S : {10.0, 20.0, 50.0, 100.0, 200.0}) {
    const SpinSize s(S);
    ModelParams p;
    p.spin = s;
    p.geometry = Geometry::system_only;
    const double e = energy_expectation(p, coherent_state(kPi, 0.0, s));
    EXPECT_NEAR((e / S - 1.0) * S, 2.5, 1e-8);
  }
}

TEST(SystemHamiltonian, CoherentEnergyApproachesClassicalAsOneOverS) {
  // Deviation (<H_s>/(hS) - E(phi,z)) * S must stay bounded: it equals
  // lambda (1 - z^2) / 4 for the coherent state.
  for (auto [phi, z] : {std::pair{0.0, 0.6}, std::pair{kPi / 2, 1 / std::sqrt(5.0)}, std::pair{2.0, 0.3}}) {
    double c_first = 0.0;
    for (double S : {20.0, 50.0, 100.0, 200.0}) {
      const SpinSize s(S);
      ModelParams p;
      p.spin = s;
      p.geometry = Geometry::system_only;
      const double dev = (energy_expectation(p, coherent_state(phi, z, s)) / S - classical_energy(phi, z, 10)) * S;
      if (S == 20.0) c_first = dev;
      EXPECT_NEAR(dev, c_first, 1e-8);
      EXPECT_NEAR(dev, 10 * (1 - z * z) / 4, 1e-8);
    }
  }
}

TEST(SectorHamiltonian, EqualsCongruenceOfDense) {
  for (auto S : {1.0, 1.5, 3.0}) {
    const ModelParams p = two_spin(S, 10, 13);
    const RealOperator h = build_hamiltonian(p);
    for (auto sec : {Sector::even, Sector::odd}) {
      const RealOperator direct = sector_hamiltonian(p, sec);
      const RealOperator cong = model_parity(p).basis(sec).congruence(h);
      EXPECT_LT((direct - cong).cwiseAbs().maxCoeff(), 1e-13);
    }
  }
}

TEST(ApplyHamiltonian, MatchesDense) {
  const ModelParams p = two_spin(2.5, 10, 7);
  std::mt19937_64 rng(3);
  std::normal_distribution<double> g;
  StateVector x(p.dim());
  for (Index i = 0; i < x.size(); ++i) x(i) = Complex(g(rng), g(rng));
  const RealOperator h = build_hamiltonian(p);
  EXPECT_LT((apply_hamiltonian(p, x) - h.cast<Complex>() * x).norm(), 1e-12);
  EXPECT_NEAR(energy_expectation(p, x), x.dot(h.cast<Complex>() * x).real() / x.squaredNorm(), 1e-10);
}

TEST(ClassicalEnergy, Examples) {
  EXPECT_DOUBLE_EQ(classical_energy(kPi, 0, 10), 1.0);
  EXPECT_DOUBLE_EQ(classical_energy(0, 0, 10), -1.0);
  EXPECT_NEAR(classical_energy(0, 0.6, 10), 1.0, 1e-15);
}

TEST(ClassicalEnergy, EvenUnderReflections) {
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> uphi(-kPi, kPi), uz(-1, 1);
  for (int k = 0; k < 100; ++k) {
    const double phi = uphi(rng), z = uz(rng);
    EXPECT_EQ(classical_energy(phi, z, 10), classical_energy(-phi, z, 10));
    EXPECT_EQ(classical_energy(phi, z, 10), classical_energy(phi, -z, 10));
  }
}

TEST(Separatrix, Examples) {
  EXPECT_NEAR(separatrix_z(kPi, 10), 0.0, 1e-12);
  EXPECT_NEAR(separatrix_z(0, 10), 0.6, 1e-12);
  EXPECT_NEAR(separatrix_z(kPi / 2, 10), 1 / std::sqrt(5.0), 1e-12);
}

TEST(Separatrix, LiesOnEnergyOne) {
  for (int k = 0; k <= 200; ++k) {
    const double phi = kPi * k / 200;
    const double z = separatrix_z(phi, 10);
    EXPECT_GE(z, 0.0);
    EXPECT_NEAR(classical_energy(phi, z, 10), 1.0, 1e-12) << "phi=" << phi;
  }
  // For lambda >= 2 the separatrix spans every phase.
  for (double lambda : {2.0, 3.0, 25.0}) {
    EXPECT_NEAR(classical_energy(1.0, separatrix_z(1.0, lambda), lambda), 1.0, 1e-12);
  }
  // For 1 < lambda < 2 it does not reach phi = pi/2.
  EXPECT_THROW(separatrix_z(1.5, 1.5), std::domain_error);
}

TEST(Separatrix, RequiresLambdaAboveOne) {
  EXPECT_THROW(separatrix_z(0.5, 1.0), std::domain_error);
  EXPECT_THROW(separatrix_z(0.5, 0.2), std::domain_error);
}

TEST(EnergyZ, RootAndNoRoot) {
  EXPECT_NEAR(energy_z(0.0, 1.0, 10), 0.6, 1e-12);
  const double z = energy_z(0.0, 0.5, 10);
  EXPECT_NEAR(classical_energy(0.0, z, 10), 0.5, 1e-12);
  EXPECT_THROW(energy_z(0.0, -2.0, 10), std::domain_error);
  EXPECT_THROW(energy_z(0.0, 6.0, 10), std::domain_error);
}

TEST(ClassicalState, ConversionRoundTrip) {
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> uphi(-kPi, kPi), uz(-1 + 1e-6, 1 - 1e-6);
  for (int k = 0; k < 200; ++k) {
    const ClassicalState::Canonical c{uphi(rng), uz(rng), uphi(rng), uz(rng)};
    const ClassicalState x = ClassicalState::from_canonical(c);
    EXPECT_NEAR(x.m_s.norm(), 1.0, 1e-9);
    EXPECT_NEAR(x.m_e.norm(), 1.0, 1e-9);
    const auto back = x.canonical();
    EXPECT_NEAR(back.phi_s, c.phi_s, 1e-10);
    EXPECT_NEAR(back.z_s, c.z_s, 1e-10);
    EXPECT_NEAR(back.phi_e, c.phi_e, 1e-10);
    EXPECT_NEAR(back.z_e, c.z_e, 1e-10);
  }
  ClassicalState y;
  y.m_s = Eigen::Vector3d(3, 0, 4);
  y.renormalize();
  EXPECT_NEAR(y.m_s.norm(), 1.0, 1e-15);
}

TEST(TotalClassicalEnergy, Examples) {
  for (double v : {0.0, 5.0, 30.0}) {
    ModelParams p = two_spin(1, 10, v);
    EXPECT_NEAR(total_classical_energy(ClassicalState::from_canonical(kPi, 0, 0, 0), p), 0.0, 1e-15);
    EXPECT_NEAR(total_classical_energy(ClassicalState::from_canonical(0, 0.6, 0, 0), p), 0.0, 1e-15);
  }
  ModelParams p = two_spin(1, 10, 8);
  const auto x = ClassicalState::from_canonical(0.4, 0.3, 1.1, -0.2);
  const double expected = 5 * 0.09 - std::sqrt(1 - 0.09) * std::cos(0.4) - std::sqrt(1 - 0.04) * std::cos(1.1) +
                          2 * 0.3 * -0.2;
  EXPECT_NEAR(total_classical_energy(x, p), expected, 1e-14);
}
