#include "esqpt/quench.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace esqpt {

namespace {

bool is_two_spin(const SpectralData& sd, SpinSize s) { return sd.product_dim() == s.product_dim(); }

SpinSize spin_of(const SpectralData& sd) {
  if (!sd.params) throw std::invalid_argument("spectral data carries no model parameters");
  return sd.params->spin;
}

void require_vectors(const SpectralData& sd, const char* what) {
  if (!sd.has_vectors()) throw std::invalid_argument(std::string(what) + ": spectrum has no eigenvectors");
}

}  // namespace

StateVector initial_product_state(const ModelParams& p, double phi0, EnvPolarization env) {
  if (!(phi0 >= 0.0 && phi0 <= std::numbers::pi)) {
    throw std::invalid_argument("initial_product_state: phi0 must lie in [0, pi], got " +
                                std::to_string(phi0));
  }
  const StateVector system = coherent_state(phi0, separatrix_z(phi0, p.lambda), p.spin);
  if (p.geometry == Geometry::system_only) return system;
  const double phi_e = env == EnvPolarization::plus_x ? 0.0 : std::numbers::pi;
  return product_state(system, coherent_state(phi_e, 0.0, p.spin));
}

StateVector initial_product_state(const QuenchSpec& spec) {
  return initial_product_state(spec.params, spec.phi0, spec.env);
}

OverlapVector overlaps(const StateVector& psi, const SpectralData& sd) {
  require_vectors(sd, "overlaps");
  if (psi.size() != sd.product_dim()) throw std::invalid_argument("overlaps: dimension mismatch");
  const StateVector x = sd.sector == Sector::full ? psi : sd.basis.to_sector(psi);
  const Eigen::VectorXd re = sd.vectors.transpose() * x.real();
  const Eigen::VectorXd im = sd.vectors.transpose() * x.imag();
  OverlapVector out;
  out.c.resize(re.size());
  for (Index n = 0; n < re.size(); ++n) out.c(n) = Complex(re(n), im(n));
  return out;
}

double default_degeneracy_tol(SpinSize s) { return 1e-10 * std::max(1.0, s.value()); }

Index EnergyBlocks::multi_count() const {
  Index n = 0;
  for (Index b = 0; b < count(); ++b) n += (end(b) - begin(b)) > 1;
  return n;
}

Index EnergyBlocks::largest() const {
  Index n = 0;
  for (Index b = 0; b < count(); ++b) n = std::max(n, end(b) - begin(b));
  return n;
}

EnergyBlocks group_levels(const Eigen::VectorXd& e, double tol) {
  if (tol < 0.0) throw std::invalid_argument("group_levels: tolerance must be >= 0");
  EnergyBlocks out;
  out.start.push_back(0);
  for (Index n = 1; n < e.size(); ++n) {
    if (!(e(n) - e(n - 1) < tol)) out.start.push_back(n);
  }
  out.start.push_back(e.size());
  if (e.size() == 0) out.start.pop_back();
  return out;
}

// ---------------------------------------------------------------------------

DiagonalEnsemble::DiagonalEnsemble(const SpectralData& sd, double tol)
    : sd_(&sd), blocks_(group_levels(sd.energies, tol)) {
  require_vectors(sd, "DiagonalEnsemble");
}

void DiagonalEnsemble::prepare(const LocalObservable& o) {
  if (o.dim() != sd_->product_dim()) throw std::invalid_argument("DiagonalEnsemble: observable dimension mismatch");
  Eigen::VectorXd diag(sd_->size());
  for (Index n = 0; n < sd_->size(); ++n) {
    diag(n) = sd_->sector == Sector::full ? o.real_expectation(sd_->vectors.col(n))
                                          : o.real_expectation(sd_->product_vector(n));
  }
  diagonals_[o.name()] = std::move(diag);
}

Eigen::VectorXcd DiagonalEnsemble::block_state(const OverlapVector& c, Index b) const {
  Eigen::VectorXcd phi = Eigen::VectorXcd::Zero(sd_->product_dim());
  for (Index n = blocks_.begin(b); n < blocks_.end(b); ++n) {
    const Eigen::VectorXd v = sd_->product_vector(n);
    phi += c.c(n) * v.cast<Complex>();
  }
  return phi;
}

double DiagonalEnsemble::average(const OverlapVector& c, const LocalObservable& o) const {
  if (c.c.size() != sd_->size()) throw std::invalid_argument("DiagonalEnsemble: overlap size mismatch");
  if (o.dim() != sd_->product_dim()) throw std::invalid_argument("DiagonalEnsemble: observable dimension mismatch");
  const auto cached = diagonals_.find(o.name());
  const Eigen::VectorXd* diag = cached != diagonals_.end() ? &cached->second : nullptr;
  double acc = 0.0;
  for (Index b = 0; b < blocks_.count(); ++b) {
    const Index n = blocks_.begin(b);
    if (blocks_.end(b) - n == 1) {
      const double w = std::norm(c.c(n));
      if (w == 0.0) continue;
      const double on = diag ? (*diag)(n)
                             : o.real_expectation(sd_->product_vector(n));
      acc += w * on;
    } else {
      acc += o.expectation(StateVector(block_state(c, b)));
    }
  }
  return acc;
}

double DiagonalEnsemble::average(const OverlapVector& c, const Operator& o) const {
  if (o.rows() != sd_->product_dim() || o.cols() != sd_->product_dim()) {
    throw std::invalid_argument("DiagonalEnsemble: operator dimension mismatch");
  }
  double acc = 0.0;
  for (Index b = 0; b < blocks_.count(); ++b) {
    const Eigen::VectorXcd phi = block_state(c, b);
    acc += std::real(phi.dot(o * phi));
  }
  return acc;
}

double diagonal_ensemble_average(const OverlapVector& c, const SpectralData& sd,
                                 const LocalObservable& o, double tol) {
  return DiagonalEnsemble(sd, tol).average(c, o);
}

double diagonal_ensemble_average(const OverlapVector& c, const SpectralData& sd, const Operator& o,
                                 double tol) {
  return DiagonalEnsemble(sd, tol).average(c, o);
}

// ---------------------------------------------------------------------------

StateVector evolve_state(const OverlapVector& c, const SpectralData& sd, double t) {
  require_vectors(sd, "evolve_state");
  Eigen::VectorXd re(sd.size());
  Eigen::VectorXd im(sd.size());
  for (Index n = 0; n < sd.size(); ++n) {
    const Complex a = c.c(n) * std::polar(1.0, -sd.energies(n) * t);
    re(n) = a.real();
    im(n) = a.imag();
  }
  const Eigen::VectorXd xr = sd.basis.to_product(sd.vectors * re);
  const Eigen::VectorXd xi = sd.basis.to_product(sd.vectors * im);
  StateVector out(xr.size());
  for (Index i = 0; i < xr.size(); ++i) out(i) = Complex(xr(i), xi(i));
  return out;
}

EvolutionSeries evolve_expectation(const StateVector& psi, const SpectralData& sd,
                                   std::span<const LocalObservable> observables,
                                   std::span<const double> times) {
  require_vectors(sd, "evolve_expectation");
  if (sd.sector != Sector::full) throw std::invalid_argument("evolve_expectation: needs a full spectrum");
  for (const auto& o : observables) {
    if (o.dim() != sd.product_dim()) throw std::invalid_argument("evolve_expectation: observable dimension mismatch");
  }
  const OverlapVector c = overlaps(psi, sd);
  const Index n = sd.size();

  EvolutionSeries out;
  out.times.assign(times.begin(), times.end());
  for (const auto& o : observables) out.names.push_back(o.name());
  out.values.assign(observables.size(), std::vector<double>(times.size()));
  out.norm.resize(times.size());
  if (sd.params) out.energy.resize(times.size());

  constexpr Index kChunk = 32;
  Eigen::MatrixXd ar(n, kChunk);
  Eigen::MatrixXd ai(n, kChunk);
  for (std::size_t t0 = 0; t0 < times.size(); t0 += kChunk) {
    const Index width = std::min<Index>(kChunk, static_cast<Index>(times.size() - t0));
    for (Index j = 0; j < width; ++j) {
      const double t = times[t0 + static_cast<std::size_t>(j)];
      for (Index k = 0; k < n; ++k) {
        const Complex a = c.c(k) * std::polar(1.0, -sd.energies(k) * t);
        ar(k, j) = a.real();
        ai(k, j) = a.imag();
      }
    }
    const Eigen::MatrixXd xr = sd.vectors * ar.leftCols(width);
    const Eigen::MatrixXd xi = sd.vectors * ai.leftCols(width);
    for (Index j = 0; j < width; ++j) {
      StateVector x(xr.rows());
      for (Index i = 0; i < x.size(); ++i) x(i) = Complex(xr(i, j), xi(i, j));
      const std::size_t ti = t0 + static_cast<std::size_t>(j);
      out.norm[ti] = x.norm();
      for (std::size_t k = 0; k < observables.size(); ++k) {
        out.values[k][ti] = observables[k].expectation(x);
      }
      if (sd.params) out.energy[ti] = std::real(x.dot(apply_hamiltonian(*sd.params, x)));
    }
  }
  return out;
}

std::vector<double> time_grid(double t_max, double dt) {
  if (!(dt > 0.0) || !(t_max >= 0.0)) throw std::invalid_argument("time_grid: need dt > 0, t_max >= 0");
  const auto steps = static_cast<std::size_t>(std::llround(t_max / dt));
  std::vector<double> t(steps + 1);
  for (std::size_t k = 0; k <= steps; ++k) t[k] = static_cast<double>(k) * dt;
  return t;
}

// ---------------------------------------------------------------------------

QuenchResult run_quench(const DiagonalEnsemble& de, const QuenchSpec& spec) {
  const SpectralData& sd = de.spectrum();
  const StateVector psi = initial_product_state(spec);
  const OverlapVector c = overlaps(psi, sd);
  const bool two_spin = spec.params.geometry == Geometry::two_spin;

  QuenchResult r;
  r.phi0 = spec.phi0;
  r.energy = energy_expectation(spec.params, psi);
  r.total_weight = c.total_weight();
  r.blocks = de.blocks().count();
  r.multi_blocks = de.blocks().multi_count();
  for (const auto& name : spec.observables) {
    const LocalObservable o = LocalObservable::parse(name, spec.params.spin, two_spin);
    r.names.push_back(o.name());
    r.averages.push_back(de.average(c, o));
  }
  return r;
}

std::vector<double> default_phi_grid(int n) {
  if (n < 1) throw std::invalid_argument("default_phi_grid: need at least one point");
  if (n == 1) return {0.0};
  std::vector<double> g(static_cast<std::size_t>(n));
  for (int k = 0; k < n; ++k) g[static_cast<std::size_t>(k)] = std::numbers::pi * k / (n - 1);
  g.back() = std::numbers::pi;
  return g;
}

std::vector<MemoryCurve> memory_curves(const SpectralData& sd, std::span<const double> phi_grid,
                                       std::span<const std::string> observables,
                                       MemoryOptions opts) {
  const SpinSize s = spin_of(sd);
  const ModelParams& p = *sd.params;
  const bool two_spin = is_two_spin(sd, s);
  const double tol = opts.degeneracy_tol >= 0.0 ? opts.degeneracy_tol : default_degeneracy_tol(s);

  DiagonalEnsemble de(sd, tol);
  std::vector<MemoryCurve> curves;
  for (const auto& name : observables) {
    const LocalObservable o = LocalObservable::parse(name, s, two_spin);
    de.prepare(o);
    curves.push_back(MemoryCurve{p, o.name(), {}});
  }
  QuenchSpec spec;
  spec.params = p;
  spec.env = opts.env;
  spec.observables.assign(observables.begin(), observables.end());
  for (double phi0 : phi_grid) {
    spec.phi0 = phi0;
    const QuenchResult r = run_quench(de, spec);
    for (std::size_t k = 0; k < curves.size(); ++k) {
      curves[k].points.push_back(MemoryPoint{phi0, r.averages[k], r.energy});
    }
  }
  return curves;
}

MemoryCurve memory_curve(const SpectralData& sd, std::span<const double> phi_grid,
                         const std::string& observable, MemoryOptions opts) {
  const std::string names[] = {observable};
  return memory_curves(sd, phi_grid, names, opts).front();
}

double memory_quantifier(const MemoryCurve& curve) {
  if (curve.points.empty()) throw std::invalid_argument("memory_quantifier: empty curve");
  const auto [lo, hi] = std::minmax_element(
      curve.points.begin(), curve.points.end(),
      [](const MemoryPoint& a, const MemoryPoint& b) { return a.value < b.value; });
  return (hi->value - lo->value) / curve.params.spin.value();
}

}  // namespace esqpt
