// Acceptance suite: one PASS/FAIL line per criterion, measured values
// alongside. The property suite (criterion 9) runs first; when it fails the
// physics criteria are reported as FAIL without being evaluated.

#include "esqpt/classical.hpp"
#include "esqpt/model.hpp"
#include "esqpt/quench.hpp"
#include "esqpt/spectral.hpp"
#include "esqpt/spectral_cache.hpp"
#include "esqpt/spin.hpp"
#include "esqpt/twa.hpp"

#include "CLI11.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <functional>
#include <iostream>
#include <numbers>
#include <random>
#include <set>
#include <string>
#include <vector>

using namespace esqpt;

namespace {

constexpr double kPi = std::numbers::pi;

// Pinned tolerances and thresholds.
namespace tol {
// 1: level statistics
constexpr double r_integrable = 0.38;
constexpr double r_integrable_slack = 0.04;
constexpr double r_ceiling = 0.56;
constexpr int r_allowed_drops = 1;
// 2: chaos map
constexpr double lyap_chaotic_min = 0.1;
constexpr double lyap_regular_max = 0.02;
constexpr double lyap_grid_lo = 1.0;
constexpr double lyap_grid_hi = 2.0;
// 3, 4: system-only memory and eigenstate dip
constexpr double v0_memory_min = 0.25;
constexpr double eig_dip_max = -0.9;
constexpr double eig_dip_window = 0.05;
// 5, 6: memory robustness and proximity
constexpr double sx_ratio_min = 3.0;
constexpr double env_decoupled_max = 1e-9;
constexpr double env_coupled_min = 0.05;
// 7: degeneracy shift
constexpr double degeneracy_tol = 1e-7;
constexpr double weak_coupling_floor = -0.05;
constexpr double strong_coupling_ceiling = -0.2;
// 8: TWA
constexpr double twa_max_dev = 0.05;
constexpr double twa_stderr_target = 0.025;
constexpr double twa_stderr_lo = 0.0125;  // factor 2 around the target
constexpr double twa_stderr_hi = 0.05;
// 9: property suites
constexpr double commutator_rel = 1e-12;
constexpr double hermitian = 1e-14;
constexpr double parity = 1e-12;
constexpr double multiset = 1e-10;
constexpr double de_oracle = 1e-3;  // times S
constexpr double eom = 1e-9;
constexpr double drift = 1e-6;
constexpr double symmetry_zero = 1e-9;
}  // namespace tol

std::string fmt(const char* f, ...) {
  char buf[1024];
  va_list ap;
  va_start(ap, f);
  std::vsnprintf(buf, sizeof buf, f, ap);
  va_end(ap);
  return buf;
}

struct Outcome {
  bool pass = true;
  std::vector<std::string> notes;
  void check(bool ok, std::string what) {
    pass = pass && ok;
    notes.push_back((ok ? "" : "!! ") + std::move(what));
  }
};

void report(int id, const std::string& title, const Outcome& o, double seconds) {
  std::cout << (o.pass ? "PASS" : "FAIL") << "  criterion " << id << ": " << title << fmt("  (%.1f s)", seconds)
            << "\n";
  for (const auto& n : o.notes) std::cout << "        " << n << "\n";
  std::cout.flush();
}

ModelParams two_spin(double s, double v, double lambda = 10.0) {
  ModelParams p;
  p.spin = SpinSize(s);
  p.v = v;
  p.lambda = lambda;
  return p;
}

ModelParams system_only(double s, double lambda = 10.0) {
  ModelParams p = two_spin(s, 0.0, lambda);
  p.geometry = Geometry::system_only;
  return p;
}

// ---------------------------------------------------------------------------
// 9: property suites

Outcome properties() {
  Outcome o;

  double worst_comm = 0;
  for (int twice : {1, 2, 3, 8, 25, 80, 200}) {
    const SpinSize s = SpinSize::from_twice(twice);
    const auto m = spin_matrices(s);
    const Complex I(0, 1);
    const double scale = 1 + s.value() * s.value();
    worst_comm = std::max({worst_comm, (m.x * m.y - m.y * m.x - I * m.z).cwiseAbs().maxCoeff() / scale,
                           (m.y * m.z - m.z * m.y - I * m.x).cwiseAbs().maxCoeff() / scale,
                           (m.z * m.x - m.x * m.z - I * m.y).cwiseAbs().maxCoeff() / scale});
  }
  o.check(worst_comm < tol::commutator_rel, fmt("SU(2) commutators, max relative residual %.2e", worst_comm));

  double worst_herm = 0, worst_parity = 0;
  for (auto [S, v] : {std::pair{1.0, 3.0}, std::pair{3.0, 13.0}, std::pair{4.5, 7.0}, std::pair{10.0, 25.0}}) {
    const ModelParams p = two_spin(S, v);
    const RealOperator h = build_hamiltonian(p);
    worst_herm = std::max(worst_herm, (h - h.transpose()).cwiseAbs().maxCoeff());
    worst_parity = std::max(worst_parity, model_parity(p).commutator_residual(h));
  }
  const RealOperator hs = build_system_hamiltonian(SpinSize(20), 10);
  worst_herm = std::max(worst_herm, (hs - hs.transpose()).cwiseAbs().maxCoeff());
  worst_parity = std::max(worst_parity, model_parity(system_only(20)).commutator_residual(hs));
  o.check(worst_herm < tol::hermitian, fmt("Hermiticity, max |H - H^T| %.2e", worst_herm));
  o.check(worst_parity < tol::parity, fmt("[H, U_Z2], max residual %.2e", worst_parity));

  double worst_multi = 0;
  bool counts_ok = true;
  for (auto [S, v] : {std::pair{1.0, 5.0}, std::pair{1.5, 2.0}, std::pair{3.0, 13.0}, std::pair{4.0, 30.0}}) {
    const ModelParams p = two_spin(S, v);
    Eigen::SelfAdjointEigenSolver<RealOperator> es(build_hamiltonian(p), Eigen::EigenvaluesOnly);
    const SpectralData even = solve_model(p, Sector::even, {.vectors = false});
    const SpectralData odd = solve_model(p, Sector::odd, {.vectors = false});
    std::vector<double> merged(even.energies.begin(), even.energies.end());
    merged.insert(merged.end(), odd.energies.begin(), odd.energies.end());
    std::sort(merged.begin(), merged.end());
    counts_ok = counts_ok && static_cast<Index>(merged.size()) == es.eigenvalues().size();
    for (std::size_t k = 0; k < merged.size() && counts_ok; ++k)
      worst_multi = std::max(worst_multi, std::abs(merged[k] - es.eigenvalues()(static_cast<Index>(k))));
  }
  o.check(counts_ok && worst_multi < tol::multiset,
          fmt("sector multiset = full spectrum, max deviation %.2e", worst_multi));

  {
    // Diagonal ensemble against a brute-force time average of the evolved state.
    // Parity doublets split by ~1e-8 here, so the average must reach t ~ 1e10;
    // uniform random sample times over that horizon do it in 1e6 evaluations.
    const ModelParams p = two_spin(4, 7);
    const SpectralData sd = solve_model(p, Sector::full);
    const StateVector psi = initial_product_state(p, kPi / 2);
    std::vector<LocalObservable> obs;
    for (const char* n : {"Sx_s", "Sz_s", "Sz_e", "Sx_e"}) obs.push_back(LocalObservable::parse(n, p.spin));
    std::mt19937_64 rng(1618);
    std::uniform_real_distribution<double> ut(0.0, 1e10);
    std::vector<double> t(1000000);
    for (double& x : t) x = ut(rng);
    std::sort(t.begin(), t.end());
    const EvolutionSeries series = evolve_expectation(psi, sd, obs, t);
    DiagonalEnsemble de(sd, default_degeneracy_tol(p.spin));
    const OverlapVector c = overlaps(psi, sd);
    double worst = 0;
    for (std::size_t k = 0; k < obs.size(); ++k) {
      double mean = 0;
      for (double x : series.values[k]) mean += x;
      mean /= static_cast<double>(t.size());
      de.prepare(obs[k]);
      worst = std::max(worst, std::abs(mean - de.average(c, obs[k])));
    }
    o.check(worst < tol::de_oracle * 4, fmt("diagonal ensemble vs time average (S=4, 1e6 random t in [0, 1e10]), max |diff| %.2e, limit %.1e",
                                            worst, tol::de_oracle * 4));
  }

  {
    std::mt19937_64 rng(2718);
    std::uniform_real_distribution<double> uphi(-kPi, kPi), uz(-0.98, 0.98), uv(0, 30);
    double worst = 0;
    for (int k = 0; k < 100; ++k) {
      ModelParams p = two_spin(10, uv(rng));
      const ClassicalState::Canonical cc{uphi(rng), uz(rng), uphi(rng), uz(rng)};
      const ClassicalState x = ClassicalState::from_canonical(cc);
      const auto cart = eom(x, p);
      const auto can = eom_canonical(cc, p);
      auto phi_rate = [](const Eigen::Vector3d& m, const Eigen::Vector3d& dm) {
        return (m.x() * dm.y() - m.y() * dm.x()) / (m.x() * m.x() + m.y() * m.y());
      };
      worst = std::max({worst, std::abs(can.z_s - cart.m_s.z()), std::abs(can.z_e - cart.m_e.z()),
                        std::abs(can.phi_s - phi_rate(x.m_s, cart.m_s)),
                        std::abs(can.phi_e - phi_rate(x.m_e, cart.m_e))});
    }
    o.check(worst < tol::eom, fmt("canonical/Cartesian EOM, max residual %.2e", worst));
  }

  {
    std::mt19937_64 rng(31415);
    std::uniform_real_distribution<double> uphi(-kPi, kPi), uz(-1, 1);
    double worst = 0;
    for (double v : {0.0, 5.0, 13.0, 30.0}) {
      for (int k = 0; k < 10; ++k) {
        const auto x0 = ClassicalState::from_canonical(uphi(rng), uz(rng), uphi(rng), uz(rng));
        worst = std::max(worst, integrate(x0, two_spin(10, v), 1e3).max_energy_drift());
      }
    }
    o.check(worst < tol::drift, fmt("energy drift over T=1e3 (40 trajectories), max %.2e", worst));
  }

  {
    const ModelParams p = two_spin(10, 7);
    const SpectralData sd = solve_model(p, Sector::full);
    const StateVector psi = initial_product_state(p, kPi);
    std::vector<LocalObservable> obs{LocalObservable::parse("Sz_s", p.spin), LocalObservable::parse("Sz_e", p.spin)};
    const EvolutionSeries series = evolve_expectation(psi, sd, obs, time_grid(200, 0.5));
    double worst = 0;
    for (const auto& row : series.values)
      for (double x : row) worst = std::max(worst, std::abs(x));
    const auto curves = memory_curves(sd, std::vector<double>{kPi}, std::vector<std::string>{"Sz_s", "Sz_e"});
    for (const auto& cv : curves) worst = std::max(worst, std::abs(cv.points[0].value));
    o.check(worst < tol::symmetry_zero, fmt("phi0=pi parity zeros of Sz_s, Sz_e, max |value| %.2e", worst));
  }
  return o;
}

// ---------------------------------------------------------------------------
// 1: level statistics

Outcome level_statistics() {
  Outcome o;
  const std::vector<double> vs{0, 5, 10, 20, 30};
  std::vector<double> r;
  for (double v : vs) {
    const SpectralData sd = solve_model(two_spin(40, v), Sector::even, {.vectors = false});
    const auto st = level_spacing_ratios(std::span<const double>(sd.energies.data(), static_cast<std::size_t>(sd.size())));
    r.push_back(st.mean);
    o.notes.push_back(fmt("v=%-4g <r>=%.4f over %ld even-sector levels", v, st.mean, static_cast<long>(st.levels)));
  }
  o.check(std::abs(r[0] - tol::r_integrable) <= tol::r_integrable_slack,
          fmt("<r>(v=0)=%.4f within %.2f +/- %.2f", r[0], tol::r_integrable, tol::r_integrable_slack));
  int drops = 0;
  for (std::size_t k = 1; k < r.size(); ++k) drops += r[k] < r[k - 1];
  o.check(drops <= tol::r_allowed_drops && r.back() > r.front(),
          fmt("increasing trend: %d decreasing step(s), allowed %d", drops, tol::r_allowed_drops));
  const double top = *std::max_element(r.begin(), r.end());
  o.check(top <= tol::r_ceiling, fmt("max <r> %.4f <= %.2f", top, tol::r_ceiling));
  return o;
}

// ---------------------------------------------------------------------------
// 2: chaos map

Outcome chaos_map() {
  Outcome o;
  const double lambda = 10;
  auto lyap = [&](double v, double e) { return lyapunov_max(chaos_map_start(e, lambda), two_spin(10, v)); };
  const auto a = lyap(5, 1.0);
  o.check(a.rate > tol::lyap_chaotic_min,
          fmt("lyap(v=5, E=1) = %.4f +/- %.4f, need > %.2f", a.rate, a.stderr_, tol::lyap_chaotic_min));
  const auto b = lyap(5, 0.5);
  o.check(b.rate < tol::lyap_regular_max,
          fmt("lyap(v=5, E=0.5) = %.4f +/- %.4f, need < %.2f", b.rate, b.stderr_, tol::lyap_regular_max));
  double best = -1, best_v = 0, best_e = 0;
  for (int i = 0; i <= 20; ++i) {
    const double v = 1.5 * i;
    for (int j = 0; j <= 20; ++j) {
      const double e = 0.5 + 0.05 * j;
      const double rate = lyap(v, e).rate;
      if (rate > best) {
        best = rate;
        best_v = v;
        best_e = e;
      }
    }
  }
  o.check(best >= tol::lyap_grid_lo && best <= tol::lyap_grid_hi,
          fmt("grid max (21x21, E in [0.5,1.5], v in [0,30]) = %.4f at v=%g, E=%.2f; need [%.1f, %.1f]", best, best_v,
              best_e, tol::lyap_grid_lo, tol::lyap_grid_hi));
  return o;
}

// ---------------------------------------------------------------------------
// 3, 4: system-only spin

Outcome v0_memory(SpectralCache& cache) {
  Outcome o;
  const ModelParams p = system_only(2000);
  const auto sd = cache.get(p, Sector::full);
  const MemoryCurve c = memory_curve(*sd, default_phi_grid(9), "Sx_s");
  const double delta = memory_quantifier(c);
  std::string pts;
  for (const auto& pt : c.points) pts += fmt(" %.3f", pt.value / 2000);
  o.notes.push_back("Sx_s/S over phi0 = 0..pi:" + pts);
  o.check(delta >= tol::v0_memory_min, fmt("Delta_Sx_s(S=2000) = %.4f, need >= %.2f", delta, tol::v0_memory_min));
  return o;
}

Outcome eigenstate_dip(SpectralCache& cache) {
  Outcome o;
  const double S = 200;
  const ModelParams p = system_only(S);
  const auto sd = cache.get(p, Sector::full);
  const auto curve = eigenstate_expectation(*sd, LocalObservable(SpinComponent::x, Slot::system, p.spin, false))
                         .normalized(S);
  const auto it = std::min_element(curve.value.begin(), curve.value.end());
  const double e = curve.energy[static_cast<std::size_t>(it - curve.value.begin())];
  o.check(*it < tol::eig_dip_max, fmt("min <n|Sx|n>/S = %.4f, need < %.1f", *it, tol::eig_dip_max));
  o.check(std::abs(e - 1.0) < tol::eig_dip_window,
          fmt("located at e/(hS) = %.4f, need |e - 1| < %.2f", e, tol::eig_dip_window));
  return o;
}

// ---------------------------------------------------------------------------
// 5, 6: two-spin memory at S=50

std::vector<double> deltas(SpectralCache& cache, double v, const std::vector<std::string>& names) {
  const auto sd = cache.get(two_spin(50, v), Sector::full);
  const auto curves = memory_curves(*sd, default_phi_grid(9), names);
  std::vector<double> out;
  for (const auto& c : curves) out.push_back(memory_quantifier(c));
  return out;
}

Outcome memory_robustness(SpectralCache& cache) {
  Outcome o;
  const std::vector<std::string> names{"Sx_s", "Sz_s"};
  const auto d2 = deltas(cache, 2, names);
  const auto d18 = deltas(cache, 18, names);
  const auto d25 = deltas(cache, 25, names);
  o.notes.push_back(fmt("Delta_Sx_s: v=2 %.4f, v=18 %.4f, v=25 %.4f", d2[0], d18[0], d25[0]));
  o.notes.push_back(fmt("Delta_Sz_s: v=2 %.4f, v=18 %.4f, v=25 %.4f", d2[1], d18[1], d25[1]));
  const double ratio = d25[0] > 0 ? d2[0] / d25[0] : INFINITY;
  o.check(ratio > tol::sx_ratio_min, fmt("Delta_Sx_s(v=2)/Delta_Sx_s(v=25) = %.3f, need > %.1f", ratio, tol::sx_ratio_min));
  o.check(d2[1] > d18[1], fmt("Delta_Sz_s(v=2) = %.4f > Delta_Sz_s(v=18) = %.4f", d2[1], d18[1]));
  return o;
}

Outcome environment_proximity(SpectralCache& cache) {
  Outcome o;
  const double d0 = deltas(cache, 0, {"Sz_e"})[0];
  const double d4 = deltas(cache, 4, {"Sz_e"})[0];
  o.check(d0 < tol::env_decoupled_max, fmt("Delta_Sz_e(v=0) = %.2e, need < %.0e", d0, tol::env_decoupled_max));
  o.check(d4 > tol::env_coupled_min, fmt("Delta_Sz_e(v=4) = %.4f, need > %.2f", d4, tol::env_coupled_min));
  return o;
}

// ---------------------------------------------------------------------------
// 7: degeneracy shift

Outcome degeneracy_shift() {
  Outcome o;
  const double S = 30;
  auto scan = [&](double v) {
    const SpectralData sd = solve_model(two_spin(S, v), Sector::full, {.vectors = false});
    auto d = degeneracy_scan(std::span<const double>(sd.energies.data(), static_cast<std::size_t>(sd.size())),
                             tol::degeneracy_tol);
    for (double& e : d) e /= S;
    return d;
  };
  const auto weak = scan(5);
  const auto strong = scan(25);
  const double weak_min = weak.empty() ? INFINITY : *std::min_element(weak.begin(), weak.end());
  const double strong_min = strong.empty() ? INFINITY : *std::min_element(strong.begin(), strong.end());
  o.check(weak_min > tol::weak_coupling_floor,
          fmt("v=5: %zu degenerate pairs, lowest e/(hS) = %.4f, need > %.2f", weak.size(), weak_min,
              tol::weak_coupling_floor));
  o.check(strong_min < tol::strong_coupling_ceiling,
          fmt("v=25: %zu degenerate pairs, lowest e/(hS) = %.4f, need < %.1f", strong.size(), strong_min,
              tol::strong_coupling_ceiling));
  return o;
}

// ---------------------------------------------------------------------------
// 8: TWA against exact evolution

Outcome twa_cross_validation(SpectralCache& cache, std::uint64_t seed) {
  Outcome o;
  const double S = 50;
  const std::size_t n = 1600;
  const ModelParams p = two_spin(S, 2);
  const std::vector<double> t = time_grid(10, 0.1);

  std::vector<double> exact;
  {
    const auto sd = cache.get(p, Sector::full);
    std::vector<LocalObservable> obs{LocalObservable::parse("Sz_s", p.spin)};
    exact = evolve_expectation(initial_product_state(p, 0.0), *sd, obs, t).values[0];
  }

  const TwaEnsemble ens = twa_sample(0.0, p, n, seed);
  TwaOptions opts;
  opts.times = t;
  opts.window.reset();
  const TwaResult short_run = twa_expectation(ens, p, opts);
  double worst = 0, worst_t = 0;
  for (std::size_t k = 0; k < t.size(); ++k) {
    const double dev = std::abs(short_run.mean[1][k] - exact[k]) / S;
    if (dev > worst) {
      worst = dev;
      worst_t = t[k];
    }
  }
  o.check(worst <= tol::twa_max_dev,
          fmt("max |TWA - exact| Sz_s/S for t<=10 = %.4f at t=%.1f (n=%zu), need <= %.2f", worst, worst_t, n,
              tol::twa_max_dev));

  // Sampling error at the same n over the default long-time window.
  const TwaResult long_run = twa_expectation(ens, p, TwaOptions{});
  const double err = long_run.window_stderr_rms[1] / S;
  o.check(err >= tol::twa_stderr_lo && err <= tol::twa_stderr_hi,
          fmt("Monte-Carlo stderr/S of Sz_s (RMS over t in [100, 1000]) = %.4f, target %.3f, band [%.4f, %.3f]", err,
              tol::twa_stderr_target, tol::twa_stderr_lo, tol::twa_stderr_hi));
  return o;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Acceptance criteria for the ESQPT memory lab"};
  std::string cache_dir;
  std::uint64_t seed = 20240601;
  std::vector<int> only;
  app.add_option("--cache", cache_dir, "Spectral cache directory");
  app.add_option("--seed", seed, "TWA sampling seed");
  app.add_option("--only", only, "Run only these criteria (9 always runs)")->delimiter(',');
  CLI11_PARSE(app, argc, argv);

  SpectralCache cache(cache_dir);
  auto wanted = [&](int id) { return only.empty() || std::find(only.begin(), only.end(), id) != only.end(); };

  struct Criterion {
    int id;
    std::string title;
    std::function<Outcome()> run;
  };
  const std::vector<Criterion> criteria{
      {1, "level statistics, S=40 even sector", level_statistics},
      {2, "chaos map Lyapunov exponents", chaos_map},
      {3, "v=0 memory, system-only S=2000", [&] { return v0_memory(cache); }},
      {4, "eigenstate Sx dip at the ESQPT, system-only S=200", [&] { return eigenstate_dip(cache); }},
      {5, "memory robustness and loss, S=50", [&] { return memory_robustness(cache); }},
      {6, "environment proximity effect, S=50", [&] { return environment_proximity(cache); }},
      {7, "ESQPT shift in degeneracies, S=30", degeneracy_shift},
      {8, "TWA cross-validation, S=50 v=2 phi0=0", [&] { return twa_cross_validation(cache, seed); }},
  };

  using clock = std::chrono::steady_clock;
  int failures = 0;
  auto t0 = clock::now();
  const Outcome props = properties();
  report(9, "property suites", props, std::chrono::duration<double>(clock::now() - t0).count());
  failures += !props.pass;

  for (const auto& c : criteria) {
    if (!wanted(c.id)) continue;
    if (!props.pass) {
      Outcome skipped;
      skipped.check(false, "not evaluated: property suites failed");
      report(c.id, c.title, skipped, 0.0);
      ++failures;
      continue;
    }
    t0 = clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o.check(false, std::string("exception: ") + e.what());
    }
    report(c.id, c.title, o, std::chrono::duration<double>(clock::now() - t0).count());
    failures += !o.pass;
  }
  std::cout << (failures == 0 ? "all criteria passed" : fmt("%d criterion/criteria failed", failures)) << "\n";
  const auto s = cache.stats();
  std::cout << fmt("spectral cache: %llu computed, %llu loaded, %llu corrupt, %llu key mismatch\n",
                   static_cast<unsigned long long>(s.computed), static_cast<unsigned long long>(s.loaded),
                   static_cast<unsigned long long>(s.corrupt), static_cast<unsigned long long>(s.key_mismatch));
  return failures == 0 ? 0 : 1;
}
