#include "esqpt/twa.hpp"

#include "esqpt/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>

namespace esqpt {

namespace {

constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

constexpr std::size_t kChunk = 64;
constexpr std::size_t kObservables = 4;

Eigen::Vector3d unit(double phi, double z) {
  const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
  return {r * std::cos(phi), r * std::sin(phi), z};
}

// Per-chunk partial sums, combined in chunk order.
struct Partial {
  std::vector<double> sum;    // [obs * nt + t]
  std::vector<double> sumsq;
};

}  // namespace

std::uint64_t member_seed(std::uint64_t seed, std::uint64_t index) {
  return splitmix64(splitmix64(seed) ^ splitmix64(index + 0x632be59bd9b4e019ULL));
}

Eigen::Vector3d sample_direction(double phi, double z, SpinSize s, std::uint64_t mseed) {
  const Eigen::Vector3d d = unit(phi, z);
  // Tangent frame: azimuthal direction and d x azimuthal.
  const Eigen::Vector3d e1(-std::sin(phi), std::cos(phi), 0.0);
  const Eigen::Vector3d e2 = d.cross(e1);
  std::mt19937_64 rng(mseed);
  std::normal_distribution<double> gauss(0.0, 1.0 / std::sqrt(2.0 * s.value()));
  const double a = gauss(rng);
  const double b = gauss(rng);
  return (d + a * e1 + b * e2).normalized();
}

TwaEnsemble twa_sample(double phi0, const ModelParams& p, std::size_t n, std::uint64_t seed,
                       EnvPolarization env) {
  if (n == 0) throw std::invalid_argument("twa_sample: need n >= 1");
  p.validate();
  const double z0 = separatrix_z(phi0, p.lambda);
  const double phi_e = env == EnvPolarization::plus_x ? 0.0 : std::numbers::pi;
  const bool two_spin = p.geometry == Geometry::two_spin;
  TwaEnsemble ens;
  ens.n_samples = n;
  ens.seed = seed;
  ens.phi0 = phi0;
  ens.members.resize(n);
  ens.weights.assign(n, 1.0 / static_cast<double>(n));
  for (std::size_t i = 0; i < n; ++i) {
    // Two streams per member: even for the system, odd for the environment.
    ClassicalState& m = ens.members[i];
    m.m_s = sample_direction(phi0, z0, p.spin, member_seed(seed, 2 * i));
    m.m_e = two_spin ? sample_direction(phi_e, 0.0, p.spin, member_seed(seed, 2 * i + 1))
                     : unit(phi_e, 0.0);
  }
  return ens;
}

TwaResult twa_expectation(const TwaEnsemble& ens, const ModelParams& p, const TwaOptions& opts) {
  if (ens.members.empty()) throw std::invalid_argument("twa_expectation: empty ensemble");
  std::vector<double> times = opts.times;
  if (times.empty()) {
    for (int k = 0; k <= 1000; ++k) times.push_back(k);
  }
  if (times.front() < 0.0 || !std::is_sorted(times.begin(), times.end())) {
    throw std::invalid_argument("twa_expectation: times must be ascending and non-negative");
  }
  const std::size_t nt = times.size();
  std::vector<std::size_t> window_idx;
  if (opts.window) {
    const auto [lo, hi] = *opts.window;
    for (std::size_t k = 0; k < nt; ++k) {
      if (times[k] >= lo && times[k] <= hi) window_idx.push_back(k);
    }
    if (window_idx.empty()) {
      throw std::invalid_argument("twa_expectation: averaging window contains no grid times");
    }
  }

  const std::size_t n = ens.members.size();
  const double S = p.spin.value();
  const std::size_t nchunks = (n + kChunk - 1) / kChunk;
  std::vector<Partial> partial(nchunks);
  // Per-member window means, [member * 4 + obs].
  std::vector<double> member_window(window_idx.empty() ? 0 : n * kObservables);

  parallel_for(nchunks, opts.threads, [&](std::size_t c) {
    Partial& acc = partial[c];
    acc.sum.assign(kObservables * nt, 0.0);
    acc.sumsq.assign(kObservables * nt, 0.0);
    std::vector<double> series(kObservables * nt);
    const std::size_t end = std::min(n, (c + 1) * kChunk);
    for (std::size_t i = c * kChunk; i < end; ++i) {
      FlowIntegrator flow(p, opts.integrator);
      auto x = FlowIntegrator::pack(ens.members[i]);
      double t = 0.0;
      for (std::size_t k = 0; k < nt; ++k) {
        if (times[k] > t) flow.advance(x, t, times[k]);
        const double vals[kObservables] = {S * x[0], S * x[2], S * x[5], S * x[3]};
        for (std::size_t o = 0; o < kObservables; ++o) series[o * nt + k] = vals[o];
      }
      for (std::size_t j = 0; j < kObservables * nt; ++j) {
        acc.sum[j] += series[j];
        acc.sumsq[j] += series[j] * series[j];
      }
      if (!window_idx.empty()) {
        for (std::size_t o = 0; o < kObservables; ++o) {
          double s = 0.0;
          for (std::size_t k : window_idx) s += series[o * nt + k];
          member_window[i * kObservables + o] = s / static_cast<double>(window_idx.size());
        }
      }
    }
  });

  std::vector<double> sum(kObservables * nt, 0.0);
  std::vector<double> sumsq(kObservables * nt, 0.0);
  for (const Partial& acc : partial) {
    for (std::size_t j = 0; j < sum.size(); ++j) {
      sum[j] += acc.sum[j];
      sumsq[j] += acc.sumsq[j];
    }
  }

  const double dn = static_cast<double>(n);
  TwaResult r;
  r.times = times;
  r.names = {"Sx_s", "Sz_s", "Sz_e", "Sx_e"};
  r.n_samples = n;
  r.mean.assign(kObservables, std::vector<double>(nt));
  r.spread.assign(kObservables, std::vector<double>(nt));
  r.stderr_.assign(kObservables, std::vector<double>(nt));
  for (std::size_t o = 0; o < kObservables; ++o) {
    for (std::size_t k = 0; k < nt; ++k) {
      const double mean = sum[o * nt + k] / dn;
      const double var =
          n > 1 ? std::max(0.0, (sumsq[o * nt + k] - dn * mean * mean) / (dn - 1.0)) : 0.0;
      r.mean[o][k] = mean;
      r.spread[o][k] = std::sqrt(var);
      r.stderr_[o][k] = std::sqrt(var / dn);
    }
  }

  if (!window_idx.empty()) {
    r.window_points = window_idx.size();
    for (std::size_t o = 0; o < kObservables; ++o) {
      double m = 0.0;
      for (std::size_t i = 0; i < n; ++i) m += member_window[i * kObservables + o];
      m /= dn;
      double var = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        const double d = member_window[i * kObservables + o] - m;
        var += d * d;
      }
      var = n > 1 ? var / (dn - 1.0) : 0.0;
      r.long_time.push_back(m);
      r.long_time_stderr.push_back(std::sqrt(var / dn));
      double ms = 0.0;
      for (std::size_t k : window_idx) ms += r.stderr_[o][k] * r.stderr_[o][k];
      r.window_stderr_rms.push_back(std::sqrt(ms / static_cast<double>(window_idx.size())));
    }
  }
  return r;
}

}  // namespace esqpt
