#include "esqpt/experiments.hpp"

#include "esqpt/classical.hpp"
#include "esqpt/model.hpp"
#include "esqpt/parallel.hpp"
#include "esqpt/plot.hpp"
#include "esqpt/quench.hpp"
#include "esqpt/spectral.hpp"
#include "esqpt/spectral_cache.hpp"
#include "esqpt/twa.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <mutex>
#include <numbers>
#include <optional>
#include <ostream>
#include <set>

#ifndef ESQPT_VERSION
#define ESQPT_VERSION "unknown"
#endif

namespace esqpt {

namespace {

namespace fs = std::filesystem;
using Rows = std::vector<std::vector<double>>;
using json = nlohmann::json;

const std::set<std::string> kReservedKeys = {"config", "out", "cache", "seed", "threads", "plot"};

// Everything a subcommand needs once its keys are read. Tasks run in any
// order; rows are concatenated in task order.
struct Plan {
  std::vector<Column> columns;
  std::size_t tasks = 0;
  std::function<std::string(std::size_t)> label;
  std::function<Rows(std::size_t, json& notes)> run;
  std::optional<PlotSpec> plot;
  json notes = json::object();
};

struct Env {
  const Config& cfg;
  const RunOptions& opts;
  SpectralCache& cache;
};

// Flattened index -> per-axis indices, first axis outermost.
std::vector<std::size_t> unflatten(std::size_t i, const std::vector<std::size_t>& sizes) {
  std::vector<std::size_t> idx(sizes.size());
  for (std::size_t k = sizes.size(); k-- > 0;) {
    idx[k] = i % sizes[k];
    i /= sizes[k];
  }
  return idx;
}

std::size_t product(const std::vector<std::size_t>& sizes) {
  std::size_t n = 1;
  for (auto s : sizes) n *= s;
  return n;
}

std::string num(double x) { return format_number(x); }

EnvPolarization read_env(const Config& c) {
  const std::string s = c.get_string("env", "plus_x");
  if (s == "plus_x") return EnvPolarization::plus_x;
  if (s == "minus_x") return EnvPolarization::minus_x;
  throw ConfigError("env: expected plus_x or minus_x, got '" + s + "'");
}

Sector read_sector(const Config& c, const std::string& fallback) {
  try {
    return sector_from_string(c.get_string("sector", fallback));
  } catch (const std::exception& e) {
    throw ConfigError(std::string("sector: ") + e.what());
  }
}

SpinSize spin(double s) {
  try {
    return SpinSize(s);
  } catch (const std::exception& e) {
    throw ConfigError(std::string("S: ") + e.what());
  }
}

std::vector<SpinSize> spins(const Config& c, const std::vector<double>& fallback) {
  std::vector<SpinSize> out;
  for (double s : c.get_list("S", fallback)) out.push_back(spin(s));
  return out;
}

double positive(const Config& c, const std::string& key, double fallback) {
  const double v = c.get_double(key, fallback);
  if (!(v > 0.0)) throw ConfigError(key + ": must be positive");
  return v;
}

IntegratorOptions integrator_options(const Config& c) {
  IntegratorOptions o;
  o.rel_tol = positive(c, "rel_tol", o.rel_tol);
  o.abs_tol = positive(c, "abs_tol", o.abs_tol);
  return o;
}

ModelParams params(SpinSize s, double lambda, double v, Geometry g) {
  ModelParams p;
  p.spin = s;
  p.lambda = lambda;
  p.v = v;
  p.geometry = g;
  p.validate();
  return p;
}

// ---------------------------------------------------------------------------

Plan phase_portrait(const Env& env) {
  const auto energies = env.cfg.get_list("E", {-0.5, 0.0, 0.5, 0.9, 1.0, 1.1, 2.0, 3.5});
  const double lambda = env.cfg.get_double("lambda", 10.0);
  const double t_max = positive(env.cfg, "t_max", 30.0);
  IntegratorOptions io = integrator_options(env.cfg);
  io.sample_dt = positive(env.cfg, "sample_dt", 0.05);

  Plan plan;
  plan.columns = {{"E", unit::none}, {"t", unit::time}, {"phi_s", unit::angle}, {"z_s", unit::none}};
  plan.tasks = energies.size();
  plan.label = [=](std::size_t i) { return "E=" + num(energies[i]); };
  plan.run = [=](std::size_t i, json&) {
    const ModelParams p = params(SpinSize(1.0), lambda, 0.0, Geometry::system_only);
    const double z = energy_z(0.0, energies[i], lambda);
    const Trajectory tr = integrate(ClassicalState::from_canonical(0.0, z, 0.0, 0.0), p, t_max, io);
    Rows rows;
    for (std::size_t k = 0; k < tr.t.size(); ++k) {
      const auto c = tr.states[k].canonical();
      rows.push_back({energies[i], tr.t[k], c.phi_s, c.z_s});
    }
    return rows;
  };
  plan.plot = PlotSpec{PlotKind::scatter, "phi_s", {"z_s"}, "", "E", "system-spin trajectories"};
  plan.notes["start"] = "phi_s = 0, z_s >= 0 on the energy surface";
  return plan;
}

Plan eigobs(const Env& env) {
  const auto ss = spins(env.cfg, {200.0});
  const double lambda = env.cfg.get_double("lambda", 10.0);
  Plan plan;
  plan.columns = {{"S", unit::none}, {"n", unit::none}, {"e_over_hS", unit::none}, {"sx_over_S", unit::none}};
  plan.tasks = ss.size();
  plan.label = [=](std::size_t i) { return "S=" + num(ss[i].value()); };
  plan.run = [=, &env](std::size_t i, json&) {
    const ModelParams p = params(ss[i], lambda, 0.0, Geometry::system_only);
    const auto sd = env.cache.get(p, Sector::full);
    const auto curve = eigenstate_expectation(*sd, LocalObservable::parse("Sx", ss[i], false)).normalized(ss[i].value());
    Rows rows;
    for (std::size_t n = 0; n < curve.energy.size(); ++n) {
      rows.push_back({ss[i].value(), static_cast<double>(n), curve.energy[n], curve.value[n]});
    }
    return rows;
  };
  plan.plot = PlotSpec{PlotKind::scatter, "e_over_hS", {"sx_over_S"}, "", "S", "eigenstate Sx / S"};
  return plan;
}

Plan memory_v0(const Env& env) {
  const auto ss = spins(env.cfg, {125.0, 250.0, 500.0, 1000.0, 2000.0});
  const auto phis = env.cfg.get_list("phi0", default_phi_grid(9));
  const double lambda = env.cfg.get_double("lambda", 10.0);
  const double tol = env.cfg.get_double("degeneracy_tol", -1.0);
  Plan plan;
  plan.columns = {{"S", unit::none},         {"phi0", unit::angle},      {"sx_over_S", unit::none},
                  {"sz_over_S", unit::none}, {"e_over_hS", unit::none}};
  plan.tasks = ss.size();
  plan.label = [=](std::size_t i) { return "S=" + num(ss[i].value()); };
  plan.run = [=, &env](std::size_t i, json& notes) {
    const ModelParams p = params(ss[i], lambda, 0.0, Geometry::system_only);
    const auto sd = env.cache.get(p, Sector::full);
    const std::string names[] = {"Sx", "Sz"};
    MemoryOptions mo;
    mo.degeneracy_tol = tol;
    const auto curves = memory_curves(*sd, phis, names, mo);
    const double S = ss[i].value();
    notes["delta_sx"] = memory_quantifier(curves[0]);
    notes["delta_sz"] = memory_quantifier(curves[1]);
    Rows rows;
    for (std::size_t k = 0; k < phis.size(); ++k) {
      rows.push_back({S, phis[k], curves[0].points[k].value / S, curves[1].points[k].value / S,
                      curves[0].points[k].energy / S});
    }
    return rows;
  };
  plan.plot = PlotSpec{PlotKind::line, "S", {"sx_over_S"}, "", "phi0", "long-time Sx / S, system only"};
  return plan;
}

Plan poincare(const Env& env) {
  const auto vs = env.cfg.get_list("v", {5.0, 15.0});
  const auto es = env.cfg.get_list("E", {1.0, 1.05});
  const double lambda = env.cfg.get_double("lambda", 10.0);
  PoincareOptions po;
  po.plane = env.cfg.get_double("plane", po.plane);
  po.crossings = static_cast<std::size_t>(env.cfg.get_int("crossings", static_cast<std::int64_t>(po.crossings)));
  po.t_max = positive(env.cfg, "t_max", po.t_max);
  po.integrator = integrator_options(env.cfg);
  const std::vector<std::size_t> sizes = {vs.size(), es.size()};

  Plan plan;
  plan.columns = {{"v", unit::energy}, {"E", unit::none}, {"k", unit::none}, {"t", unit::time},
                  {"phi_s", unit::angle}, {"z_s", unit::none}};
  plan.tasks = product(sizes);
  plan.label = [=](std::size_t i) {
    const auto ix = unflatten(i, sizes);
    return "v=" + num(vs[ix[0]]) + " E=" + num(es[ix[1]]);
  };
  plan.run = [=](std::size_t i, json& notes) {
    const auto ix = unflatten(i, sizes);
    const ModelParams p = params(SpinSize(1.0), lambda, vs[ix[0]], Geometry::two_spin);
    const auto sec = poincare_section(chaos_map_start(es[ix[1]], lambda), p, po);
    notes["complete"] = sec.complete;
    notes["crossings"] = sec.points.size();
    Rows rows;
    for (std::size_t k = 0; k < sec.points.size(); ++k) {
      rows.push_back({vs[ix[0]], es[ix[1]], static_cast<double>(k), sec.times[k], sec.points[k].first,
                      sec.points[k].second});
    }
    return rows;
  };
  plan.plot = PlotSpec{PlotKind::scatter, "phi_s", {"z_s"}, "", "v", "section z_e = " + num(po.plane)};
  plan.notes["crossing_direction"] = "dz_e/dt > 0";
  return plan;
}

Plan lyapunov_map(const Env& env) {
  std::vector<double> e_default(21), v_default(21);
  for (int k = 0; k < 21; ++k) {
    e_default[static_cast<std::size_t>(k)] = 0.5 + 0.05 * k;
    v_default[static_cast<std::size_t>(k)] = 1.5 * k;
  }
  const auto vs = env.cfg.get_list("v", v_default);
  const auto es = env.cfg.get_list("E", e_default);
  const double lambda = env.cfg.get_double("lambda", 10.0);
  LyapunovOptions lo;
  lo.duration = positive(env.cfg, "duration", lo.duration);
  lo.renorm_interval = positive(env.cfg, "renorm_interval", lo.renorm_interval);
  lo.transient = env.cfg.get_double("transient", lo.transient);
  lo.blocks = static_cast<int>(env.cfg.get_int("blocks", lo.blocks));
  lo.integrator = integrator_options(env.cfg);
  const std::vector<std::size_t> sizes = {vs.size(), es.size()};

  Plan plan;
  plan.columns = {{"v", unit::energy}, {"E", unit::none}, {"lyap", unit::rate}, {"lyap_stderr", unit::rate}};
  plan.tasks = product(sizes);
  plan.label = [=](std::size_t i) {
    const auto ix = unflatten(i, sizes);
    return "v=" + num(vs[ix[0]]) + " E=" + num(es[ix[1]]);
  };
  plan.run = [=](std::size_t i, json&) {
    const auto ix = unflatten(i, sizes);
    const ModelParams p = params(SpinSize(1.0), lambda, vs[ix[0]], Geometry::two_spin);
    const auto r = lyapunov_max(chaos_map_start(es[ix[1]], lambda), p, lo);
    return Rows{{vs[ix[0]], es[ix[1]], r.rate, r.stderr_}};
  };
  plan.plot = PlotSpec{PlotKind::heatmap, "v", {"E"}, "lyap", std::nullopt, "maximal Lyapunov exponent"};
  plan.notes["duration"] = lo.duration;
  plan.notes["renorm_interval"] = lo.renorm_interval;
  plan.notes["transient"] = lo.transient;
  plan.notes["blocks"] = lo.blocks;
  plan.notes["start"] = "phi_s = 0, z_s >= 0 with E(phi_s, z_s) = E, (phi_e, z_e) = (0, 0)";
  return plan;
}

Plan level_stats(const Env& env) {
  const auto ss = spins(env.cfg, {40.0});
  const auto vs = env.cfg.get_list("v", {0.0, 5.0, 10.0, 20.0, 30.0});
  const double lambda = env.cfg.get_double("lambda", 10.0);
  const Sector sector = read_sector(env.cfg, "even");
  std::optional<EnergyWindow> window;
  if (env.cfg.has("window_lo") || env.cfg.has("window_hi")) {
    window = EnergyWindow{env.cfg.get_double("window_lo", -1e300), env.cfg.get_double("window_hi", 1e300)};
  }
  const std::vector<std::size_t> sizes = {ss.size(), vs.size()};

  Plan plan;
  plan.columns = {{"S", unit::none}, {"v", unit::energy}, {"mean_r", unit::none}, {"n_levels", unit::none}};
  plan.tasks = product(sizes);
  plan.label = [=](std::size_t i) {
    const auto ix = unflatten(i, sizes);
    return "S=" + num(ss[ix[0]].value()) + " v=" + num(vs[ix[1]]);
  };
  plan.run = [=](std::size_t i, json& notes) {
    const auto ix = unflatten(i, sizes);
    const ModelParams p = params(ss[ix[0]], lambda, vs[ix[1]], Geometry::two_spin);
    const SpectralData sd = solve_model(p, sector, SolveOptions{false});
    std::optional<EnergyWindow> w;
    // The window is given in units of h S.
    if (window) w = EnergyWindow{window->lo * p.spin.value(), window->hi * p.spin.value()};
    const std::vector<double> e(sd.energies.data(), sd.energies.data() + sd.energies.size());
    const LevelStats st = level_spacing_ratios(e, w);
    notes["zero_spacings"] = st.zero_spacings;
    return Rows{{ss[ix[0]].value(), vs[ix[1]], st.mean, static_cast<double>(st.levels)}};
  };
  plan.plot = PlotSpec{PlotKind::line, "v", {"mean_r"}, "", "S", "mean level-spacing ratio"};
  plan.notes["sector"] = to_string(sector);
  return plan;
}

Plan quench_trace(const Env& env) {
  const auto ss = spins(env.cfg, {20.0});
  const auto vs = env.cfg.get_list("v", {2.0});
  const auto phis = env.cfg.get_list("phi0", {0.0, std::numbers::pi / 2, std::numbers::pi});
  const double lambda = env.cfg.get_double("lambda", 10.0);
  const double t_max = env.cfg.get_double("t_max", 100.0);
  const double dt = positive(env.cfg, "dt", 0.1);
  const EnvPolarization pol = read_env(env.cfg);
  const auto times = time_grid(t_max, dt);
  const std::vector<std::size_t> sizes = {ss.size(), vs.size(), phis.size()};

  Plan plan;
  plan.columns = {{"S", unit::none},     {"v", unit::energy},    {"phi0", unit::angle},
                  {"t", unit::time},     {"sx_s", unit::none},   {"sz_s", unit::none},
                  {"sz_e", unit::none},  {"sx_e", unit::none},   {"norm", unit::none},
                  {"e_over_hS", unit::none}};
  plan.tasks = product(sizes);
  plan.label = [=](std::size_t i) {
    const auto ix = unflatten(i, sizes);
    return "S=" + num(ss[ix[0]].value()) + " v=" + num(vs[ix[1]]) + " phi0=" + num(phis[ix[2]]);
  };
  plan.run = [=, &env](std::size_t i, json&) {
    const auto ix = unflatten(i, sizes);
    const SpinSize s = ss[ix[0]];
    const double S = s.value();
    const ModelParams p = params(s, lambda, vs[ix[1]], Geometry::two_spin);
    const auto sd = env.cache.get(p, Sector::full);
    const std::vector<LocalObservable> obs = {
        LocalObservable(SpinComponent::x, Slot::system, s), LocalObservable(SpinComponent::z, Slot::system, s),
        LocalObservable(SpinComponent::z, Slot::environment, s),
        LocalObservable(SpinComponent::x, Slot::environment, s)};
    const auto series = evolve_expectation(initial_product_state(p, phis[ix[2]], pol), *sd, obs, times);
    Rows rows;
    for (std::size_t k = 0; k < times.size(); ++k) {
      rows.push_back({S, vs[ix[1]], phis[ix[2]], times[k], series.values[0][k] / S, series.values[1][k] / S,
                      series.values[2][k] / S, series.values[3][k] / S, series.norm[k],
                      series.energy.empty() ? std::nan("") : series.energy[k] / S});
    }
    return rows;
  };
  plan.plot = PlotSpec{PlotKind::line, "t", {"sz_s"}, "", "phi0", "quench trace"};
  plan.notes["env"] = pol == EnvPolarization::plus_x ? "plus_x" : "minus_x";
  return plan;
}

const std::vector<std::string> kTwoSpinObservables = {"Sx_s", "Sz_s", "Sz_e", "Sx_e"};

Plan memory_sweep(const Env& env) {
  const auto ss = spins(env.cfg, {20.0});
  const auto vs = env.cfg.get_list("v", {0.0, 2.0, 13.0, 20.0});
  const auto phis = env.cfg.get_list("phi0", default_phi_grid(9));
  const double lambda = env.cfg.get_double("lambda", 10.0);
  MemoryOptions mo;
  mo.env = read_env(env.cfg);
  mo.degeneracy_tol = env.cfg.get_double("degeneracy_tol", -1.0);
  const std::vector<std::size_t> sizes = {ss.size(), vs.size()};

  Plan plan;
  plan.columns = {{"S", unit::none},    {"v", unit::energy},   {"phi0", unit::angle},
                  {"sx_s", unit::none}, {"sz_s", unit::none},  {"sz_e", unit::none},
                  {"sx_e", unit::none}, {"e_over_hS", unit::none}};
  plan.tasks = product(sizes);
  plan.label = [=](std::size_t i) {
    const auto ix = unflatten(i, sizes);
    return "S=" + num(ss[ix[0]].value()) + " v=" + num(vs[ix[1]]);
  };
  plan.run = [=, &env](std::size_t i, json& notes) {
    const auto ix = unflatten(i, sizes);
    const double S = ss[ix[0]].value();
    const ModelParams p = params(ss[ix[0]], lambda, vs[ix[1]], Geometry::two_spin);
    const auto sd = env.cache.get(p, Sector::full);
    const auto curves = memory_curves(*sd, phis, kTwoSpinObservables, mo);
    for (const auto& c : curves) notes["delta_" + c.observable] = memory_quantifier(c);
    Rows rows;
    for (std::size_t k = 0; k < phis.size(); ++k) {
      std::vector<double> row = {S, vs[ix[1]], phis[k]};
      for (const auto& c : curves) row.push_back(c.points[k].value / S);
      row.push_back(curves[0].points[k].energy / S);
      rows.push_back(std::move(row));
    }
    return rows;
  };
  plan.plot = PlotSpec{PlotKind::line, "phi0", {"sx_s"}, "", "v", "long-time Sx_s / S"};
  return plan;
}

Plan env_memory(const Env& env) {
  const auto ss = spins(env.cfg, {20.0});
  const auto vs = env.cfg.get_list("v", {0.0, 2.0, 4.0, 8.0, 12.0, 16.0, 20.0});
  const auto phis = env.cfg.get_list("phi0", default_phi_grid(9));
  const double lambda = env.cfg.get_double("lambda", 10.0);
  MemoryOptions mo;
  mo.env = read_env(env.cfg);
  mo.degeneracy_tol = env.cfg.get_double("degeneracy_tol", -1.0);
  const std::vector<std::size_t> sizes = {ss.size(), vs.size()};

  Plan plan;
  plan.columns = {{"S", unit::none},          {"v", unit::energy},        {"delta_sx_s", unit::none},
                  {"delta_sz_s", unit::none}, {"delta_sz_e", unit::none}, {"delta_sx_e", unit::none}};
  plan.tasks = product(sizes);
  plan.label = [=](std::size_t i) {
    const auto ix = unflatten(i, sizes);
    return "S=" + num(ss[ix[0]].value()) + " v=" + num(vs[ix[1]]);
  };
  plan.run = [=, &env](std::size_t i, json&) {
    const auto ix = unflatten(i, sizes);
    if (phis.empty()) throw std::invalid_argument("phi0 grid is empty");
    const ModelParams p = params(ss[ix[0]], lambda, vs[ix[1]], Geometry::two_spin);
    const auto sd = env.cache.get(p, Sector::full);
    const auto curves = memory_curves(*sd, phis, kTwoSpinObservables, mo);
    std::vector<double> row = {ss[ix[0]].value(), vs[ix[1]]};
    for (const auto& c : curves) row.push_back(memory_quantifier(c));
    return Rows{row};
  };
  plan.plot = PlotSpec{PlotKind::line, "v", {"delta_sz_e", "delta_sx_e"}, "", "S", "environment memory"};
  return plan;
}

Plan degeneracy_scan_plan(const Env& env) {
  const SpinSize s = spin(env.cfg.get_double("S", 30.0));
  std::vector<double> v_default(31);
  for (int k = 0; k <= 30; ++k) v_default[static_cast<std::size_t>(k)] = k;
  const auto vs = env.cfg.get_list("v", v_default);
  const double lambda = env.cfg.get_double("lambda", 10.0);
  const double tol = positive(env.cfg, "tol", kDefaultDegeneracyTolerance);

  Plan plan;
  plan.columns = {{"v", unit::energy}, {"e_over_hS", unit::none}};
  plan.tasks = vs.size();
  plan.label = [=](std::size_t i) { return "v=" + num(vs[i]); };
  plan.run = [=](std::size_t i, json& notes) {
    const ModelParams p = params(s, lambda, vs[i], Geometry::two_spin);
    const SpectralData sd = solve_model(p, Sector::full, SolveOptions{false});
    const std::vector<double> e(sd.energies.data(), sd.energies.data() + sd.energies.size());
    const auto deg = degeneracy_scan(e, tol);
    notes["pairs"] = deg.size();
    Rows rows;
    for (double x : deg) rows.push_back({vs[i], x / s.value()});
    return rows;
  };
  plan.plot = PlotSpec{PlotKind::scatter, "v", {"e_over_hS"}, "", std::nullopt, "degenerate levels"};
  plan.notes["S"] = s.value();
  plan.notes["tol"] = tol;
  return plan;
}

Plan twa_compare(const Env& env) {
  const SpinSize s = spin(env.cfg.get_double("S", 50.0));
  const double v = env.cfg.get_double("v", 2.0);
  const auto phis = env.cfg.get_list("phi0", {0.0});
  const double lambda = env.cfg.get_double("lambda", 10.0);
  const auto samples = env.cfg.get_int("samples", 1600);
  if (samples < 1) throw ConfigError("samples: need at least one");
  const double t_max = env.cfg.get_double("t_max", 10.0);
  const double dt = positive(env.cfg, "dt", 0.1);
  const double w_lo = env.cfg.get_double("window_lo", 100.0);
  const double w_hi = env.cfg.get_double("window_hi", 1000.0);
  const bool exact = env.cfg.get_int("exact", 1) != 0;
  const EnvPolarization pol = read_env(env.cfg);
  TwaOptions to;
  to.times = time_grid(t_max, dt);
  to.integrator = integrator_options(env.cfg);
  to.threads = 1;  // parallelism is across phi0 tasks
  if (w_lo <= t_max) to.window = std::pair{w_lo, std::min(w_hi, t_max)};
  else to.window.reset();
  const std::uint64_t seed = env.opts.seed;

  Plan plan;
  plan.columns = {{"phi0", unit::angle},       {"t", unit::time},
                  {"exact_sz_s", unit::none},  {"twa_sz_s", unit::none}, {"twa_sz_s_stderr", unit::none},
                  {"exact_sx_s", unit::none},  {"twa_sx_s", unit::none}, {"twa_sx_s_stderr", unit::none}};
  plan.tasks = phis.size();
  plan.label = [=](std::size_t i) { return "phi0=" + num(phis[i]); };
  plan.run = [=, &env](std::size_t i, json& notes) {
    const double S = s.value();
    const ModelParams p = params(s, lambda, v, Geometry::two_spin);
    const auto ens = twa_sample(phis[i], p, static_cast<std::size_t>(samples), seed, pol);
    const TwaResult tr = twa_expectation(ens, p, to);
    std::vector<double> ex_z(tr.times.size(), std::nan("")), ex_x(tr.times.size(), std::nan(""));
    if (exact) {
      const auto sd = env.cache.get(p, Sector::full);
      const std::vector<LocalObservable> obs = {LocalObservable(SpinComponent::z, Slot::system, s),
                                                LocalObservable(SpinComponent::x, Slot::system, s)};
      const auto series = evolve_expectation(initial_product_state(p, phis[i], pol), *sd, obs, tr.times);
      ex_z = series.values[0];
      ex_x = series.values[1];
    }
    if (!tr.long_time.empty()) {
      for (std::size_t o = 0; o < tr.names.size(); ++o) {
        notes["long_time"][tr.names[o]] = tr.long_time[o] / S;
        notes["long_time_stderr"][tr.names[o]] = tr.long_time_stderr[o] / S;
        notes["window_stderr_rms"][tr.names[o]] = tr.window_stderr_rms[o] / S;
      }
    }
    Rows rows;
    for (std::size_t k = 0; k < tr.times.size(); ++k) {
      rows.push_back({phis[i], tr.times[k], ex_z[k] / S, tr.mean[1][k] / S, tr.stderr_[1][k] / S, ex_x[k] / S,
                      tr.mean[0][k] / S, tr.stderr_[0][k] / S});
    }
    return rows;
  };
  plan.plot = PlotSpec{PlotKind::line, "t", {"exact_sz_s", "twa_sz_s"}, "", "phi0", "TWA vs exact"};
  plan.notes["S"] = s.value();
  plan.notes["v"] = v;
  plan.notes["samples"] = samples;
  if (to.window) plan.notes["window"] = {to.window->first, to.window->second};
  return plan;
}

struct Entry {
  const char* name;
  Plan (*make)(const Env&);
  const char* keys;
};

const Entry kEntries[] = {
    {"phase-portrait", phase_portrait, "E (list), lambda, t_max, sample_dt, rel_tol, abs_tol"},
    {"eigobs", eigobs, "S (list), lambda"},
    {"memory-v0", memory_v0, "S (list), phi0 (list), lambda, degeneracy_tol"},
    {"poincare", poincare, "v (list), E (list), lambda, plane, crossings, t_max, rel_tol, abs_tol"},
    {"lyapunov-map", lyapunov_map,
     "v (list), E (list), lambda, duration, renorm_interval, transient, blocks, rel_tol, abs_tol"},
    {"level-stats", level_stats, "S (list), v (list), lambda, sector, window_lo, window_hi (units of hS)"},
    {"quench-trace", quench_trace, "S (list), v (list), phi0 (list), lambda, t_max, dt, env"},
    {"memory-sweep", memory_sweep, "S (list), v (list), phi0 (list), lambda, env, degeneracy_tol"},
    {"env-memory", env_memory, "S (list), v (list), phi0 (list), lambda, env, degeneracy_tol"},
    {"degeneracy-scan", degeneracy_scan_plan, "S, v (list), lambda, tol"},
    {"twa-compare", twa_compare,
     "S, v, phi0 (list), lambda, samples, t_max, dt, window_lo, window_hi, exact, env, rel_tol, abs_tol"},
};

const Entry& find_entry(const std::string& name) {
  for (const auto& e : kEntries) {
    if (name == e.name) return e;
  }
  throw ConfigError("unknown subcommand '" + name + "'");
}

std::string hex64(std::uint64_t x) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(x));
  return buf;
}

}  // namespace

const std::vector<std::string>& subcommand_names() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> out;
    for (const auto& e : kEntries) out.emplace_back(e.name);
    return out;
  }();
  return names;
}

bool is_subcommand(const std::string& name) {
  const auto& n = subcommand_names();
  return std::find(n.begin(), n.end(), name) != n.end();
}

std::string subcommand_help(const std::string& subcommand) { return find_entry(subcommand).keys; }

RunReport run_experiment(const std::string& subcommand, const Config& config, const RunOptions& opts) {
  const Entry& entry = find_entry(subcommand);
  const auto started = std::chrono::steady_clock::now();
  SpectralCache cache(opts.cache_dir);
  const Env env{config, opts, cache};

  Plan plan = entry.make(env);
  for (const auto& key : config.unused_keys()) {
    if (!kReservedKeys.count(key)) {
      throw ConfigError("unknown key '" + key + "' for " + subcommand + " (accepted: " + entry.keys + ")");
    }
  }

  std::error_code ec;
  fs::create_directories(opts.out_dir, ec);
  if (ec || !fs::is_directory(opts.out_dir)) {
    throw OutputError("cannot create output directory " + opts.out_dir.string());
  }
  const fs::path probe = opts.out_dir / (".esqpt-write-probe-" + subcommand);
  try {
    atomic_write(probe, "");
    fs::remove(probe);
  } catch (const std::exception&) {
    throw OutputError("output directory " + opts.out_dir.string() + " is not writable");
  }

  std::vector<Rows> results(plan.tasks);
  std::vector<std::string> errors(plan.tasks);
  std::vector<json> notes(plan.tasks, json::object());
  std::mutex log_mutex;
  std::size_t done = 0;
  parallel_for(plan.tasks, opts.threads, [&](std::size_t i) {
    try {
      results[i] = plan.run(i, notes[i]);
    } catch (const std::exception& e) {
      errors[i] = e.what();
    }
    if (opts.log) {
      std::lock_guard lock(log_mutex);
      ++done;
      *opts.log << "[" << subcommand << " " << done << "/" << plan.tasks << "] " << plan.label(i)
                << (errors[i].empty() ? "" : " FAILED: " + errors[i]) << "\n";
      opts.log->flush();
    }
  });

  RunReport report;
  report.table = ResultTable(plan.columns);
  json task_notes = json::array();
  for (std::size_t i = 0; i < plan.tasks; ++i) {
    for (auto& row : results[i]) report.table.add_row(std::move(row));
    if (!errors[i].empty()) report.failures.push_back(plan.label(i) + ": " + errors[i]);
    if (!notes[i].empty()) task_notes.push_back({{"task", plan.label(i)}, {"notes", notes[i]}});
  }

  const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  json& meta = report.table.metadata;
  meta["subcommand"] = subcommand;
  meta["version"] = ESQPT_VERSION;
  meta["config"] = config.serialize();
  meta["config_hash"] = hex64(config.hash());
  meta["seed"] = opts.seed;
  meta["threads"] = opts.threads;
  meta["cache_dir"] = opts.cache_dir.string();
  meta["wall_time_s"] = wall;
  meta["tasks"] = plan.tasks;
  meta["failed_tasks"] = report.failures.size();
  meta["notes"] = plan.notes;
  meta["task_notes"] = task_notes;
  const auto stats = cache.stats();
  meta["spectral_cache"] = {{"computed", stats.computed}, {"loaded", stats.loaded}, {"corrupt", stats.corrupt},
                            {"key_mismatch", stats.key_mismatch}};

  const fs::path csv = opts.out_dir / (subcommand + ".csv");
  write_table(report.table, csv);
  report.files.push_back(csv);
  report.files.push_back(fs::path(csv).replace_extension(".meta.json"));
  if (opts.plot && plan.plot && report.table.size() > 0) {
    const fs::path svg = opts.out_dir / (subcommand + ".svg");
    write_svg(report.table, *plan.plot, svg);
    report.files.push_back(svg);
  }
  const fs::path err_log = opts.out_dir / (subcommand + ".errors.log");
  if (!report.failures.empty()) {
    std::string text;
    for (const auto& f : report.failures) text += f + "\n";
    atomic_write(err_log, text);
    report.files.push_back(err_log);
    report.exit_code = 2;
  } else {
    fs::remove(err_log, ec);
  }
  return report;
}

}  // namespace esqpt
