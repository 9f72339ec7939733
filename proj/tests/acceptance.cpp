// Acceptance run: one line per criterion, nonzero exit when any fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <limits>
#include <memory>
#include <random>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "wavectl/propagation.hpp"
#include "wavectl/scenario.hpp"

using namespace wavectl;
namespace fs = std::filesystem;

namespace {

using cd = std::complex<double>;
using Clock = std::chrono::steady_clock;

struct Outcome {
  bool pass = true;
  std::string text;

  // Appends "label measured <op> bound" and folds the verdict in.
  void le(const std::string& label, double measured, double bound) {
    add(label, measured, "<", bound, measured < bound);
  }
  void ge(const std::string& label, double measured, double bound) {
    add(label, measured, ">=", bound, measured >= bound);
  }
  void note(const std::string& s) {
    if (!text.empty()) text += ", ";
    text += s;
  }
  void require(bool ok, const std::string& why) {
    if (!ok) {
      pass = false;
      note(why);
    }
  }

 private:
  void add(const std::string& label, double measured, const char* op, double bound, bool ok) {
    char buf[160];
    std::snprintf(buf, sizeof buf, "%s %.3e %s %.0e%s", label.c_str(), measured, op, bound, ok ? "" : " (!)");
    note(buf);
    pass = pass && ok;
  }
};

int failures = 0;

void criterion(const std::string& name, const std::function<Outcome()>& body) {
  const auto start = Clock::now();
  Outcome o;
  try {
    o = body();
  } catch (const std::exception& e) {
    o.pass = false;
    o.note(std::string("error: ") + e.what());
  }
  const double secs = std::chrono::duration<double>(Clock::now() - start).count();
  std::printf("[%s] %-26s %s (%.1f s)\n", o.pass ? "PASS" : "FAIL", name.c_str(), o.text.c_str(), secs);
  std::fflush(stdout);
  if (!o.pass) ++failures;
}

double seconds_since(Clock::time_point start) { return std::chrono::duration<double>(Clock::now() - start).count(); }

std::shared_ptr<const ShapeFunction> shape_on(const Potential& p, const Grid1D& g) {
  return std::make_shared<const ShapeFunction>(extract_shape(ground_state(p, g, 5e-3, 1e-12)));
}

std::shared_ptr<const ClassicalTrajectory> path(const Potential& p, double x0, double v0, double dt, double T) {
  return std::make_shared<const ClassicalTrajectory>(integrate_trajectory(p, x0, v0, dt, T));
}

std::shared_ptr<const EnvelopeTrajectory> envelope(const Potential& p, const ShapeFunction& shape,
                                                   const ClassicalTrajectory& c, double scale) {
  return std::make_shared<const EnvelopeTrajectory>(integrate_envelope(p, shape, c, scale * shape.sigma0, 0.0));
}

// Both fields shifted to vanish at the node nearest x_ref, then compared.
double pinned_gap(const Grid1D& g, const RealField& a, const RealField& b, double x_ref) {
  return (gauge_fix(g, a, x_ref) - gauge_fix(g, b, x_ref)).abs().maxCoeff();
}

double masked_gap(const RealField& a, const RealField& b, const Mask& m) {
  double worst = 0;
  for (Index j = 0; j < a.size(); ++j) {
    if (m[j]) worst = std::max(worst, std::abs(a[j] - b[j]));
  }
  return worst;
}

// Time of the third return of the center to its starting turning point.
double three_periods(const Potential& p, double x0) {
  const ClassicalTrajectory c = integrate_trajectory(p, x0, 0.0, 1e-4, 40.0);
  int returns = 0;
  const auto& s = c.samples();
  for (std::size_t k = 1; k < s.size(); ++k) {
    if (s[k - 1].v > 0 && s[k].v <= 0 && ++returns == 3) {
      // Linear interpolation of the velocity zero.
      return s[k - 1].t + (s[k].t - s[k - 1].t) * s[k - 1].v / (s[k - 1].v - s[k].v);
    }
  }
  fail(ErrorCode::no_convergence, "no third turning point within t = 40");
}

const CheckRecord* find(const Report& r, const std::string& name) {
  for (const auto& c : r.checks) {
    if (c.name == name) return &c;
  }
  return nullptr;
}

// Shared by the controlled quartic criteria and the whole-suite identities.
std::vector<std::pair<std::string, std::optional<Report>>> collected;

Report run_collected(const Scenario& s, const fs::path& out) {
  RunOptions o;
  o.out_dir = out / s.name;
  fs::remove_all(*o.out_dir);
  try {
    Report r = run_scenario(s, o);
    collected.emplace_back(s.name, r);
    return r;
  } catch (const Error&) {
    collected.emplace_back(s.name, read_report(*o.out_dir));
    throw;
  }
}

Scenario controlled_quartic(const std::string& name, const char* state, const char* law) {
  Scenario s = preset_scenario(std::string("quartic-") + state + "-on");
  s.name = name;
  s.grid.n_points = 2048;
  s.grid.x_min = -12;
  s.grid.x_max = 12;
  s.initial.x0 = 1.0;
  s.initial.v0 = 0.0;
  if (std::string(state) == "squeezed") s.initial.sigma_scale = 1.5;
  s.run.dt = 5e-4;
  s.run.T = three_periods(seed_potential(s), s.initial.x0);
  s.run.sample_every = 1;
  s.control.law = std::string(law) == "off" ? LawKind::off
                  : std::string(state) == "coherent" ? LawKind::coherent
                                                      : LawKind::squeezed;
  return s;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"acceptance criteria"};
  std::string out_arg = "acceptance_out";
  app.add_option("--out", out_arg, "directory for scenario outputs");
  CLI11_PARSE(app, argc, argv);
  const fs::path out = out_arg;
  fs::create_directories(out);

  const Grid1D grid = make_grid(1024, -12, 12);
  const Potential harmonic = Potential::harmonic(1.0);
  const Potential quartic = Potential::quartic(1.0, 0.1);
  const Potential morse = Potential::morse(25.0, 0.3, 0.0);
  const Grid1D morse_grid = make_grid(2048, -12, 36);

  criterion("harmonic-coherent-pin", [&] {
    Outcome o;
    const auto start = Clock::now();
    const auto shape = shape_on(harmonic, grid);
    const RealField V = harmonic.value(grid.nodes());
    std::mt19937_64 gen(20240611);
    std::uniform_real_distribution<double> pick(-2.0, 2.0);
    double worst = 0;
    for (int trial = 0; trial < 5; ++trial) {
      const double x0 = pick(gen), v0 = pick(gen);
      const auto c = path(harmonic, x0, v0, 1e-3, 2 * M_PI);
      const ControlPotential law = ControlPotential::coherent(harmonic, shape, c, Gauge::zero_at_center);
      for (int k = 0; k <= 20; ++k) {
        const double t = 2 * M_PI * k / 20;
        worst = std::max(worst, pinned_gap(grid, law.sample(grid, t), V, c->at(t).x));
      }
    }
    o.le("max |V_ctl - V|", worst, 1e-9);
    o.le("runtime s", seconds_since(start), 1.0);
    return o;
  });

  criterion("harmonic-squeezed-pin", [&] {
    Outcome o;
    const auto shape = shape_on(harmonic, grid);
    const RealField V = harmonic.value(grid.nodes());
    const auto c = path(harmonic, 1.5, 0.0, 1e-3, 2 * M_PI);
    const auto env = envelope(harmonic, *shape, *c, 1.6);
    const auto law = ControlPotential::squeezed(harmonic, shape, c, env, Gauge::zero_at_center);
    double worst = 0;
    for (int k = 0; k <= 40; ++k) {
      const double t = 2 * M_PI * k / 40;
      worst = std::max(worst, pinned_gap(grid, law.sample(grid, t), V, c->at(t).x));
    }
    o.le("max |V_ctl - V|", worst, 1e-8);
    return o;
  });

  criterion("closed-form-vs-residual", [&] {
    Outcome o;
    struct Base {
      const char* name;
      Potential pot;
      Grid1D grid;
      double x0;
    };
    for (const Base& b : {Base{"quartic", quartic, grid, 1.0}, Base{"morse", morse, morse_grid, 1.0}}) {
      const auto shape = shape_on(b.pot, b.grid);
      const double T = 2.0;
      const auto c = path(b.pot, b.x0, 0.0, 1e-3, T);
      const auto env = envelope(b.pot, *shape, *c, 1.5);
      const auto coherent = ControlPotential::coherent(b.pot, shape, c, Gauge::zero_at_center);
      const auto squeezed = ControlPotential::squeezed(b.pot, shape, c, env, Gauge::zero_at_center);
      double gap_c = 0, gap_s = 0;
      for (int k = 0; k < 20; ++k) {
        const double t = T * k / 19;
        const ResidualSample rc = hjm_residual_sample(*shape, *c, nullptr, b.grid, t);
        gap_c = std::max(gap_c, masked_gap(coherent.sample(b.grid, t), rc.values, rc.trusted));
        const ResidualSample rs = hjm_residual_sample(*shape, *c, env.get(), b.grid, t);
        gap_s = std::max(gap_s, masked_gap(squeezed.sample(b.grid, t), rs.values, rs.trusted));
      }
      o.le(std::string(b.name) + " coherent", gap_c, 1e-5);
      o.le(std::string(b.name) + " squeezed", gap_s, 1e-5);
    }
    return o;
  });

  criterion("controlled-coherence", [&] {
    Outcome o;
    const auto start = Clock::now();
    const Report on = run_collected(controlled_quartic("quartic-coherent-controlled", "coherent", "on"), out);
    const double on_secs = seconds_since(start);
    const Report off = run_collected(controlled_quartic("quartic-coherent-uncontrolled", "coherent", "off"), out);
    o.le("|<x> - x_cl|", on.summary.at("max_center_error"), 1e-4);
    o.le("|dx - sigma0|", on.summary.at("max_width_error"), 1e-4);
    o.ge("off twin |dx - sigma0|", off.summary.at("max_width_error"), 1e-3);
    o.le("runtime s", on_secs, 120.0);
    return o;
  });

  criterion("controlled-squeezing", [&] {
    Outcome o;
    const Report r = run_collected(controlled_quartic("quartic-squeezed-controlled", "squeezed", "on"), out);
    const CheckRecord* tracking = find(r, "dispersion-tracking");
    const CheckRecord* squeeze = find(r, "stochastic-squeezing");
    o.require(tracking && squeeze, "missing checks");
    if (tracking && squeeze) {
      o.le("|dx - sigma(t)|", tracking->measured, 1e-4);
      o.le("du relation (rel)", squeeze->measured, 1e-4);
    }
    return o;
  });

  criterion("envelope-oracle", [&] {
    Outcome o;
    const auto shape = shape_on(harmonic, grid);
    const double s0 = shape->sigma0, si = 1.6 * s0;
    const auto c = path(harmonic, 1.5, 0.0, 1e-3, 4 * M_PI);
    const EnvelopeTrajectory e = integrate_envelope(harmonic, *shape, *c, si, 0.0);
    double breathing = 0;
    for (const auto& s : e.samples()) {
      const double ct = std::cos(s.t), st = std::sin(s.t);
      breathing = std::max(breathing, std::abs(s.sigma - std::sqrt(si * si * ct * ct + std::pow(s0, 4) / (si * si) * st * st)));
    }
    o.le("Ermakov sup", breathing, 1e-6);

    const Potential free = Potential::tabulated({-40.0, 0.0, 40.0}, {0.0, 0.0, 0.0});
    const auto cf = path(free, 0.0, 0.5, 1e-3, 4.0);
    const EnvelopeTrajectory ef = integrate_envelope(free, *shape, *cf, s0, 0.0);
    double spreading = 0;
    for (const auto& s : ef.samples()) {
      const double exact = std::sqrt(s0 * s0 + std::pow(s.t / (2 * s0), 2));
      spreading = std::max(spreading, std::abs(s.sigma - exact) / exact);
    }
    o.le("free spreading rel", spreading, 1e-6);
    return o;
  });

  criterion("operator-identities", [&] {
    Outcome o;
    struct Base {
      Potential pot;
      Grid1D grid;
      double x0;
      double scale;
    };
    double construction = 0, unitarity = 0;
    for (const Base& b : {Base{harmonic, grid, 1.0, 1.6}, Base{quartic, grid, 1.0, 1.5},
                          Base{morse, morse_grid, 1.0, 1.3}}) {
      const StationaryState seed = ground_state(b.pot, b.grid, 5e-3, 1e-12);
      const ShapeFunction shape = extract_shape(seed);
      const ClassicalTrajectory c = integrate_trajectory(b.pot, b.x0, 0.0, 1e-3, 2.0);
      const EnvelopeTrajectory e = integrate_envelope(b.pot, shape, c, b.scale * shape.sigma0, 0.0);
      for (double t : {0.0, 0.9, 2.0}) {
        const ComplexField direct = build_squeezed_state(shape, c, e, t, b.grid);
        construction = std::max(construction,
                                l2_distance(b.grid, build_via_operators(seed, shape, c, &e, t, b.grid), direct));
        const OperatorParams p = family_params(shape, c, &e, t);
        OperatorParams back;
        back.x_cl = -seed.mean_x;
        const ComplexField centered = displace(b.grid, seed.psi0, back);
        const double n0 = l2_norm(b.grid, centered);
        unitarity = std::max(unitarity, std::abs(l2_norm(b.grid, displace(b.grid, centered, p)) - n0));
        unitarity = std::max(unitarity, std::abs(l2_norm(b.grid, dynamical_scale(b.grid, centered, p)) - n0));
      }
    }
    o.le("L2 operators vs direct", construction, 1e-7);
    o.le("norm change", unitarity, 1e-10);

    double identity = 0;
    for (double sigma : {0.5, 0.8, 1.7}) {
      const OperatorParams p = make_operator_params(0.0, 0.0, 0.0, sigma, 0.0, 1.0);
      const ComplexField g = (-grid.nodes().square()).exp().cast<cd>();
      const ComplexField exact = (std::exp(p.f) * (-std::exp(4 * p.f) * grid.nodes().square()).exp()).cast<cd>();
      identity = std::max(identity, (dynamical_scale(grid, g, p) - exact).abs().maxCoeff());
    }
    o.le("scaling identity", identity, 1e-10);
    return o;
  });

  // Every preset, for the two suite-wide identities that follow.
  const auto suite_start = Clock::now();
  for (const auto& p : presets()) {
    try {
      run_collected(preset_scenario(p.name), out);
    } catch (const Error& e) {
      std::printf("       preset %s stopped: %s\n", p.name.c_str(), e.what());
    }
  }
  std::printf("       %zu runs collected in %.1f s\n", collected.size(), seconds_since(suite_start));

  criterion("uncertainty-chain", [&] {
    Outcome o;
    double chain = std::numeric_limits<double>::infinity(), saturation = 0;
    int saturated_runs = 0;
    for (const auto& [name, r] : collected) {
      const CheckRecord* c = r ? find(*r, "uncertainty-chain") : nullptr;
      o.require(c != nullptr, name + " has no chain record");
      if (c) chain = std::min(chain, c->measured);
      if (const CheckRecord* s = r ? find(*r, "uncertainty-saturation") : nullptr) {
        saturation = std::max(saturation, s->measured);
        ++saturated_runs;
      }
    }
    o.ge("min slack", chain, -1e-10);
    o.le("coherent saturation", saturation, 1e-6);
    o.require(saturated_runs > 0, "no Gaussian coherent run");
    o.note(std::to_string(collected.size()) + " runs");
    return o;
  });

  criterion("anticommutator", [&] {
    Outcome o;
    double worst = 0;
    for (const auto& [name, r] : collected) {
      const CheckRecord* c = r ? find(*r, "anticommutator") : nullptr;
      o.require(c != nullptr, name + " has no anticommutator record");
      if (c) worst = std::max(worst, c->measured);
    }
    o.le("max |d(dx^2)/dt - <{x,p}>/m|", worst, 1e-5);
    return o;
  });

  criterion("nelson-consistency", [&] {
    Outcome o;
    const auto start = Clock::now();
    const Grid1D g = make_grid(1024, -16, 16);
    const auto shape = shape_on(harmonic, g);
    const auto c = path(harmonic, 1.5, 0.0, 2e-3, 2 * M_PI);
    const auto law = std::make_shared<const ControlPotential>(ControlPotential::coherent(harmonic, shape, c, Gauge::zero_at_center));
    const PropagationRun run = tdse_propagate(g, build_coherent_state(*shape, *c, 0.0, g),
                                              std::make_shared<const DrivingPotential>(law), 2e-3, 3141, 5);
    std::vector<double> ns, l1s;
    for (long long n : {1000LL, 10000LL, 100000LL}) {
      const auto stats = nelson_run(run, n, RngStream(1, 0), 64);
      double mean_gap = 0, l1_max = 0, l1_sum = 0;
      for (std::size_t i = 0; i < stats.size(); ++i) {
        mean_gap = std::max(mean_gap, std::abs(stats[i].emp_mean - run.records[i].mean_x));
        l1_max = std::max(l1_max, stats[i].l1_distance);
        l1_sum += stats[i].l1_distance;
      }
      ns.push_back(std::log(static_cast<double>(n)));
      l1s.push_back(std::log(l1_sum / static_cast<double>(stats.size())));
      if (n == 100000) {
        o.le("n=1e5 |mean - <x>| sqrt(n)/sigma0", mean_gap * std::sqrt(static_cast<double>(n)) / shape->sigma0, 4.0);
        o.le("n=1e5 max L1", l1_max, 0.02);
      }
    }
    // Least-squares slope of log(mean L1) against log(n).
    const double mx = (ns[0] + ns[1] + ns[2]) / 3, my = (l1s[0] + l1s[1] + l1s[2]) / 3;
    double sxy = 0, sxx = 0;
    for (int i = 0; i < 3; ++i) {
      sxy += (ns[i] - mx) * (l1s[i] - my);
      sxx += (ns[i] - mx) * (ns[i] - mx);
    }
    const double slope = sxy / sxx;
    o.require(l1s[0] > l1s[1] && l1s[1] > l1s[2], "L1 not decreasing in n");
    o.require(slope >= -0.6 && slope <= -0.4, "slope outside [-0.6, -0.4]");
    char buf[64];
    std::snprintf(buf, sizeof buf, "L1 slope %.3f in [-0.6, -0.4]", slope);
    o.note(buf);
    o.le("runtime s", seconds_since(start), 180.0);
    return o;
  });

  criterion("solver-convergence", [&] {
    Outcome o;
    const auto shape = shape_on(quartic, grid);
    const auto c = path(quartic, 1.0, 0.0, 1e-3, 1.0);
    const auto law = std::make_shared<const ControlPotential>(ControlPotential::coherent(quartic, shape, c, Gauge::zero_at_center));
    const auto driving = std::make_shared<const DrivingPotential>(law);
    const ComplexField psi0 = build_coherent_state(*shape, *c, 0.0, grid);
    const auto final_state = [&](double dt) {
      const auto steps = std::llround(1.0 / dt);
      return tdse_propagate(grid, psi0, driving, dt, steps, steps).final_state;
    };
    const ComplexField reference = final_state(1.25e-3);
    const double e1 = l2_distance(grid, final_state(0.02), reference);
    const double e2 = l2_distance(grid, final_state(0.01), reference);
    const double ratio = e1 / e2;
    o.require(ratio >= 3.6 && ratio <= 4.4, "ratio outside [3.6, 4.4]");
    char buf[64];
    std::snprintf(buf, sizeof buf, "dt-halving ratio %.3f in [3.6, 4.4]", ratio);
    o.note(buf);

    for (const std::string family : {"harmonic", "quartic", "double-well", "morse"}) {
      const Scenario s = preset_scenario(family + "-coherent-on");
      const Potential p = seed_potential(s);
      const Grid1D g = make_grid(s.grid.n_points, s.grid.x_min, s.grid.x_max);
      const double e = ground_state(p, g, s.ground.dtau, s.ground.tol).energy;
      const double f1 = eigensolve_fd(p, g, 1)[0].energy;
      const double f2 = eigensolve_fd(p, make_grid(2 * s.grid.n_points, s.grid.x_min, s.grid.x_max), 1)[0].energy;
      o.le(family + " |E0 - E_fd|", std::abs(e - (4 * f2 - f1) / 3), 1e-5);
    }
    return o;
  });

  std::printf("%d of 11 criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
