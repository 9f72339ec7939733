#include "wavectl/propagation.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <limits>
#include <numbers>
#include <thread>

namespace wavectl {

namespace {

constexpr std::complex<double> kI(0.0, 1.0);

}  // namespace

double DrivingPotential::t_end() const {
  return control_ ? control_->t_end() : std::numeric_limits<double>::infinity();
}

RealField DrivingPotential::sample(const Grid1D& grid, double t) const {
  return control_ ? control_->sample(grid, t) : static_.value(grid.nodes());
}

SplitOperatorPropagator::SplitOperatorPropagator(const Grid1D& grid, double dt, Units units)
    : grid_(grid), dt_(dt), units_(units) {
  if (!(dt > 0)) fail(ErrorCode::invalid_argument, "propagation dt must be positive");
  const RealField phase = (units.hbar * dt / (2.0 * units.mass)) * grid.wavenumbers().square();
  kinetic_phase_ = (-kI * phase.cast<std::complex<double>>()).exp();
}

ComplexField SplitOperatorPropagator::half_kick(const RealField& potential) const {
  return (-kI * (0.5 * dt_ / units_.hbar * potential).cast<std::complex<double>>()).exp();
}

void SplitOperatorPropagator::step_with_kick(ComplexField& psi, const ComplexField& kick) const {
  psi *= kick;
  ComplexField spectrum = forward_transform(psi);
  spectrum *= kinetic_phase_;
  psi = inverse_transform(spectrum) * kick;
}

void SplitOperatorPropagator::step(ComplexField& psi, const DrivingPotential& driving, double t) const {
  step_with_kick(psi, half_kick(driving.sample(grid_, t + 0.5 * dt_)));
}

double effective_kinetic_phase(const Grid1D& grid, const ComplexField& psi, double dt, Units units) {
  const RealField amplitude = forward_transform(psi).abs();
  const double cutoff = 1e-8 * amplitude.maxCoeff();
  double k2 = 0.0;
  for (Index j = 0; j < amplitude.size(); ++j) {
    if (amplitude[j] > cutoff) k2 = std::max(k2, grid.wavenumbers()[j] * grid.wavenumbers()[j]);
  }
  return units.hbar * k2 * dt / (2.0 * units.mass);
}

void PropagationRun::replay(
    const std::function<void(long long, double, const ComplexField&, const ComplexField&)>& visit) const {
  const SplitOperatorPropagator stepper(grid, dt, units);
  std::optional<ComplexField> static_kick;
  if (driving->is_static()) static_kick = stepper.half_kick(driving->sample(grid, t0));
  ComplexField psi = psi0;
  for (long long k = 0; k < n_steps; ++k) {
    const double t = t0 + static_cast<double>(k) * dt;
    ComplexField next = psi;
    if (static_kick) {
      stepper.step_with_kick(next, *static_kick);
    } else {
      stepper.step(next, *driving, t);
    }
    visit(k, t, psi, next);
    psi = std::move(next);
  }
}

PropagationRun tdse_propagate(const Grid1D& grid, const ComplexField& psi0,
                              std::shared_ptr<const DrivingPotential> driving, double dt, long long n_steps,
                              long long sample_every, Units units, const PropagationOptions& options) {
  if (psi0.size() != grid.size()) fail(ErrorCode::invalid_size, "initial state length does not match grid");
  if (!driving) fail(ErrorCode::invalid_argument, "missing driving potential");
  if (!(dt > 0)) fail(ErrorCode::invalid_argument, "propagation dt must be positive");
  if (n_steps < 1 || sample_every < 1) fail(ErrorCode::invalid_argument, "n_steps and sample_every must be >= 1");
  const double t_final = options.t0 + static_cast<double>(n_steps) * dt;
  if (t_final > driving->t_end() + 1e-9 * dt) {
    fail(ErrorCode::time_span_exceeded, "run ends at t = " + std::to_string(t_final) +
                                            " but the control law stops at " + std::to_string(driving->t_end()));
  }

  PropagationRun run;
  run.grid = grid;
  run.psi0 = psi0;
  run.driving = driving;
  run.units = units;
  run.t0 = options.t0;
  run.dt = dt;
  run.n_steps = n_steps;
  run.sample_every = sample_every;
  run.effective_phase_per_step = effective_kinetic_phase(grid, psi0, dt, units);
  if (run.effective_phase_per_step >= std::numbers::pi) {
    fail(ErrorCode::invalid_argument, "dt too large: kinetic phase per step " +
                                          std::to_string(run.effective_phase_per_step) + " exceeds pi");
  }

  const double norm0 = quadrature(grid, psi0.abs2());
  const Potential* force = options.record_ehrenfest ? &driving->reference() : nullptr;
  const auto record = [&](long long step, const ComplexField& psi) {
    const double t = options.t0 + static_cast<double>(step) * dt;
    const RealField potential = driving->sample(grid, t);
    ObservableRecord r = observables(grid, psi, units, t, &potential, force);
    const double drift = std::abs(r.norm - norm0);
    run.max_norm_drift = std::max(run.max_norm_drift, drift);
    run.max_leakage = std::max(run.max_leakage, r.boundary_leakage);
    if (r.boundary_leakage > options.leakage_bound) {
      const std::string msg = "boundary leakage " + std::to_string(r.boundary_leakage) + " at t = " + std::to_string(t);
      if (options.strict) fail(ErrorCode::leakage_exceeded, msg);
      if (run.valid) run.flags.push_back("leakage-exceeded: " + msg);
      run.valid = false;
    }
    if (drift > options.norm_tolerance) {
      const std::string msg = "norm drift " + std::to_string(drift) + " at t = " + std::to_string(t);
      if (options.strict) fail(ErrorCode::norm_drift, msg);
      run.flags.push_back("norm-drift: " + msg);
      run.valid = false;
    }
    run.record_steps.push_back(step);
    run.records.push_back(r);
  };

  record(0, psi0);
  run.replay([&](long long k, double, const ComplexField&, const ComplexField& next) {
    const long long done = k + 1;
    if (done % sample_every == 0 || done == n_steps) record(done, next);
    if (done == n_steps) run.final_state = next;
  });
  return run;
}

// ---------------------------------------------------------------------------
// Nelson diffusion

namespace {

int thread_count(const NelsonOptions& options) {
  if (options.threads > 0) return options.threads;
  return std::max(1, static_cast<int>(std::thread::hardware_concurrency()));
}

// Runs body(begin, end, chunk) over [0, n) on up to `threads` threads and
// rethrows the first failure in chunk order.
template <typename Body>
void parallel_chunks(long long n, int threads, Body&& body) {
  const long long chunks = std::max(1LL, std::min<long long>(threads, n / 1024 + 1));
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(chunks));
  const auto run_chunk = [&](long long c) {
    const long long begin = n * c / chunks, end = n * (c + 1) / chunks;
    try {
      body(begin, end, c);
    } catch (...) {
      errors[static_cast<std::size_t>(c)] = std::current_exception();
    }
  };
  if (chunks == 1) {
    run_chunk(0);
  } else {
    std::vector<std::thread> pool;
    for (long long c = 0; c < chunks; ++c) pool.emplace_back(run_chunk, c);
    for (auto& th : pool) th.join();
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

// Trusted interval of a state: contiguous run above the floor around the peak.
struct Window {
  double lo;
  double hi;
  Index first;
  Index last;
};

Window trusted_window(const Grid1D& grid, const RealField& rho, double floor) {
  Index peak = 0;
  rho.maxCoeff(&peak);
  Index lo = peak, hi = peak;
  while (lo > 0 && rho[lo - 1] > floor) --lo;
  while (hi < rho.size() - 1 && rho[hi + 1] > floor) ++hi;
  return {grid.nodes()[lo], grid.nodes()[hi], lo, hi};
}

struct DriftField {
  RealField drift;  // u + v
  Window window;
};

DriftField drift_field(const Grid1D& grid, const ComplexField& psi, Units units, const NelsonOptions& options) {
  const HydrodynamicFields f = hydrodynamic_decompose(grid, psi, units, {options.density_floor});
  Index first = 0, last = grid.size() - 1;
  while (!f.trust_mask[first]) ++first;
  while (!f.trust_mask[last]) --last;
  return {f.u + f.v, {grid.nodes()[first], grid.nodes()[last], first, last}};
}

EnsembleState advance(const EnsembleState& ensemble, const Grid1D& grid, const DriftField& field,
                      const Window& next_window, double dt, Units units, const NelsonOptions& options) {
  EnsembleState out = ensemble;
  out.t = ensemble.t + dt;
  out.step = ensemble.step + 1;
  if (dt == 0.0) {
    out.t = ensemble.t;
    out.step = ensemble.step;
    return out;
  }
  if (!(dt > 0)) fail(ErrorCode::invalid_argument, "nelson dt must be non-negative");
  const double noise_scale = options.noise ? std::sqrt(units.hbar / units.mass * dt) : 0.0;
  const double dx = grid.dx();
  const double escape = options.escape_bins * dx;
  const Index n_nodes = grid.size();
  const int threads = thread_count(options);
  const long long n = ensemble.n_particles;
  std::vector<long long> flagged(static_cast<std::size_t>(std::max(1, threads)) + 1, 0);

  parallel_chunks(n, threads, [&](long long begin, long long end, long long chunk) {
    long long local_flags = 0;
    for (long long i = begin; i < end; ++i) {
      const double q = ensemble.positions[i];
      double b;
      if (q < field.window.lo) {
        b = field.drift[field.window.first];
        ++local_flags;
      } else if (q > field.window.hi) {
        b = field.drift[field.window.last];
        ++local_flags;
      } else {
        const double s = (q - grid.x_min()) / dx;
        const Index j = std::clamp<Index>(static_cast<Index>(std::floor(s)), 0, n_nodes - 2);
        const double w = s - static_cast<double>(j);
        b = (1.0 - w) * field.drift[j] + w * field.drift[j + 1];
      }
      double next = q + b * dt;
      if (noise_scale > 0.0) {
        next += noise_scale * ensemble.seed.substream(static_cast<std::uint64_t>(i))
                                  .gaussian(static_cast<std::uint64_t>(ensemble.step));
      }
      if (next < next_window.lo - escape || next > next_window.hi + escape || !std::isfinite(next)) {
        fail(ErrorCode::particle_escape, "particle " + std::to_string(i) + " at x = " + std::to_string(next) +
                                             " left the trusted window at t = " + std::to_string(out.t));
      }
      out.positions[i] = next;
    }
    flagged[static_cast<std::size_t>(chunk)] = local_flags;
  });
  for (long long f : flagged) out.flagged += f;
  return out;
}

// Cumulative probability of the cell-constant density at x.
class CellCdf {
 public:
  CellCdf(const Grid1D& grid, const RealField& rho) : grid_(grid), rho_(rho), cumulative_(rho.size() + 1) {
    cumulative_[0] = 0.0;
    for (Index j = 0; j < rho.size(); ++j) cumulative_[j + 1] = cumulative_[j] + rho[j] * grid.dx();
    total_ = cumulative_[rho.size()];
  }

  double total() const { return total_; }

  double operator()(double x) const {
    const double s = (x - grid_.x_min()) / grid_.dx() + 0.5;  // cell j spans s in [j, j+1)
    if (s <= 0) return 0.0;
    if (s >= static_cast<double>(rho_.size())) return 1.0;
    const auto j = static_cast<Index>(std::floor(s));
    return (cumulative_[j] + (s - static_cast<double>(j)) * rho_[j] * grid_.dx()) / total_;
  }

  double inverse(double p) const {
    const double target = p * total_;
    const auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), target);
    const Index j = std::clamp<Index>(static_cast<Index>(it - cumulative_.begin()) - 1, 0, rho_.size() - 1);
    const double mass = rho_[j] * grid_.dx();
    const double frac = mass > 0 ? std::clamp((target - cumulative_[j]) / mass, 0.0, 1.0) : 0.5;
    return grid_.nodes()[j] - 0.5 * grid_.dx() + frac * grid_.dx();
  }

 private:
  const Grid1D& grid_;
  const RealField& rho_;
  std::vector<double> cumulative_;
  double total_ = 0.0;
};

}  // namespace

EnsembleState initialize_ensemble(const Grid1D& grid, const ComplexField& psi, long long n_particles,
                                  const RngStream& seed, double t0, const NelsonOptions& options) {
  if (n_particles < 1) fail(ErrorCode::invalid_argument, "ensemble needs at least one particle");
  const RealField rho = psi.abs2();
  const CellCdf cdf(grid, rho);
  EnsembleState e;
  e.t = t0;
  e.seed = seed;
  e.n_particles = n_particles;
  e.positions.resize(n_particles);
  parallel_chunks(n_particles, thread_count(options), [&](long long begin, long long end, long long) {
    for (long long i = begin; i < end; ++i) {
      e.positions[i] = cdf.inverse(seed.substream(static_cast<std::uint64_t>(i)).uniform(0));
    }
  });
  return e;
}

EnsembleState nelson_step(const EnsembleState& ensemble, const Grid1D& grid, const ComplexField& psi,
                          const ComplexField& psi_next, double dt, Units units, const NelsonOptions& options) {
  const DriftField field = drift_field(grid, psi, units, options);
  const Window next = trusted_window(grid, psi_next.abs2(), options.density_floor);
  return advance(ensemble, grid, field, next, dt, units, options);
}

EnsembleStats ensemble_stats(const EnsembleState& ensemble, const Grid1D& grid, const ComplexField& psi, int bins) {
  if (bins < 1) fail(ErrorCode::invalid_argument, "histogram needs at least one bin");
  const RealField& q = ensemble.positions;
  const auto n = static_cast<double>(q.size());
  EnsembleStats s;
  s.t = ensemble.t;
  s.flagged = ensemble.flagged;
  s.emp_mean = q.mean();
  s.emp_std = std::sqrt((q - s.emp_mean).square().sum() / n);

  const RealField rho = psi.abs2();
  const double norm = quadrature(grid, rho);
  const double mean = quadrature(grid, grid.nodes() * rho) / norm;
  const double spread = std::sqrt(quadrature(grid, (grid.nodes() - mean).square() * rho) / norm);
  const double lo = mean - 6.0 * spread, hi = mean + 6.0 * spread;
  const double width = (hi - lo) / bins;
  s.bin_edges.resize(static_cast<std::size_t>(bins) + 1);
  for (int b = 0; b <= bins; ++b) s.bin_edges[static_cast<std::size_t>(b)] = lo + width * b;

  // Particles beyond the range land in the end bins, matching the folded tails below.
  s.counts.assign(static_cast<std::size_t>(bins), 0);
  for (Index i = 0; i < q.size(); ++i) {
    const auto b = std::clamp(static_cast<long long>(std::floor((q[i] - lo) / width)), 0LL,
                              static_cast<long long>(bins) - 1);
    ++s.counts[static_cast<std::size_t>(b)];
  }
  const CellCdf cdf(grid, rho);
  for (int b = 0; b < bins; ++b) {
    const double p_lo = b == 0 ? 0.0 : cdf(s.bin_edges[static_cast<std::size_t>(b)]);
    const double p_hi = b == bins - 1 ? 1.0 : cdf(s.bin_edges[static_cast<std::size_t>(b) + 1]);
    s.l1_distance += std::abs(static_cast<double>(s.counts[static_cast<std::size_t>(b)]) / n - (p_hi - p_lo));
  }
  return s;
}

std::vector<EnsembleStats> nelson_run(const PropagationRun& run, long long n_particles, const RngStream& seed,
                                      int bins, const NelsonOptions& options) {
  if (n_particles < 1000) fail(ErrorCode::invalid_argument, "nelson_run needs at least 1000 particles");
  EnsembleState ensemble = initialize_ensemble(run.grid, run.psi0, n_particles, seed, run.t0, options);
  std::vector<EnsembleStats> stats;
  stats.push_back(ensemble_stats(ensemble, run.grid, run.psi0, bins));

  std::size_t next_record = 1;
  std::optional<DriftField> cached;
  run.replay([&](long long k, double, const ComplexField& psi, const ComplexField& next) {
    const DriftField field = cached ? std::move(*cached) : drift_field(run.grid, psi, run.units, options);
    DriftField upcoming = drift_field(run.grid, next, run.units, options);
    ensemble = advance(ensemble, run.grid, field, upcoming.window, run.dt, run.units, options);
    cached = std::move(upcoming);
    if (next_record < run.record_steps.size() && run.record_steps[next_record] == k + 1) {
      stats.push_back(ensemble_stats(ensemble, run.grid, next, bins));
      ++next_record;
    }
  });
  return stats;
}

}  // namespace wavectl
