#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <vector>

#include "wavectl/classical_control.hpp"
#include "wavectl/numerics.hpp"
#include "wavectl/potentials.hpp"
#include "wavectl/quantum_states.hpp"
#include "wavectl/rng.hpp"

namespace wavectl {

/// Potential seen by the propagator: a static family or a control law.
class DrivingPotential {
 public:
  explicit DrivingPotential(Potential pot) : static_(std::move(pot)) {}
  explicit DrivingPotential(std::shared_ptr<const ControlPotential> control)
      : static_(control->base()), control_(std::move(control)) {}

  bool is_static() const { return control_ == nullptr; }
  /// Base potential (the static family itself, or the law's base).
  const Potential& reference() const { return static_; }
  const ControlPotential* control() const { return control_.get(); }
  /// Last time the potential is defined; infinite for static families.
  double t_end() const;

  RealField sample(const Grid1D& grid, double t) const;

 private:
  Potential static_;
  std::shared_ptr<const ControlPotential> control_;
};

/// Second-order Strang stepper exp(-iV dt/2) exp(-iT dt) exp(-iV dt/2), with
/// V sampled at the midpoint of each step.
class SplitOperatorPropagator {
 public:
  SplitOperatorPropagator(const Grid1D& grid, double dt, Units units);

  /// Advances psi from t to t + dt in place.
  void step(ComplexField& psi, const DrivingPotential& driving, double t) const;
  /// Same step with a precomputed half kick exp(-i V dt / 2 hbar).
  void step_with_kick(ComplexField& psi, const ComplexField& half_kick) const;
  ComplexField half_kick(const RealField& potential) const;

  double dt() const { return dt_; }

 private:
  Grid1D grid_;
  double dt_;
  Units units_;
  ComplexField kinetic_phase_;
};

struct PropagationOptions {
  double t0 = 0.0;
  bool strict = false;  // throw instead of flagging the run invalid
  double norm_tolerance = 1e-9;
  double leakage_bound = 1e-8;
  /// Ehrenfest-gap force; defaults to the driving potential's reference.
  bool record_ehrenfest = true;
};

struct PropagationRun {
  Grid1D grid;
  ComplexField psi0;
  std::shared_ptr<const DrivingPotential> driving;
  Units units;
  double t0 = 0.0;
  double dt = 0.0;
  long long n_steps = 0;
  long long sample_every = 1;
  std::vector<long long> record_steps;
  std::vector<ObservableRecord> records;
  ComplexField final_state;
  bool valid = true;
  std::vector<std::string> flags;
  double max_norm_drift = 0.0;
  double max_leakage = 0.0;
  double effective_phase_per_step = 0.0;

  /// Re-runs the deterministic stepping and hands (step, t, psi_n, psi_n+1)
  /// to `visit` for every step.
  void replay(const std::function<void(long long, double, const ComplexField&, const ComplexField&)>& visit) const;
};

PropagationRun tdse_propagate(const Grid1D& grid, const ComplexField& psi0,
                              std::shared_ptr<const DrivingPotential> driving, double dt, long long n_steps,
                              long long sample_every, Units units = {}, const PropagationOptions& options = {});

/// Largest kinetic phase hbar k^2 dt / 2m over modes carrying more than
/// 1e-8 of the peak spectral amplitude.
double effective_kinetic_phase(const Grid1D& grid, const ComplexField& psi, double dt, Units units);

// ---------------------------------------------------------------------------
// Nelson diffusion

struct EnsembleState {
  double t = 0.0;
  long long step = 0;
  RealField positions;
  RngStream seed;
  long long n_particles = 0;
  long long flagged = 0;  // drift lookups that fell outside the trusted window
};

struct NelsonOptions {
  bool noise = true;
  int threads = 0;  // 0: hardware concurrency
  double density_floor = 1e-12;
  double escape_bins = 2.0;
};

/// Inverse-CDF sample of |psi|^2 treated as piecewise constant on cells.
EnsembleState initialize_ensemble(const Grid1D& grid, const ComplexField& psi, long long n_particles,
                                  const RngStream& seed, double t0 = 0.0, const NelsonOptions& options = {});

/// One Euler-Maruyama step of dq = (v + u) dt + sqrt(hbar/m) dW with drifts
/// from psi at the start of the step.
EnsembleState nelson_step(const EnsembleState& ensemble, const Grid1D& grid, const ComplexField& psi,
                          const ComplexField& psi_next, double dt, Units units = {},
                          const NelsonOptions& options = {});

struct EnsembleStats {
  double t = 0.0;
  double emp_mean = 0.0;
  double emp_std = 0.0;
  std::vector<double> bin_edges;
  std::vector<long long> counts;
  double l1_distance = 0.0;
  long long flagged = 0;
};

/// Histogram of the ensemble over <x> +/- 6 dx of psi with `bins` bins,
/// compared with |psi|^2 in L1 (mass outside the range included).
EnsembleStats ensemble_stats(const EnsembleState& ensemble, const Grid1D& grid, const ComplexField& psi,
                             int bins = 64);

std::vector<EnsembleStats> nelson_run(const PropagationRun& run, long long n_particles, const RngStream& seed,
                                      int bins = 64, const NelsonOptions& options = {});

}  // namespace wavectl
