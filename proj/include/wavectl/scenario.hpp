#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "wavectl/classical_control.hpp"
#include "wavectl/numerics.hpp"
#include "wavectl/potentials.hpp"

namespace wavectl {

enum class StateKind { coherent, squeezed };
enum class LawKind { coherent, squeezed, residual, off };

struct PotentialSpec {
  std::string family;  // harmonic | quartic | double-well | morse | tabulated | free
  double omega = 1.0;
  double lambda = 0.1;
  double a = 2.0;
  double b = 1.0;
  double depth = 10.0;
  double alpha = 0.3;
  double x_e = 0.0;
  std::filesystem::path table;
};

struct Scenario {
  std::string name = "scenario";
  std::filesystem::path base_dir;  // relative paths resolve against this

  Units units;
  struct {
    Index n_points = 1024;
    double x_min = -12.0;
    double x_max = 12.0;
  } grid;
  PotentialSpec potential;
  struct {
    double dtau = 5e-3;
    double tol = 1e-12;
  } ground;
  struct {
    double x0 = 1.0;
    double v0 = 0.0;
    StateKind state = StateKind::coherent;
    std::optional<double> sigma_init;  // absolute; overrides sigma_scale
    double sigma_scale = 1.0;          // sigma_init = sigma_scale * sigma0
    double sigma_dot_init = 0.0;
  } initial;
  struct {
    LawKind law = LawKind::coherent;
    Gauge gauge = Gauge::zero_at_center;
    std::string sigma_source = "envelope";  // envelope | prescribed
    std::filesystem::path sigma_csv;
    bool unscaled_form = false;  // squeezed law without the s^2 rescaling of V
    std::optional<double> horizon;  // span of trajectory and envelope; defaults to run.T
  } control;
  struct {
    double dt = 1e-3;
    double T = 6.283185307179586;
    long long sample_every = 10;
  } run;
  struct {
    bool enabled = false;
    long long n_particles = 100000;
    std::uint64_t seed = 1;
    std::uint64_t stream = 0;
    int bins = 64;
  } nelson;
  struct {
    std::filesystem::path dir = "out";
    bool dump_states = false;
    int dump_every = 10;
    bool dump_potential = false;
    bool dump_shape = true;
  } outputs;

  double horizon() const { return control.horizon.value_or(run.T); }
  long long n_steps() const;
};

/// Parses INI-style text with sections mirroring `Scenario`; unknown keys
/// and sections are rejected. Errors: parse-error with line information,
/// validation-error naming the offending field.
Scenario parse_scenario_text(const std::string& text, const std::string& origin = "<text>",
                             const std::filesystem::path& base_dir = {});
Scenario parse_scenario(const std::filesystem::path& path);

/// Field-level validation; throws validation-error naming the field.
void validate(const Scenario& s);

/// Static potential of the scenario and the potential whose ground state
/// seeds the shape (they differ only for the free particle).
Potential scenario_potential(const Scenario& s);
Potential seed_potential(const Scenario& s);

/// Whether the uncontrolled dynamics preserves the packet family exactly.
bool is_quadratic_family(const Scenario& s);

std::string to_string(LawKind law);
std::string to_string(StateKind state);

// ---------------------------------------------------------------------------
// Running

enum class Stage { ground, classical, envelope, synth, propagate, nelson, run };

std::string to_string(Stage stage);

struct CheckRecord {
  std::string name;
  double measured = 0.0;
  double bound = 0.0;
  std::string relation = "<=";    // measured <relation> bound
  std::string expected = "pass";  // pass | fail | info
  bool pass = false;              // measured satisfies the bound
  bool ok = false;                // outcome matches the expectation
  std::string detail;
};

struct ManifestEntry {
  std::string path;
  std::vector<std::string> columns;
  std::string description;
};

struct Report {
  std::string scenario;
  std::string scenario_text;  // normalized echo of the configuration
  std::string stage;          // last stage reached
  std::string error;          // set when a stage failed
  std::vector<CheckRecord> checks;
  std::vector<ManifestEntry> files;
  std::map<std::string, double> summary;

  bool ok() const;
  std::string to_json() const;
  static Report from_json(const std::string& text);
};

struct RunOptions {
  Stage stop_after = Stage::run;
  std::optional<std::filesystem::path> out_dir;  // overrides outputs.dir
  std::optional<std::uint64_t> seed;             // overrides nelson.seed
  int threads = 0;
};

/// Runs the pipeline up to `stop_after`, writes CSVs and report.json into
/// the output directory and returns the report. Module errors are rethrown
/// as Error with the stage name prefixed.
Report run_scenario(const Scenario& s, const RunOptions& options = {});

/// report.json inside `path` (a directory) or `path` itself; nullopt when absent.
std::optional<Report> read_report(const std::filesystem::path& path);

struct SuiteEntry {
  std::string name;
  std::optional<Report> report;  // nullopt: the run left no report
};

/// Prints a summary table and returns the exit status: 0 every report ok,
/// 1 a check or stage failed, 2 a report is missing.
int verify_suite(const std::vector<SuiteEntry>& entries, std::ostream& out);

/// Normalized INI text of a scenario (used for the report echo).
std::string scenario_to_ini(const Scenario& s);

// ---------------------------------------------------------------------------
// Presets

struct PresetInfo {
  std::string name;
  std::string text;  // INI body
};

const std::vector<PresetInfo>& presets();
Scenario preset_scenario(const std::string& name);

}  // namespace wavectl
