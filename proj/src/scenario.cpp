#include "wavectl/scenario.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <numbers>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <nlohmann/json.hpp>

#include "wavectl/propagation.hpp"
#include "wavectl/quantum_states.hpp"
#include "wavectl/spectrum.hpp"

namespace wavectl {

namespace {

namespace pt = boost::property_tree;
namespace fs = std::filesystem;
using json = nlohmann::json;

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

[[noreturn]] void invalid(const std::string& field, const std::string& why) {
  fail(ErrorCode::validation_error, field + ": " + why);
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

double to_double(const std::string& field, const std::string& text) {
  const std::string t = trim(text);
  double v = 0.0;
  const auto [end, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (ec != std::errc() || end != t.data() + t.size() || t.empty()) invalid(field, "expected a number, got '" + t + "'");
  if (!std::isfinite(v)) invalid(field, "value must be finite");
  return v;
}

long long to_integer(const std::string& field, const std::string& text) {
  const double v = to_double(field, text);
  if (v != std::floor(v) || std::abs(v) > 9.0e15) invalid(field, "expected an integer, got '" + trim(text) + "'");
  return static_cast<long long>(v);
}

std::uint64_t to_unsigned(const std::string& field, const std::string& text) {
  const std::string t = trim(text);
  std::uint64_t v = 0;
  const auto [end, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (ec != std::errc() || end != t.data() + t.size() || t.empty()) {
    invalid(field, "expected a non-negative integer, got '" + t + "'");
  }
  return v;
}

bool to_bool(const std::string& field, const std::string& text) {
  std::string t = trim(text);
  std::transform(t.begin(), t.end(), t.begin(), [](unsigned char c) { return std::tolower(c); });
  if (t == "true" || t == "yes" || t == "on" || t == "1") return true;
  if (t == "false" || t == "no" || t == "off" || t == "0") return false;
  invalid(field, "expected a boolean, got '" + t + "'");
}

LawKind to_law(const std::string& field, const std::string& text) {
  const std::string t = trim(text);
  if (t == "coherent") return LawKind::coherent;
  if (t == "squeezed") return LawKind::squeezed;
  if (t == "residual") return LawKind::residual;
  if (t == "off" || t == "none") return LawKind::off;
  invalid(field, "unknown control law '" + t + "' (coherent, squeezed, residual, off)");
}

StateKind to_state(const std::string& field, const std::string& text) {
  const std::string t = trim(text);
  if (t == "coherent") return StateKind::coherent;
  if (t == "squeezed") return StateKind::squeezed;
  invalid(field, "unknown state '" + t + "' (coherent, squeezed)");
}

Gauge to_gauge(const std::string& field, const std::string& text) {
  const std::string t = trim(text);
  if (t == "raw") return Gauge::raw;
  if (t == "zero_at_center" || t == "zero-at-center") return Gauge::zero_at_center;
  invalid(field, "unknown gauge '" + t + "' (raw, zero_at_center)");
}

std::string gauge_name(Gauge g) { return g == Gauge::raw ? "raw" : "zero_at_center"; }

using Setter = std::function<void(Scenario&, const std::string&, const std::string&)>;

const std::map<std::string, Setter>& setters() {
  static const std::map<std::string, Setter> table = [] {
    std::map<std::string, Setter> t;
    const auto num = [&](const std::string& key, auto member) {
      t[key] = [member](Scenario& s, const std::string& f, const std::string& v) { member(s) = to_double(f, v); };
    };
    t["scenario.name"] = [](Scenario& s, const std::string&, const std::string& v) { s.name = trim(v); };
    num("units.hbar", [](Scenario& s) -> double& { return s.units.hbar; });
    num("units.mass", [](Scenario& s) -> double& { return s.units.mass; });
    t["grid.n_points"] = [](Scenario& s, const std::string& f, const std::string& v) {
      s.grid.n_points = static_cast<Index>(to_integer(f, v));
    };
    num("grid.x_min", [](Scenario& s) -> double& { return s.grid.x_min; });
    num("grid.x_max", [](Scenario& s) -> double& { return s.grid.x_max; });
    t["potential.family"] = [](Scenario& s, const std::string&, const std::string& v) { s.potential.family = trim(v); };
    num("potential.omega", [](Scenario& s) -> double& { return s.potential.omega; });
    num("potential.lambda", [](Scenario& s) -> double& { return s.potential.lambda; });
    num("potential.a", [](Scenario& s) -> double& { return s.potential.a; });
    num("potential.b", [](Scenario& s) -> double& { return s.potential.b; });
    num("potential.depth", [](Scenario& s) -> double& { return s.potential.depth; });
    num("potential.alpha", [](Scenario& s) -> double& { return s.potential.alpha; });
    num("potential.x_e", [](Scenario& s) -> double& { return s.potential.x_e; });
    t["potential.table"] = [](Scenario& s, const std::string&, const std::string& v) { s.potential.table = trim(v); };
    num("ground.dtau", [](Scenario& s) -> double& { return s.ground.dtau; });
    num("ground.tol", [](Scenario& s) -> double& { return s.ground.tol; });
    num("initial.x0", [](Scenario& s) -> double& { return s.initial.x0; });
    num("initial.v0", [](Scenario& s) -> double& { return s.initial.v0; });
    t["initial.state"] = [](Scenario& s, const std::string& f, const std::string& v) {
      s.initial.state = to_state(f, v);
    };
    t["initial.sigma_init"] = [](Scenario& s, const std::string& f, const std::string& v) {
      s.initial.sigma_init = to_double(f, v);
    };
    num("initial.sigma_scale", [](Scenario& s) -> double& { return s.initial.sigma_scale; });
    num("initial.sigma_dot_init", [](Scenario& s) -> double& { return s.initial.sigma_dot_init; });
    t["control.law"] = [](Scenario& s, const std::string& f, const std::string& v) { s.control.law = to_law(f, v); };
    t["control.gauge"] = [](Scenario& s, const std::string& f, const std::string& v) {
      s.control.gauge = to_gauge(f, v);
    };
    t["control.sigma_source"] = [](Scenario& s, const std::string&, const std::string& v) {
      s.control.sigma_source = trim(v);
    };
    t["control.sigma_csv"] = [](Scenario& s, const std::string&, const std::string& v) {
      s.control.sigma_csv = trim(v);
    };
    t["control.unscaled_form"] = [](Scenario& s, const std::string& f, const std::string& v) {
      s.control.unscaled_form = to_bool(f, v);
    };
    t["control.horizon"] = [](Scenario& s, const std::string& f, const std::string& v) {
      s.control.horizon = to_double(f, v);
    };
    num("run.dt", [](Scenario& s) -> double& { return s.run.dt; });
    num("run.T", [](Scenario& s) -> double& { return s.run.T; });
    t["run.sample_every"] = [](Scenario& s, const std::string& f, const std::string& v) {
      s.run.sample_every = to_integer(f, v);
    };
    t["nelson.enabled"] = [](Scenario& s, const std::string& f, const std::string& v) {
      s.nelson.enabled = to_bool(f, v);
    };
    t["nelson.n_particles"] = [](Scenario& s, const std::string& f, const std::string& v) {
      s.nelson.n_particles = to_integer(f, v);
    };
    t["nelson.seed"] = [](Scenario& s, const std::string& f, const std::string& v) { s.nelson.seed = to_unsigned(f, v); };
    t["nelson.stream"] = [](Scenario& s, const std::string& f, const std::string& v) {
      s.nelson.stream = to_unsigned(f, v);
    };
    t["nelson.bins"] = [](Scenario& s, const std::string& f, const std::string& v) {
      s.nelson.bins = static_cast<int>(to_integer(f, v));
    };
    t["outputs.dir"] = [](Scenario& s, const std::string&, const std::string& v) { s.outputs.dir = trim(v); };
    t["outputs.dump_states"] = [](Scenario& s, const std::string& f, const std::string& v) {
      s.outputs.dump_states = to_bool(f, v);
    };
    t["outputs.dump_every"] = [](Scenario& s, const std::string& f, const std::string& v) {
      s.outputs.dump_every = static_cast<int>(to_integer(f, v));
    };
    t["outputs.dump_potential"] = [](Scenario& s, const std::string& f, const std::string& v) {
      s.outputs.dump_potential = to_bool(f, v);
    };
    t["outputs.dump_shape"] = [](Scenario& s, const std::string& f, const std::string& v) {
      s.outputs.dump_shape = to_bool(f, v);
    };
    return t;
  }();
  return table;
}

fs::path resolve(const Scenario& s, const fs::path& p) {
  if (p.empty() || p.is_absolute() || s.base_dir.empty()) return p;
  return s.base_dir / p;
}

}  // namespace

long long Scenario::n_steps() const { return std::llround(run.T / run.dt); }

std::string to_string(LawKind law) {
  switch (law) {
    case LawKind::coherent: return "coherent";
    case LawKind::squeezed: return "squeezed";
    case LawKind::residual: return "residual";
    case LawKind::off: return "off";
  }
  return "off";
}

std::string to_string(StateKind state) { return state == StateKind::coherent ? "coherent" : "squeezed"; }

std::string to_string(Stage stage) {
  switch (stage) {
    case Stage::ground: return "ground";
    case Stage::classical: return "classical";
    case Stage::envelope: return "envelope";
    case Stage::synth: return "synth";
    case Stage::propagate: return "propagate";
    case Stage::nelson: return "nelson";
    case Stage::run: return "run";
  }
  return "run";
}

Scenario parse_scenario_text(const std::string& text, const std::string& origin, const fs::path& base_dir) {
  pt::ptree tree;
  std::istringstream in(text);
  try {
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    fail(ErrorCode::parse_error, origin + ":" + std::to_string(e.line()) + ": " + e.message());
  }
  Scenario s;
  s.base_dir = base_dir;
  bool has_potential = false;
  for (const auto& [section, body] : tree) {
    if (body.empty()) invalid(section, "key outside of any section");
    if (section == "potential") has_potential = true;
    for (const auto& [key, value] : body) {
      const std::string field = section + "." + key;
      const auto it = setters().find(field);
      if (it == setters().end()) invalid(field, "unknown key");
      it->second(s, field, value.data());
    }
  }
  if (!has_potential) invalid("potential", "missing [potential] section");
  validate(s);
  return s;
}

Scenario parse_scenario(const fs::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::io_error, "cannot read " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_scenario_text(buf.str(), path.string(), path.parent_path());
}

void validate(const Scenario& s) {
  if (s.name.empty()) invalid("scenario.name", "must not be empty");
  if (!(s.units.hbar > 0)) invalid("units.hbar", "must be positive");
  if (!(s.units.mass > 0)) invalid("units.mass", "must be positive");
  const Index n = s.grid.n_points;
  if (n < 64 || (n & (n - 1)) != 0) invalid("grid.n_points", "must be a power of two >= 64");
  if (!(s.grid.x_max > s.grid.x_min)) invalid("grid.x_max", "must exceed grid.x_min");

  const auto& p = s.potential;
  if (p.family.empty()) invalid("potential.family", "missing");
  if (p.family == "harmonic" || p.family == "free") {
    if (!(p.omega > 0)) invalid("potential.omega", "must be positive");
  } else if (p.family == "quartic") {
    if (!(p.omega > 0)) invalid("potential.omega", "must be positive");
    if (!(p.lambda >= 0)) invalid("potential.lambda", "must be non-negative");
  } else if (p.family == "double-well") {
    if (!(p.a > 0)) invalid("potential.a", "must be positive");
    if (!(p.b > 0)) invalid("potential.b", "must be positive");
  } else if (p.family == "morse") {
    if (!(p.depth > 0)) invalid("potential.depth", "must be positive");
    if (!(p.alpha > 0)) invalid("potential.alpha", "must be positive");
  } else if (p.family == "tabulated") {
    if (p.table.empty()) invalid("potential.table", "required for the tabulated family");
  } else {
    invalid("potential.family",
            "unknown family '" + p.family + "' (harmonic, quartic, double-well, morse, tabulated, free)");
  }

  if (!(s.ground.dtau > 0)) invalid("ground.dtau", "must be positive");
  if (!(s.ground.tol > 0)) invalid("ground.tol", "must be positive");

  if (s.initial.sigma_init && !(*s.initial.sigma_init > 0)) invalid("initial.sigma_init", "must be positive");
  if (!(s.initial.sigma_scale > 0)) invalid("initial.sigma_scale", "must be positive");
  if (s.initial.state == StateKind::coherent && (s.initial.sigma_init || s.initial.sigma_scale != 1.0 ||
                                                 s.initial.sigma_dot_init != 0.0)) {
    invalid("initial.state", "coherent states keep sigma0; drop the sigma settings or use state = squeezed");
  }

  const LawKind law = s.control.law;
  if (law == LawKind::coherent && s.initial.state != StateKind::coherent) {
    invalid("control.law", "the coherent law steers coherent states only");
  }
  if (law == LawKind::squeezed && s.initial.state != StateKind::squeezed) {
    invalid("control.law", "the squeezed law steers squeezed states only");
  }
  if (s.control.sigma_source != "envelope" && s.control.sigma_source != "prescribed") {
    invalid("control.sigma_source", "must be envelope or prescribed");
  }
  if (s.control.sigma_source == "prescribed" && s.control.sigma_csv.empty()) {
    invalid("control.sigma_csv", "required when sigma_source = prescribed");
  }
  if (s.control.unscaled_form && law != LawKind::squeezed) {
    invalid("control.unscaled_form", "applies to the squeezed law only");
  }

  if (!(s.run.dt > 0)) invalid("run.dt", "must be positive");
  if (!(s.run.T >= s.run.dt)) invalid("run.T", "must be at least run.dt");
  if (s.run.sample_every < 1) invalid("run.sample_every", "must be >= 1");
  if (s.control.horizon) {
    if (!(*s.control.horizon > 0)) invalid("control.horizon", "must be positive");
    if (s.run.T > *s.control.horizon * (1 + 1e-12)) {
      invalid("run.T", "exceeds the control horizon " + fmt(*s.control.horizon));
    }
  }

  if (s.nelson.enabled && s.nelson.n_particles < 1000) invalid("nelson.n_particles", "must be >= 1000");
  if (s.nelson.bins < 4) invalid("nelson.bins", "must be >= 4");
  if (s.outputs.dump_every < 1) invalid("outputs.dump_every", "must be >= 1");
}

Potential scenario_potential(const Scenario& s) {
  const auto& p = s.potential;
  if (p.family == "harmonic") return Potential::harmonic(p.omega, s.units.mass);
  if (p.family == "quartic") return Potential::quartic(p.omega, p.lambda, s.units.mass);
  if (p.family == "double-well") return Potential::double_well(p.a, p.b);
  if (p.family == "morse") return Potential::morse(p.depth, p.alpha, p.x_e);
  if (p.family == "tabulated") return Potential::from_csv(resolve(s, p.table));
  if (p.family == "free") {
    const double pad = s.grid.x_max - s.grid.x_min;
    return Potential::tabulated({s.grid.x_min - pad, s.grid.x_min, s.grid.x_max, s.grid.x_max + pad},
                                {0.0, 0.0, 0.0, 0.0});
  }
  invalid("potential.family", "unknown family '" + p.family + "'");
}

Potential seed_potential(const Scenario& s) {
  if (s.potential.family == "free") return Potential::harmonic(s.potential.omega, s.units.mass);
  return scenario_potential(s);
}

bool is_quadratic_family(const Scenario& s) {
  return s.potential.family == "harmonic" || s.potential.family == "free";
}

std::string scenario_to_ini(const Scenario& s) {
  std::ostringstream o;
  o << "[scenario]\nname = " << s.name << "\n\n";
  o << "[units]\nhbar = " << fmt(s.units.hbar) << "\nmass = " << fmt(s.units.mass) << "\n\n";
  o << "[grid]\nn_points = " << s.grid.n_points << "\nx_min = " << fmt(s.grid.x_min) << "\nx_max = " << fmt(s.grid.x_max)
    << "\n\n";
  const auto& p = s.potential;
  o << "[potential]\nfamily = " << p.family << "\n";
  if (p.family == "harmonic" || p.family == "free") o << "omega = " << fmt(p.omega) << "\n";
  if (p.family == "quartic") o << "omega = " << fmt(p.omega) << "\nlambda = " << fmt(p.lambda) << "\n";
  if (p.family == "double-well") o << "a = " << fmt(p.a) << "\nb = " << fmt(p.b) << "\n";
  if (p.family == "morse") {
    o << "depth = " << fmt(p.depth) << "\nalpha = " << fmt(p.alpha) << "\nx_e = " << fmt(p.x_e) << "\n";
  }
  if (p.family == "tabulated") o << "table = " << p.table.string() << "\n";
  o << "\n[ground]\ndtau = " << fmt(s.ground.dtau) << "\ntol = " << fmt(s.ground.tol) << "\n\n";
  o << "[initial]\nx0 = " << fmt(s.initial.x0) << "\nv0 = " << fmt(s.initial.v0) << "\nstate = " << to_string(s.initial.state)
    << "\n";
  if (s.initial.state == StateKind::squeezed) {
    if (s.initial.sigma_init) o << "sigma_init = " << fmt(*s.initial.sigma_init) << "\n";
    o << "sigma_scale = " << fmt(s.initial.sigma_scale) << "\nsigma_dot_init = " << fmt(s.initial.sigma_dot_init) << "\n";
  }
  o << "\n[control]\nlaw = " << to_string(s.control.law) << "\ngauge = " << gauge_name(s.control.gauge)
    << "\nsigma_source = " << s.control.sigma_source << "\n";
  if (!s.control.sigma_csv.empty()) o << "sigma_csv = " << s.control.sigma_csv.string() << "\n";
  if (s.control.unscaled_form) o << "unscaled_form = true\n";
  if (s.control.horizon) o << "horizon = " << fmt(*s.control.horizon) << "\n";
  o << "\n[run]\ndt = " << fmt(s.run.dt) << "\nT = " << fmt(s.run.T) << "\nsample_every = " << s.run.sample_every
    << "\n\n";
  o << "[nelson]\nenabled = " << (s.nelson.enabled ? "true" : "false") << "\nn_particles = " << s.nelson.n_particles
    << "\nseed = " << s.nelson.seed << "\nstream = " << s.nelson.stream << "\nbins = " << s.nelson.bins << "\n\n";
  o << "[outputs]\ndir = " << s.outputs.dir.string() << "\ndump_states = " << (s.outputs.dump_states ? "true" : "false")
    << "\ndump_every = " << s.outputs.dump_every << "\ndump_potential = " << (s.outputs.dump_potential ? "true" : "false")
    << "\ndump_shape = " << (s.outputs.dump_shape ? "true" : "false") << "\n";
  return o.str();
}

// ---------------------------------------------------------------------------
// Report

bool Report::ok() const {
  if (!error.empty()) return false;
  return std::all_of(checks.begin(), checks.end(), [](const CheckRecord& c) { return c.ok; });
}

namespace {

json finite_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

double number_or_nan(const json& j) { return j.is_number() ? j.get<double>() : std::nan(""); }

}  // namespace

std::string Report::to_json() const {
  json j;
  j["scenario"] = scenario;
  j["stage"] = stage;
  j["ok"] = ok();
  j["error"] = error.empty() ? json(nullptr) : json(error);
  j["checks"] = json::array();
  for (const auto& c : checks) {
    j["checks"].push_back({{"name", c.name},
                           {"measured", finite_or_null(c.measured)},
                           {"bound", finite_or_null(c.bound)},
                           {"relation", c.relation},
                           {"expected", c.expected},
                           {"pass", c.pass},
                           {"ok", c.ok},
                           {"detail", c.detail}});
  }
  j["files"] = json::array();
  for (const auto& f : files) {
    j["files"].push_back({{"path", f.path}, {"columns", f.columns}, {"description", f.description}});
  }
  j["summary"] = json::object();
  for (const auto& [k, v] : summary) j["summary"][k] = finite_or_null(v);
  j["config"] = scenario_text;
  return j.dump(2) + "\n";
}

Report Report::from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    fail(ErrorCode::parse_error, std::string("report: ") + e.what());
  }
  try {
    Report r;
    r.scenario = j.at("scenario").get<std::string>();
    r.stage = j.at("stage").get<std::string>();
    if (j.contains("error") && j["error"].is_string()) r.error = j["error"].get<std::string>();
    for (const auto& c : j.at("checks")) {
      CheckRecord rec;
      rec.name = c.at("name").get<std::string>();
      rec.measured = number_or_nan(c.at("measured"));
      rec.bound = number_or_nan(c.at("bound"));
      rec.relation = c.at("relation").get<std::string>();
      rec.expected = c.at("expected").get<std::string>();
      rec.pass = c.at("pass").get<bool>();
      rec.ok = c.at("ok").get<bool>();
      rec.detail = c.value("detail", "");
      r.checks.push_back(rec);
    }
    for (const auto& f : j.at("files")) {
      r.files.push_back({f.at("path").get<std::string>(), f.at("columns").get<std::vector<std::string>>(),
                         f.value("description", "")});
    }
    for (const auto& [k, v] : j.at("summary").items()) r.summary[k] = number_or_nan(v);
    r.scenario_text = j.value("config", "");
    return r;
  } catch (const json::exception& e) {
    fail(ErrorCode::parse_error, std::string("report: ") + e.what());
  }
}

std::optional<Report> read_report(const fs::path& path) {
  const fs::path file = fs::is_directory(path) ? path / "report.json" : path;
  std::ifstream in(file);
  if (!in) return std::nullopt;
  std::stringstream buf;
  buf << in.rdbuf();
  return Report::from_json(buf.str());
}

int verify_suite(const std::vector<SuiteEntry>& entries, std::ostream& out) {
  int code = 0;
  char line[256];
  std::snprintf(line, sizeof line, "%-34s %-10s %6s %6s  %s\n", "scenario", "stage", "checks", "bad", "verdict");
  out << line;
  for (const auto& [name, r] : entries) {
    if (!r) {
      std::snprintf(line, sizeof line, "%-34s %-10s %6s %6s  MISSING\n", name.c_str(), "-", "-", "-");
      out << line;
      code = 2;
      continue;
    }
    const auto bad = std::count_if(r->checks.begin(), r->checks.end(), [](const CheckRecord& c) { return !c.ok; });
    const bool ok = r->ok();
    std::snprintf(line, sizeof line, "%-34s %-10s %6zu %6td  %s\n", r->scenario.c_str(), r->stage.c_str(),
                  r->checks.size(), bad, ok ? "OK" : (r->error.empty() ? "FAIL" : "ERROR"));
    out << line;
    for (const auto& c : r->checks) {
      if (c.ok) continue;
      std::snprintf(line, sizeof line, "    %s: %.4e %s %.3g (expected %s)\n", c.name.c_str(), c.measured,
                    c.relation.c_str(), c.bound, c.expected.c_str());
      out << line;
    }
    if (!r->error.empty()) out << "    " << r->error << "\n";
    if (!ok && code == 0) code = 1;
  }
  return code;
}

// ---------------------------------------------------------------------------
// Pipeline

namespace {

class CsvWriter {
 public:
  CsvWriter(const fs::path& path, const std::vector<std::string>& columns) : out_(path) {
    if (!out_) fail(ErrorCode::io_error, "cannot write " + path.string());
    for (std::size_t i = 0; i < columns.size(); ++i) out_ << (i ? "," : "") << columns[i];
    out_ << "\n";
  }

  void row(std::initializer_list<double> values) {
    bool first = true;
    for (double v : values) {
      out_ << (first ? "" : ",") << fmt(v);
      first = false;
    }
    out_ << "\n";
  }

  void close() {
    out_.close();
    if (!out_) fail(ErrorCode::io_error, "write failed");
  }

 private:
  std::ofstream out_;
};

CheckRecord make_check(std::string name, double measured, double bound, std::string expected, std::string detail = {},
                       std::string relation = "<=") {
  CheckRecord c;
  c.name = std::move(name);
  c.measured = measured;
  c.bound = bound;
  c.relation = std::move(relation);
  c.expected = std::move(expected);
  c.pass = c.relation == "<=" ? measured <= bound : measured >= bound;
  c.ok = c.expected == "info" || (c.pass == (c.expected == "pass"));
  c.detail = std::move(detail);
  return c;
}

struct Pipeline {
  Pipeline(const Scenario& scenario, const RunOptions& options, fs::path dir)
      : s(scenario), opts(options), out(std::move(dir)) {}

  const Scenario& s;
  const RunOptions& opts;
  fs::path out;
  Report report;

  Grid1D grid;
  Potential pot = Potential::harmonic(1.0);
  Potential seed = Potential::harmonic(1.0);
  std::shared_ptr<const ShapeFunction> shape;
  std::shared_ptr<const ClassicalTrajectory> traj;
  std::shared_ptr<const EnvelopeTrajectory> env;
  std::shared_ptr<const ControlPotential> control;
  std::optional<PropagationRun> run;
  std::vector<EnsembleStats> ensemble;

  void add_file(const std::string& name, std::vector<std::string> columns, std::string description) {
    report.files.push_back({name, std::move(columns), std::move(description)});
  }

  double sigma_init() const {
    return s.initial.sigma_init.value_or(s.initial.sigma_scale * shape->sigma0);
  }

  void ground() {
    grid = make_grid(s.grid.n_points, s.grid.x_min, s.grid.x_max);
    pot = scenario_potential(s);
    seed = seed_potential(s);
    const StationaryState state = ground_state(seed, grid, s.ground.dtau, s.ground.tol, s.units);
    shape = std::make_shared<const ShapeFunction>(extract_shape(state));
    report.summary["E0"] = shape->E0;
    report.summary["sigma0"] = shape->sigma0;
    report.summary["K2"] = shape->K2;
    report.summary["mean_x0"] = shape->mean_x;
    report.summary["ground_residual"] = state.residual;

    // Finite-difference oracle, Richardson-extrapolated in the spacing.
    const double e_n = eigensolve_fd(seed, grid, 1, s.units).front().energy;
    const double e_2n =
        eigensolve_fd(seed, make_grid(2 * s.grid.n_points, s.grid.x_min, s.grid.x_max), 1, s.units).front().energy;
    const double oracle = (4.0 * e_2n - e_n) / 3.0;
    report.summary["E0_fd"] = oracle;
    report.checks.push_back(make_check("ground-energy-oracle", std::abs(shape->E0 - oracle), 1e-5, "pass",
                                       "split-operator ground energy vs extrapolated finite differences"));

    if (s.outputs.dump_shape || opts.stop_after == Stage::ground) {
      CsvWriter w(out / "shape.csv", {"xi", "R", "G", "rho"});
      for (Index j = 0; j < shape->xi_grid.size(); ++j) {
        w.row({shape->xi_grid.nodes()[j], shape->R[j], shape->G[j], shape->rho[j]});
      }
      w.close();
      add_file("shape.csv", {"xi", "R", "G", "rho"}, "adimensional seed profile");
    }
  }

  void classical() {
    traj = std::make_shared<const ClassicalTrajectory>(integrate_trajectory(
        pot, s.initial.x0, s.initial.v0, s.run.dt, s.horizon(), s.units, EscapeBounds{s.grid.x_min, s.grid.x_max}));
    CsvWriter w(out / "trajectory.csv", {"t", "x_cl", "v_cl", "a_cl", "action"});
    for (const auto& p : traj->samples()) w.row({p.t, p.x, p.v, p.a, p.action});
    w.close();
    add_file("trajectory.csv", {"t", "x_cl", "v_cl", "a_cl", "action"}, "classical center trajectory");
  }

  void envelope() {
    if (s.initial.state == StateKind::squeezed) {
      if (s.control.sigma_source == "prescribed") {
        env = std::make_shared<const EnvelopeTrajectory>(
            EnvelopeTrajectory::from_csv(resolve(s, s.control.sigma_csv), s.run.dt, shape->K2));
        if (env->t_end() < traj->t_end() - 1e-9) invalid("control.sigma_csv", "schedule ends before the horizon");
      } else {
        env = std::make_shared<const EnvelopeTrajectory>(
            integrate_envelope(pot, *shape, *traj, sigma_init(), s.initial.sigma_dot_init));
      }
      CsvWriter w(out / "envelope.csv", {"t", "sigma", "sigma_dot", "sigma_ddot"});
      for (const auto& e : env->samples()) w.row({e.t, e.sigma, e.sigma_dot, e.sigma_ddot});
      w.close();
      add_file("envelope.csv", {"t", "sigma", "sigma_dot", "sigma_ddot"}, "packet dispersion schedule");
    }

    // The packet family must stay on the grid for the whole horizon.
    for (const auto& c : traj->samples()) {
      const double width = env ? env->at(std::min(c.t, env->t_end())).sigma : shape->sigma0;
      if (c.x - 6.0 * width < s.grid.x_min || c.x + 6.0 * width > s.grid.x_max) {
        invalid("grid", "packet at x = " + fmt(c.x) + " with width " + fmt(width) + " leaves [" + fmt(s.grid.x_min) +
                            ", " + fmt(s.grid.x_max) + "] at t = " + fmt(c.t));
      }
    }
  }

  void synth() {
    switch (s.control.law) {
      case LawKind::coherent:
        control = std::make_shared<const ControlPotential>(ControlPotential::coherent(seed, shape, traj, s.control.gauge));
        break;
      case LawKind::squeezed:
        control = std::make_shared<const ControlPotential>(
            ControlPotential::squeezed(seed, shape, traj, env, s.control.gauge, s.control.unscaled_form));
        break;
      case LawKind::residual:
        control = std::make_shared<const ControlPotential>(
            ControlPotential::residual(seed, shape, traj, env, s.control.gauge));
        break;
      case LawKind::off:
        break;
    }
    if (s.control.law == LawKind::coherent) {
      double worst = 0.0;
      for (double t : {0.0, 0.5 * traj->t_end(), traj->t_end()}) {
        worst = std::max(worst, std::abs(center_consistency_check(*shape, seed, *traj, t).residual));
      }
      report.checks.push_back(make_check("center-balance", worst, 1e-6, "pass",
                                         "force and osmotic sides of the center balance agree"));
    }
    if ((s.outputs.dump_potential || opts.stop_after == Stage::synth) && control) {
      CsvWriter w(out / "potential.csv", {"t", "x", "V"});
      const long long stride = s.run.sample_every * s.outputs.dump_every;
      for (long long k = 0; k <= s.n_steps(); k += stride) {
        const double t = static_cast<double>(k) * s.run.dt;
        const RealField v = control->sample(grid, t);
        for (Index j = 0; j < grid.size(); ++j) w.row({t, grid.nodes()[j], v[j]});
      }
      w.close();
      add_file("potential.csv", {"t", "x", "V"}, "control potential slices");
    }
  }

  void propagate() {
    const ComplexField psi0 = s.initial.state == StateKind::coherent
                                  ? build_coherent_state(*shape, *traj, 0.0, grid)
                                  : build_squeezed_state(*shape, *traj, *env, 0.0, grid);
    auto driving = control ? std::make_shared<const DrivingPotential>(control)
                           : std::make_shared<const DrivingPotential>(pot);
    run = tdse_propagate(grid, psi0, driving, s.run.dt, s.n_steps(), s.run.sample_every, s.units);
    report.summary["n_steps"] = static_cast<double>(run->n_steps);
    report.summary["kinetic_phase_per_step"] = run->effective_phase_per_step;

    const std::vector<std::string> cols = {"t",       "mean_x",   "mean_p", "delta_x", "delta_p",        "delta_u",
                                           "delta_v", "anticomm", "norm",   "energy",  "ehrenfest_gap", "leakage"};
    CsvWriter w(out / "observables.csv", cols);
    for (const auto& r : run->records) {
      w.row({r.t, r.mean_x, r.mean_p, r.delta_x, r.delta_p, r.delta_u, r.delta_v, r.anticomm, r.norm, r.energy,
             r.ehrenfest_gap, r.boundary_leakage});
    }
    w.close();
    add_file("observables.csv", cols, "moments of the propagated state at recorded steps");

    if (s.outputs.dump_states) {
      fs::create_directories(out / "states");
      std::size_t next = 0;
      long long dumped = 0;
      const auto dump = [&](long long step, const ComplexField& psi) {
        char name[64];
        std::snprintf(name, sizeof name, "states/state_%08lld.csv", step);
        CsvWriter sw(out / name, {"x", "re_psi", "im_psi", "rho"});
        for (Index j = 0; j < grid.size(); ++j) {
          sw.row({grid.nodes()[j], psi[j].real(), psi[j].imag(), std::norm(psi[j])});
        }
        sw.close();
        ++dumped;
      };
      dump(0, run->psi0);
      run->replay([&](long long k, double, const ComplexField&, const ComplexField& psi) {
        while (next < run->record_steps.size() && run->record_steps[next] < k + 1) ++next;
        if (next < run->record_steps.size() && run->record_steps[next] == k + 1 &&
            (next % static_cast<std::size_t>(s.outputs.dump_every) == 0 || k + 1 == run->n_steps)) {
          dump(k + 1, psi);
        }
      });
      add_file("states/state_<step>.csv", {"x", "re_psi", "im_psi", "rho"}, "state snapshots");
      report.summary["states_dumped"] = static_cast<double>(dumped);
    }
  }

  void nelson() {
    const std::uint64_t seed_value = opts.seed.value_or(s.nelson.seed);
    NelsonOptions nopt;
    nopt.threads = opts.threads;
    ensemble = nelson_run(*run, s.nelson.n_particles, RngStream(seed_value, s.nelson.stream), s.nelson.bins, nopt);
    CsvWriter w(out / "ensemble.csv", {"t", "emp_mean", "emp_std", "l1_distance"});
    long long flagged = 0;
    for (const auto& e : ensemble) {
      w.row({e.t, e.emp_mean, e.emp_std, e.l1_distance});
      flagged = std::max(flagged, e.flagged);
    }
    w.close();
    add_file("ensemble.csv", {"t", "emp_mean", "emp_std", "l1_distance"}, "Nelson ensemble statistics");
    report.summary["nelson_seed"] = static_cast<double>(seed_value);
    report.summary["nelson_flagged"] = static_cast<double>(flagged);
  }

  void checks();
};

void Pipeline::checks() {
  const auto& rec = run->records;
  const double hbar = s.units.hbar, m = s.units.mass;
  const bool on = s.control.law != LawKind::off;
  // Without control only the exactly solvable cases keep the family.
  const bool family_kept =
      on || s.potential.family == "harmonic" || (s.potential.family == "free" && s.initial.state == StateKind::squeezed);
  const std::string keep = family_kept ? "pass" : "fail";

  report.checks.push_back(make_check("norm-drift", run->max_norm_drift, 1e-9, "pass"));
  report.checks.push_back(make_check("boundary-leakage", run->max_leakage, 1e-8, "pass"));

  double chain = std::numeric_limits<double>::infinity();
  double decomposition = 0.0;
  for (const auto& r : rec) {
    const double upper = r.delta_x * r.delta_p - m * r.delta_x * r.delta_u;
    const double lower = m * r.delta_x * r.delta_u - 0.5 * hbar;
    chain = std::min({chain, upper, lower});
    const double dp2 = r.delta_p * r.delta_p;
    const double split = m * m * (r.delta_u * r.delta_u + r.delta_v * r.delta_v);
    decomposition = std::max(decomposition, std::abs(dp2 - split) / std::max(dp2, 1e-300));
  }
  report.checks.push_back(make_check("uncertainty-chain", chain, -1e-10, "pass",
                                     "min of dx dp - m dx du and m dx du - hbar/2", ">="));
  report.checks.push_back(make_check("momentum-decomposition", decomposition, 1e-8, "pass",
                                     "relative gap between dp^2 and m^2 (du^2 + dv^2)"));

  // d(dx^2)/dt against the anticommutator, on equally spaced records only.
  double anticomm = 0.0;
  std::size_t uniform = rec.size();
  if (rec.size() >= 2 && run->record_steps.back() - run->record_steps[rec.size() - 2] != run->sample_every) {
    uniform = rec.size() - 1;
  }
  if (uniform >= 5) {
    const double h = rec[1].t - rec[0].t;
    const auto var = [&](std::size_t j) { return rec[j].delta_x * rec[j].delta_x; };
    for (std::size_t i = 2; i + 2 < uniform; ++i) {
      const double d = (var(i - 2) - 8.0 * var(i - 1) + 8.0 * var(i + 1) - var(i + 2)) / (12.0 * h);
      anticomm = std::max(anticomm, std::abs(d - rec[i].anticomm / m));
    }
    report.checks.push_back(make_check("anticommutator", anticomm, 1e-5, "pass",
                                       "d(dx^2)/dt against <{x, p}>/m, five-point stencil"));
  }

  double center = 0.0;
  for (const auto& r : rec) center = std::max(center, std::abs(r.mean_x - traj->at(r.t).x));
  report.checks.push_back(make_check("center-tracking", center, 1e-4, on ? "pass" : "info",
                                     "max |<x> - x_cl| over recorded steps"));
  report.summary["max_center_error"] = center;

  double width = 0.0;
  for (const auto& r : rec) {
    const double target = env ? env->at(r.t).sigma : shape->sigma0;
    width = std::max(width, std::abs(r.delta_x - target));
  }
  report.summary["max_width_error"] = width;
  if (s.initial.state == StateKind::coherent) {
    report.checks.push_back(
        make_check("dispersion-constancy", width, 1e-4, keep, "max |dx - sigma0| over recorded steps"));
    if (s.potential.family == "harmonic") {
      report.checks.push_back(make_check("harmonic-dispersion-drift", width, 1e-6, "pass"));
      double saturation = 0.0;
      for (const auto& r : rec) saturation = std::max(saturation, std::abs(r.delta_x * r.delta_p - 0.5 * hbar));
      report.checks.push_back(make_check("uncertainty-saturation", saturation, 1e-6, "pass",
                                         "max |dx dp - hbar/2| for the Gaussian coherent state"));
    }
  } else {
    report.checks.push_back(make_check("dispersion-tracking", width, 1e-4, keep,
                                       "max |dx - sigma(t)| against the envelope schedule"));
    double squeeze = 0.0;
    for (const auto& r : rec) {
      const double sigma = env->at(r.t).sigma;
      squeeze = std::max(squeeze, std::abs(4.0 * m * m * r.delta_u * r.delta_u * sigma * sigma /
                                               (hbar * hbar * shape->K2) -
                                           1.0));
    }
    report.checks.push_back(make_check("stochastic-squeezing", squeeze, 1e-4, family_kept ? "pass" : "info",
                                       "relative gap between du sigma and hbar K / 2m"));
  }

  if (!ensemble.empty()) {
    const double n = static_cast<double>(s.nelson.n_particles);
    double mean_gap = 0.0, std_gap = 0.0, l1 = 0.0;
    for (std::size_t i = 0; i < ensemble.size() && i < rec.size(); ++i) {
      const auto& e = ensemble[i];
      const auto& r = rec[i];
      mean_gap = std::max(mean_gap, std::abs(e.emp_mean - r.mean_x) * std::sqrt(n) / r.delta_x);
      std_gap = std::max(std_gap, std::abs(e.emp_std / r.delta_x - 1.0) * std::sqrt(n));
      l1 = std::max(l1, e.l1_distance);
    }
    report.checks.push_back(make_check("nelson-mean", mean_gap, 4.0, "pass",
                                       "sqrt(n) |mean - <x>| / dx, worst recorded step"));
    report.checks.push_back(make_check("nelson-std", std_gap, 5.0, "pass", "sqrt(n) |std / dx - 1|"));
    report.checks.push_back(make_check("nelson-l1", l1, 0.02 * std::sqrt(1e5 / n), "pass",
                                       "histogram against |psi|^2 in L1"));
  }
}

}  // namespace

Report run_scenario(const Scenario& s, const RunOptions& options) {
  validate(s);
  Pipeline p(s, options, options.out_dir.value_or(s.outputs.dir));
  p.report.scenario = s.name;
  p.report.scenario_text = scenario_to_ini(s);
  std::error_code ec;
  fs::create_directories(p.out, ec);
  if (ec) fail(ErrorCode::io_error, "cannot create " + p.out.string() + ": " + ec.message());

  const auto write_report = [&] {
    std::ofstream o(p.out / "report.json");
    o << p.report.to_json();
    if (!o) fail(ErrorCode::io_error, "cannot write " + (p.out / "report.json").string());
  };

  Stage current = Stage::ground;
  const auto step = [&](Stage stage, auto&& body) {
    current = stage;
    p.report.stage = to_string(stage);
    body();
    return options.stop_after != stage;
  };

  try {
    const bool go = step(Stage::ground, [&] { p.ground(); }) && step(Stage::classical, [&] { p.classical(); }) &&
                    step(Stage::envelope, [&] { p.envelope(); }) && step(Stage::synth, [&] { p.synth(); }) &&
                    step(Stage::propagate, [&] { p.propagate(); }) &&
                    step(Stage::nelson, [&] {
                      if (s.nelson.enabled || options.stop_after == Stage::nelson) p.nelson();
                    });
    if (go) {
      p.report.stage = to_string(Stage::run);
      p.checks();
    }
  } catch (const Error& e) {
    p.report.error = e.what();
    write_report();
    if (e.code() == ErrorCode::validation_error || e.code() == ErrorCode::io_error ||
        e.code() == ErrorCode::parse_error) {
      throw;
    }
    fail(e.code(), "stage " + to_string(current) + ": " + e.detail());
  }
  write_report();
  return p.report;
}

}  // namespace wavectl
