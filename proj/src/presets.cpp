#include <sstream>

#include "wavectl/error.hpp"
#include "wavectl/scenario.hpp"

namespace wavectl {

namespace {

struct Family {
  const char* name;
  const char* params;
  double x0;
  double period;
  double sigma_scale;
  const char* grid;
  double dt;
  int sample_every;
};

// Periods are those of the classical oscillation started at x0. The Morse
// grid extends far on the soft side, where uncontrolled tails travel.
constexpr Family kFamilies[] = {
    {"harmonic", "omega = 1", 1.5, 6.283185307179586, 1.6, "n_points = 1024\nx_min = -16\nx_max = 16", 1e-3, 10},
    {"quartic", "omega = 1\nlambda = 0.1", 1.0, 5.46, 1.5, "n_points = 1024\nx_min = -16\nx_max = 16", 1e-3, 10},
    {"double-well", "a = 2\nb = 1", 1.8, 3.2, 0.6, "n_points = 1024\nx_min = -16\nx_max = 16", 5e-4, 20},
    {"morse", "depth = 25\nalpha = 0.3\nx_e = 0", 1.0, 2.96, 1.3, "n_points = 2048\nx_min = -12\nx_max = 36", 1e-3, 10},
};

std::string body(const std::string& name, const Family& f, const char* state, const char* law, double T, double dt,
                 int sample_every, bool nelson) {
  std::ostringstream o;
  o << "[scenario]\nname = " << name << "\n\n"
    << "[grid]\n" << f.grid << "\n\n"
    << "[potential]\nfamily = " << f.name << "\n" << f.params << "\n\n"
    << "[initial]\nx0 = " << f.x0 << "\nv0 = 0\nstate = " << state << "\n";
  if (std::string(state) == "squeezed") o << "sigma_scale = " << f.sigma_scale << "\n";
  o << "\n[control]\nlaw = " << law << "\n\n"
    << "[run]\ndt = " << dt << "\nT = " << T << "\nsample_every = " << sample_every << "\n\n"
    << "[nelson]\nenabled = " << (nelson ? "true" : "false") << "\n\n"
    << "[outputs]\ndir = out/" << name << "\n";
  return o.str();
}

std::vector<PresetInfo> build() {
  std::vector<PresetInfo> out;
  for (const Family& f : kFamilies) {
    for (const char* state : {"coherent", "squeezed"}) {
      for (bool on : {true, false}) {
        const std::string name = std::string(f.name) + "-" + state + (on ? "-on" : "-off");
        out.push_back({name, body(name, f, state, on ? state : "off", f.period, f.dt, f.sample_every, false)});
      }
    }
  }
  // Free spreading of a Gaussian, seeded by the harmonic ground state.
  out.push_back({"free-squeezed-off",
                 "[scenario]\nname = free-squeezed-off\n\n"
                 "[grid]\nn_points = 1024\nx_min = -16\nx_max = 16\n\n"
                 "[potential]\nfamily = free\nomega = 1\n\n"
                 "[initial]\nx0 = 0\nv0 = 0.5\nstate = squeezed\nsigma_scale = 1\n\n"
                 "[control]\nlaw = off\n\n"
                 "[run]\ndt = 1e-3\nT = 2\nsample_every = 10\n\n"
                 "[outputs]\ndir = out/free-squeezed-off\n"});
  const Family& h = kFamilies[0];
  out.push_back({"harmonic-nelson-coherent",
                 body("harmonic-nelson-coherent", h, "coherent", "coherent", h.period, 2e-3, 5, true)});
  out.push_back({"harmonic-nelson-squeezed",
                 body("harmonic-nelson-squeezed", h, "squeezed", "squeezed", h.period, 2e-3, 5, true)});
  return out;
}

}  // namespace

const std::vector<PresetInfo>& presets() {
  static const std::vector<PresetInfo> table = build();
  return table;
}

Scenario preset_scenario(const std::string& name) {
  for (const auto& p : presets()) {
    if (p.name == name) return parse_scenario_text(p.text, "preset:" + name);
  }
  fail(ErrorCode::validation_error, "preset: unknown preset '" + name + "'");
}

}  // namespace wavectl
