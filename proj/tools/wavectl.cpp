// Command-line driver: runs scenario stages and summarizes reports.
//
// Exit codes: 0 all checks ok, 1 a check or a numerical stage failed,
// 2 configuration, parse or I/O problem (including missing reports).

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "wavectl/error.hpp"
#include "wavectl/scenario.hpp"

namespace fs = std::filesystem;
using namespace wavectl;

namespace {

struct Common {
  std::string config;
  std::string preset;
  std::string out;
  std::uint64_t seed = 0;
  int threads = 0;
};

bool is_infrastructure(ErrorCode code) {
  return code == ErrorCode::validation_error || code == ErrorCode::parse_error || code == ErrorCode::io_error;
}

void print_report(const Report& r) {
  std::printf("scenario %s: stage %s\n", r.scenario.c_str(), r.stage.c_str());
  for (const auto& c : r.checks) {
    const char* verdict = c.expected == "info" ? "INFO" : (c.ok ? "OK  " : "BAD ");
    std::printf("  %s %-28s %12.4e %s %-10.3g expected %-4s %s\n", verdict, c.name.c_str(), c.measured,
                c.relation.c_str(), c.bound, c.expected.c_str(), c.pass ? "(met)" : "(not met)");
  }
  if (!r.error.empty()) std::printf("  ERROR %s\n", r.error.c_str());
}

Scenario load(const Common& c) {
  if (c.config.empty() == c.preset.empty()) {
    fail(ErrorCode::validation_error, "give exactly one of --config or --preset");
  }
  return c.preset.empty() ? parse_scenario(c.config) : preset_scenario(c.preset);
}

int run_stage(const Common& c, Stage stage, bool seed_given) {
  const Scenario s = load(c);
  RunOptions opts;
  opts.stop_after = stage;
  if (!c.out.empty()) opts.out_dir = fs::path(c.out);
  if (seed_given) opts.seed = c.seed;
  opts.threads = c.threads;
  try {
    const Report r = run_scenario(s, opts);
    print_report(r);
    return r.ok() ? 0 : 1;
  } catch (const Error& e) {
    if (is_infrastructure(e.code())) throw;
    std::fprintf(stderr, "wavectl: %s\n", e.what());
    return 1;
  }
}

// Runs every preset when no reports are given.
int verify(const std::vector<std::string>& reports, const std::string& out_root, int threads) {
  std::vector<SuiteEntry> entries;
  if (reports.empty()) {
    const fs::path root = out_root.empty() ? fs::path("out") : fs::path(out_root);
    for (const auto& p : presets()) {
      RunOptions opts;
      opts.out_dir = root / p.name;
      opts.threads = threads;
      try {
        entries.push_back({p.name, run_scenario(preset_scenario(p.name), opts)});
      } catch (const Error& e) {
        if (is_infrastructure(e.code())) throw;
        entries.push_back({p.name, read_report(root / p.name)});
      }
    }
  } else {
    for (const auto& path : reports) entries.push_back({path, read_report(path)});
  }
  return verify_suite(entries, std::cout);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Steer wave packets of anharmonic potentials along classical trajectories"};
  app.require_subcommand(1);

  Common common;
  const std::pair<const char*, Stage> stages[] = {
      {"ground", Stage::ground},       {"classical", Stage::classical}, {"envelope", Stage::envelope},
      {"synth", Stage::synth},         {"propagate", Stage::propagate}, {"nelson", Stage::nelson},
      {"run", Stage::run},
  };
  const char* help[] = {
      "ground state and shape function",         "classical center trajectory",
      "packet dispersion schedule",              "control potential",
      "controlled Schroedinger propagation",     "Nelson ensemble against the propagated density",
      "full pipeline with all checks",
  };
  std::vector<std::pair<CLI::App*, Stage>> stage_cmds;
  std::vector<CLI::Option*> seed_opts;
  for (std::size_t i = 0; i < std::size(stages); ++i) {
    CLI::App* sub = app.add_subcommand(stages[i].first, help[i]);
    sub->add_option("--config", common.config, "scenario INI file");
    sub->add_option("--preset", common.preset, "built-in scenario name (see `wavectl presets`)");
    sub->add_option("--out", common.out, "output directory (overrides outputs.dir)");
    seed_opts.push_back(sub->add_option("--seed", common.seed, "Nelson seed (overrides nelson.seed)"));
    sub->add_option("--threads", common.threads, "worker threads, 0 = all cores")->check(CLI::NonNegativeNumber);
    stage_cmds.emplace_back(sub, stages[i].second);
  }

  std::vector<std::string> reports;
  CLI::App* verify_cmd = app.add_subcommand("verify", "summarize reports, or run every preset when none are given");
  verify_cmd->add_option("--reports", reports, "report.json files or output directories");
  verify_cmd->add_option("--out", common.out, "root directory for preset runs");
  verify_cmd->add_option("--threads", common.threads, "worker threads, 0 = all cores");

  bool show_text = false;
  std::string preset_name;
  CLI::App* presets_cmd = app.add_subcommand("presets", "list built-in scenarios or print one");
  presets_cmd->add_option("name", preset_name, "preset to print as INI");
  presets_cmd->add_flag("--text", show_text, "print the INI text of every preset");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 2;
  }

  try {
    for (std::size_t i = 0; i < stage_cmds.size(); ++i) {
      if (stage_cmds[i].first->parsed()) return run_stage(common, stage_cmds[i].second, seed_opts[i]->count() > 0);
    }
    if (verify_cmd->parsed()) return verify(reports, common.out, common.threads);
    if (presets_cmd->parsed()) {
      for (const auto& p : presets()) {
        if (!preset_name.empty() && p.name != preset_name) continue;
        if (show_text || !preset_name.empty()) {
          std::cout << p.text << "\n";
        } else {
          std::cout << p.name << "\n";
        }
      }
      if (!preset_name.empty()) preset_scenario(preset_name);
      return 0;
    }
  } catch (const Error& e) {
    std::fprintf(stderr, "wavectl: %s\n", e.what());
    return is_infrastructure(e.code()) ? 2 : 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "wavectl: %s\n", e.what());
    return 2;
  }
  return 2;
}
