#include "ppcc/simulation.hpp"

#include <CLI11.hpp>

#include <glob.h>

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <mutex>
#include <sstream>
#include <thread>

namespace fs = std::filesystem;
using namespace ppcc;

namespace {

enum Exit { stabilized = 0, diverged = 2, config_error = 3, numeric_failure = 4 };

struct Options {
  std::string command;
  std::string scenario;
  std::string sweep;
  std::string out;
  std::string scenario_dir;
  std::optional<std::uint64_t> seed;
  std::optional<int> horizon;
  std::string privacy;
  std::string m_steps;
};

fs::path default_scenario_dir() {
  if (const char* env = std::getenv("PPCC_SCENARIO_DIR")) return env;
#ifdef PPCC_SCENARIO_DIR
  return PPCC_SCENARIO_DIR;
#else
  return "scenarios";
#endif
}

void apply_overrides(Scenario& sc, const Options& opt) {
  if (opt.seed) {
    sc.noise.seed = *opt.seed;
    if (!sc.pi) sc.pi_seed = *opt.seed;
  }
  if (opt.horizon) {
    if (*opt.horizon < 1) throw ConfigError("--horizon must be positive");
    sc.horizon = *opt.horizon;
  }
  if (opt.privacy == "on") sc.privacy = true;
  else if (opt.privacy == "off") sc.privacy = false;
  if (!opt.m_steps.empty()) {
    StepCount& count = sc.privacy ? sc.m2 : sc.m1;
    if (opt.m_steps == "auto") {
      count = {1, true};
    } else {
      std::size_t used = 0;
      int value = 0;
      try {
        value = std::stoi(opt.m_steps, &used);
      } catch (const std::exception&) {
        used = 0;
      }
      if (used != opt.m_steps.size() || value < (sc.privacy ? 1 : 0))
        throw ConfigError("--m-steps expects a step count or \"auto\", got '" + opt.m_steps + "'");
      count = {value, false};
    }
  }
}

fs::path output_dir(const Scenario& sc, const Options& opt) {
  fs::path root = !opt.out.empty() ? fs::path(opt.out) : !sc.output_dir.empty() ? fs::path(sc.output_dir) : fs::path("ppcc_out");
  return root / sc.name;
}

// Runs one subcommand on one scenario; returns the exit code and appends a summary to log.
int run_command(const Options& opt, const fs::path& path, std::ostream& log) {
  Scenario sc = load_scenario(path);
  apply_overrides(sc, opt);
  const fs::path dir = output_dir(sc, opt);
  const std::string tag = "[" + sc.name + "] ";

  if (opt.command == "optimize-epsilon") {
    const StochasticMatrix w = build_weights(sc.graph, sc.weight_rule);
    const EpsilonChoice choice = optimize_epsilon(w);
    write_text(dir, "epsilon.json", epsilon_json(choice, w, sc.epsilon));
    log << tag << "epsilon* = " << format_double(choice.epsilon) << ", lambda_tilde* = " << format_double(choice.lambda_tilde)
        << "\n";
    return stabilized;
  }
  if (opt.command == "compare-channels") {
    if (!sc.channel_addition) throw ConfigError(path.string() + ": compare-channels needs a channel_addition entry");
    const ChannelComparison cmp = compare_channel_addition(sc.plant, sc.channel_addition->b.col(0), sc.initial_error());
    write_text(dir, "channels.json", channel_comparison_json(cmp, sc));
    log << tag << "J without = " << format_double(cmp.j0) << ", J with = " << format_double(cmp.j1)
        << (cmp.monotone ? " (monotone)" : " (NOT monotone)") << "\n";
    return stabilized;
  }

  const PreparedRun run = prepare(sc);
  if (opt.command == "synth-gains") {
    write_text(dir, "gains.json", gains_json(run));
    std::ostringstream csv;
    write_share_log_csv(csv, run.synthesis.share_log(), sc.graph);
    write_text(dir, "share_log.csv", csv.str());
    log << tag << "fusion rounds: input " << run.synthesis.input_fusion.rounds << ", output "
        << run.synthesis.output_fusion.rounds << "\n";
    return stabilized;
  }
  if (opt.command == "bounds") {
    const BoundReport b = run.bounds ? *run.bounds : scenario_bounds(run);
    write_text(dir, "bounds.json", bounds_json(run, b));
    log << tag << "M1_bar = " << format_double(b.m1_bar.value) << (b.m1_bar.vacuous ? " (vacuous)" : "")
        << ", M2_bar = " << format_double(b.m2_bar.value) << (b.m2_bar.vacuous ? " (vacuous)" : "")
        << ", lambda = " << format_double(b.lambda) << ", lambda_tilde = " << format_double(b.lambda_tilde) << "\n";
    return stabilized;
  }
  if (opt.command == "simulate") {
    const SimTrace trace = simulate(run);
    const Verdict verdict = stabilization_verdict(trace, sc);
    std::ostringstream csv, plot;
    write_trace_csv(csv, trace);
    write_plot_csv(plot, trace);
    write_text(dir, "trace.csv", csv.str());
    write_text(dir, "plot.csv", plot.str());
    write_text(dir, "report.json", simulation_json(run, trace, verdict));
    if (run.bounds) write_text(dir, "bounds.json", bounds_json(run, *run.bounds));
    log << tag << (run.mode.variant == FusionVariant::decomposed ? "decomposed" : "plain") << " fusion, M = "
        << run.mode.steps << ": ";
    if (verdict.diverged) log << "diverged at step " << *trace.diverged_at << "\n";
    else log << (verdict.stabilized ? "stabilized" : "not stabilized") << ", tail mean error "
             << format_double(verdict.tail_mean) << "\n";
    return verdict.stabilized ? stabilized : diverged;
  }
  if (opt.command == "audit-privacy") {
    const AuditReport report = run_audit(run);
    write_text(dir, "audit.json", audit_json(report));
    if (!report.topology_condition) {
      log << tag << "every neighbor of agent " << report.target << " is visible to agent " << report.adversary
          << "; counterfactual construction refused\n";
      return stabilized;
    }
    const bool all_identical = std::all_of(report.counterfactuals.begin(), report.counterfactuals.end(),
                                           [](const AuditEntry& e) { return e.world.identical; });
    log << tag << report.counterfactuals.size() << " counterfactual worlds, adversary view "
        << (all_identical ? "identical in all" : "DIFFERS in some") << "\n";
    for (const auto& a : report.inference)
      log << tag << "  assumed pi " << a.assumed_pi << " -> theta "
          << (a.theta ? format_double(*a.theta) : std::string("inconsistent")) << "\n";
    return all_identical ? stabilized : numeric_failure;
  }
  throw ConfigError("unknown subcommand " + opt.command);
}

int guarded(const Options& opt, const fs::path& path, std::ostream& log) {
  try {
    return run_command(opt, path, log);
  } catch (const NumericError& e) {
    log << "numeric failure: " << e.what() << "\n";
    return numeric_failure;
  } catch (const Error& e) {
    log << "configuration error: " << e.what() << "\n";
    return config_error;
  } catch (const std::exception& e) {
    log << "error: " << e.what() << "\n";
    return config_error;
  }
}

std::vector<fs::path> expand_glob(const std::string& pattern) {
  glob_t g{};
  std::vector<fs::path> out;
  if (::glob(pattern.c_str(), 0, nullptr, &g) == 0)
    for (std::size_t i = 0; i < g.gl_pathc; ++i) out.emplace_back(g.gl_pathv[i]);
  globfree(&g);
  return out;
}

std::vector<fs::path> select_scenarios(const Options& opt) {
  if (!opt.sweep.empty()) {
    auto paths = expand_glob(opt.sweep);
    if (paths.empty()) throw ConfigError("--sweep '" + opt.sweep + "' matched no files");
    return paths;
  }
  if (opt.scenario.empty()) throw ConfigError("no scenario given (positional name, --scenario or --sweep)");
  const fs::path dir = opt.scenario_dir.empty() ? default_scenario_dir() : fs::path(opt.scenario_dir);
  auto matches = resolve_scenarios(opt.scenario, dir);
  if (matches.size() == 1) return matches;
  if (opt.command == "compare-channels")
    for (const auto& m : matches)
      if (load_scenario(m).channel_addition) return {m};
  std::string names;
  for (const auto& m : matches) names += " " + m.stem().string();
  throw ConfigError("'" + opt.scenario + "' is ambiguous:" + names);
}

int dispatch(const Options& opt) {
  std::vector<fs::path> paths;
  try {
    paths = select_scenarios(opt);
  } catch (const Error& e) {
    std::cerr << "configuration error: " << e.what() << "\n";
    return config_error;
  }
  std::vector<int> codes(paths.size(), 0);
  std::vector<std::string> logs(paths.size());
  if (paths.size() == 1) {
    std::ostringstream log;
    codes[0] = guarded(opt, paths[0], log);
    logs[0] = log.str();
  } else {
    std::atomic<std::size_t> next{0};
    const unsigned workers = std::max(1u, std::min<unsigned>(std::thread::hardware_concurrency(), static_cast<unsigned>(paths.size())));
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < workers; ++t)
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < paths.size(); i = next++) {
          std::ostringstream log;
          codes[i] = guarded(opt, paths[i], log);
          logs[i] = log.str();
        }
      });
    for (auto& t : pool) t.join();
  }
  for (const auto& l : logs) std::cout << l;
  return *std::max_element(codes.begin(), codes.end());
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Privacy-preserving cooperative control simulator"};
  app.require_subcommand(1);
  Options opt;

  const std::vector<std::pair<std::string, std::string>> commands{
      {"synth-gains", "Fuse Gramians and compute every agent's control and observer gains"},
      {"bounds", "Fusion step bounds, noise certificate and LQR value"},
      {"simulate", "Closed-loop simulation with CSV trace and JSON report"},
      {"audit-privacy", "Counterfactual worlds and the angle inference table"},
      {"compare-channels", "LQR value with and without the extra channel"},
      {"optimize-epsilon", "Grid search for the decomposition coupling"}};
  for (const auto& [name, help] : commands) {
    CLI::App* sub = app.add_subcommand(name, help);
    sub->add_option("name", opt.scenario, "Bundled scenario name (or unique prefix) or path");
    sub->add_option("--scenario", opt.scenario, "Scenario file or bundled name");
    sub->add_option("--sweep", opt.sweep, "Glob of scenario files run in parallel");
    sub->add_option("--out", opt.out, "Output root; files go to <out>/<scenario name>/");
    sub->add_option("--scenario-dir", opt.scenario_dir, "Directory of bundled scenarios");
    sub->add_option("--seed", opt.seed, "Noise seed (also the pi seed when pi is not listed)");
    sub->add_option("--horizon", opt.horizon, "Number of plant steps");
    sub->add_option("--privacy", opt.privacy, "Decomposed (on) or plain (off) estimate fusion")
        ->check(CLI::IsMember({"on", "off"}));
    sub->add_option("--m-steps", opt.m_steps, "Fusion rounds per step, or auto");
    sub->callback([&opt, name = name] { opt.command = name; });
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return config_error;
  }
  return dispatch(opt);
}
