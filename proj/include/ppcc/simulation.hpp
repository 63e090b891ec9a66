#pragma once

#include "ppcc/agents.hpp"
#include "ppcc/analysis.hpp"
#include "ppcc/gain_synthesis.hpp"
#include "ppcc/privacy_audit.hpp"
#include "ppcc/scenario.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

namespace ppcc {

// Gains predesign plus the resolved fusion mode for the online phase.
struct PreparedRun {
  Scenario scenario;
  StochasticMatrix w;
  PrivacyWeights pw;
  GainSynthesis synthesis;
  FusionMode mode;
  std::optional<BoundReport> bounds;  // filled when a step count was "auto"
};

PreparedRun prepare(const Scenario& sc);

// Bounds for the synthesized gains with Q0 = I.
BoundReport scenario_bounds(const PreparedRun& run);

// ceil(bound) + 1.
int steps_from_bound(const StepBound& bound);

struct SimTrace {
  Index state_dim = 0;
  Index agent_count = 0;
  std::vector<VectorXd> s;                 // horizon + 1 error states
  std::vector<std::vector<VectorXd>> z;    // per step, per agent
  std::vector<std::vector<VectorXd>> u;    // per step, per agent (u_k applied at step k)
  std::vector<double> error_norm;          // ||s_k||
  std::optional<std::int64_t> diverged_at;
  ShareLog estimate_log;                   // first log_steps plant steps of decomposed fusion

  std::int64_t rows() const { return static_cast<std::int64_t>(s.size()); }
};

// Runs in error coordinates from initial_state - desired_state with z_0 = 0. Rows after a
// divergence hold NaN.
SimTrace simulate(const PreparedRun& run, std::int64_t log_steps = 0);

struct Verdict {
  bool stabilized = false;
  bool diverged = false;
  double tail_mean = 0;  // mean ||s_k|| over the final window
};

Verdict stabilization_verdict(const SimTrace& trace, const Scenario& sc);

void write_trace_csv(std::ostream& out, const SimTrace& trace);
// Long format (step, series, value).
void write_plot_csv(std::ostream& out, const SimTrace& trace);

struct AuditEntry {
  double alt_pi = 0;
  CounterfactualWorld world;
};

struct AuditReport {
  Index target = 0, adversary = 0;
  bool topology_condition = false;
  std::vector<AuditEntry> counterfactuals;
  std::vector<AngleInference> inference;
  double true_pi = 0;
};

AuditReport run_audit(const PreparedRun& run);

// JSON renderings of the module reports.
std::string gains_json(const PreparedRun& run);
std::string bounds_json(const PreparedRun& run, const BoundReport& bounds);
std::string simulation_json(const PreparedRun& run, const SimTrace& trace, const Verdict& verdict);
std::string audit_json(const AuditReport& report);
std::string channel_comparison_json(const ChannelComparison& cmp, const Scenario& sc);
std::string epsilon_json(const EpsilonChoice& choice, const StochasticMatrix& w, double configured_epsilon);

// Writes text to dir/name, creating dir.
void write_text(const std::filesystem::path& dir, const std::string& name, const std::string& text);

}  // namespace ppcc
