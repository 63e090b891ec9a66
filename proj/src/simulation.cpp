#include "ppcc/simulation.hpp"

#include "ppcc/linalg.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>

namespace ppcc {

using nlohmann::ordered_json;

PreparedRun prepare(const Scenario& sc) {
  PreparedRun run;
  run.scenario = sc;
  run.w = build_weights(sc.graph, sc.weight_rule);
  run.pw = sc.privacy_weights();
  run.pw.validate();
  run.synthesis = synthesize_gains(sc.plant, sc.graph, run.w, run.pw, FusionOptions{sc.delta, sc.max_rounds, 0});

  run.mode.variant = sc.privacy ? FusionVariant::decomposed : FusionVariant::plain;
  const StepCount& count = sc.privacy ? sc.m2 : sc.m1;
  if (count.automatic) {
    run.bounds = scenario_bounds(run);
    run.mode.steps = steps_from_bound(sc.privacy ? run.bounds->m2_bar : run.bounds->m1_bar);
  } else {
    run.mode.steps = count.value;
  }
  return run;
}

BoundReport scenario_bounds(const PreparedRun& run) {
  const auto& sc = run.scenario;
  return compute_bounds(sc.plant, sc.graph, run.synthesis.gains, run.w, run.pw,
                        MatrixXd::Identity(2 * sc.plant.state_dim(), 2 * sc.plant.state_dim()), sc.theta);
}

int steps_from_bound(const StepBound& bound) {
  if (!std::isfinite(bound.value) || bound.value > 1e6) throw NumericError("fusion step bound is not usable: " + std::to_string(bound.value));
  return static_cast<int>(std::ceil(bound.value)) + 1;
}

SimTrace simulate(const PreparedRun& run, std::int64_t log_steps) {
  const Scenario& sc = run.scenario;
  const PlantModel& p = sc.plant;
  const Index n = p.state_dim();
  const Index n_agents = p.agent_count();
  std::optional<NoiseSpec> noise;
  if (sc.noise.active()) noise = sc.noise;

  auto agents = make_agents(p, run.synthesis.gains, run.pw.pi);
  PlantState st{sc.initial_error(), 0};

  SimTrace trace;
  trace.state_dim = n;
  trace.agent_count = n_agents;
  const double nan = std::numeric_limits<double>::quiet_NaN();

  for (std::int64_t k = 0; k <= sc.horizon; ++k) {
    std::vector<VectorXd> u, z;
    for (const auto& a : agents) {
      u.push_back(control(a));
      z.push_back(a.z);
    }
    const double norm = st.s.norm();
    trace.s.push_back(st.s);
    trace.z.push_back(z);
    trace.u.push_back(u);
    trace.error_norm.push_back(norm);
    if (!std::isfinite(norm) || norm > sc.divergence_threshold) {
      trace.diverged_at = k;
      break;
    }
    if (k == sc.horizon) break;

    std::vector<VectorXd> y;
    for (Index i = 0; i < n_agents; ++i) y.push_back(measure(p, st, i, noise));
    st = step(p, st, u, noise);
    estimator_step(agents, sc.graph, run.w, run.pw.epsilon, run.mode, p.a(), u, y, k,
                   k < log_steps ? &trace.estimate_log : nullptr);
  }

  // Pad diverged traces so every run has horizon + 1 rows.
  while (trace.rows() < sc.horizon + 1) {
    trace.s.push_back(VectorXd::Constant(n, nan));
    std::vector<VectorXd> blank(static_cast<std::size_t>(n_agents));
    std::vector<VectorXd> blank_u;
    for (Index i = 0; i < n_agents; ++i) {
      blank[static_cast<std::size_t>(i)] = VectorXd::Constant(n, nan);
      blank_u.push_back(VectorXd::Constant(p.b(i).cols(), nan));
    }
    trace.z.push_back(std::move(blank));
    trace.u.push_back(std::move(blank_u));
    trace.error_norm.push_back(nan);
  }
  return trace;
}

Verdict stabilization_verdict(const SimTrace& trace, const Scenario& sc) {
  Verdict v;
  v.diverged = trace.diverged_at.has_value();
  const auto rows = static_cast<std::size_t>(trace.rows());
  const auto window = std::clamp<std::size_t>(
      static_cast<std::size_t>(std::ceil(sc.verdict_window * static_cast<double>(sc.horizon))), 1, rows);
  double sum = 0.0;
  for (std::size_t k = rows - window; k < rows; ++k) sum += trace.error_norm[k];
  v.tail_mean = sum / static_cast<double>(window);
  v.stabilized = !v.diverged && std::isfinite(v.tail_mean) && v.tail_mean < sc.verdict_threshold;
  return v;
}

void write_trace_csv(std::ostream& out, const SimTrace& trace) {
  out << "k";
  for (Index j = 0; j < trace.state_dim; ++j) out << ",s" << j;
  for (Index i = 0; i < trace.agent_count; ++i)
    for (Index j = 0; j < trace.state_dim; ++j) out << ",z" << i << "_" << j;
  if (!trace.u.empty())
    for (Index i = 0; i < trace.agent_count; ++i)
      for (Index j = 0; j < trace.u.front()[static_cast<std::size_t>(i)].size(); ++j) out << ",u" << i << "_" << j;
  out << ",error_norm,status\n";
  for (std::size_t k = 0; k < trace.s.size(); ++k) {
    out << k;
    for (Index j = 0; j < trace.s[k].size(); ++j) out << ',' << format_double(trace.s[k](j));
    for (const auto& z : trace.z[k])
      for (Index j = 0; j < z.size(); ++j) out << ',' << format_double(z(j));
    for (const auto& u : trace.u[k])
      for (Index j = 0; j < u.size(); ++j) out << ',' << format_double(u(j));
    const bool bad = trace.diverged_at && static_cast<std::int64_t>(k) >= *trace.diverged_at;
    out << ',' << format_double(trace.error_norm[k]) << ',' << (bad ? "diverged" : "ok") << '\n';
  }
}

void write_plot_csv(std::ostream& out, const SimTrace& trace) {
  out << "step,series,value\n";
  for (std::size_t k = 0; k < trace.s.size(); ++k) {
    if (!std::isfinite(trace.error_norm[k])) continue;
    out << k << ",error_norm," << format_double(trace.error_norm[k]) << '\n';
    for (Index j = 0; j < trace.s[k].size(); ++j) out << k << ",s" << j << ',' << format_double(trace.s[k](j)) << '\n';
  }
}

AuditReport run_audit(const PreparedRun& run) {
  const Scenario& sc = run.scenario;
  const AuditSpec& spec = sc.audit;
  AuditReport r;
  r.target = spec.target;
  r.adversary = spec.adversary;
  r.true_pi = run.pw.pi.at(static_cast<std::size_t>(spec.target));
  r.topology_condition = check_topology_condition(sc.graph, spec.target, spec.adversary);

  ReferenceWorld ref{sc.plant, sc.graph, run.w, run.pw, run.synthesis.share_log()};
  if (sc.privacy) {
    const SimTrace trace = simulate(run, spec.estimate_steps);
    ref.log.insert(ref.log.end(), trace.estimate_log.begin(), trace.estimate_log.end());
  }
  if (r.topology_condition)
    for (double alt : spec.alt_pi)
      r.counterfactuals.push_back({alt, construct_counterfactual(ref, spec.target, spec.adversary, alt, spec.estimate_steps)});

  if (sc.graph.receives_from(spec.adversary, spec.target)) {
    const AdversaryView view = extract_view(ref.log, sc.graph, spec.target, spec.adversary);
    const ForceParametrization param{spec.force_mass, spec.cos_row, spec.sin_row};
    for (double assumed : spec.assumed_pi)
      r.inference.push_back(adversary_infer_angle(view, assumed, sc.plant.agent_count(), param));
  }
  return r;
}

namespace {

ordered_json matrix_json(const MatrixXd& m) {
  ordered_json rows = ordered_json::array();
  for (Index r = 0; r < m.rows(); ++r) {
    ordered_json row = ordered_json::array();
    for (Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

ordered_json bound_json(const StepBound& b) { return {{"value", b.value}, {"vacuous", b.vacuous}}; }

ordered_json mode_json(const FusionMode& mode) {
  return {{"variant", mode.variant == FusionVariant::decomposed ? "decomposed" : "plain"}, {"steps", mode.steps}};
}

ordered_json scenario_json(const Scenario& sc) { return ordered_json::parse(serialize_scenario(sc)); }

std::string hex(std::uint64_t h) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

double closed_loop_radius(const PreparedRun& run) {
  const auto& sc = run.scenario;
  return spectral_radius(build_closed_loop_matrix(sc.plant, run.synthesis.gains, run.w, run.pw, run.mode));
}

}  // namespace

std::string gains_json(const PreparedRun& run) {
  const PlantModel& p = run.scenario.plant;
  const MatrixXd bb = p.input_gramian();
  const MatrixXd cc = p.output_gramian();
  MatrixXd control_loop = p.a();
  MatrixXd observer_loop = p.a();
  ordered_json agents = ordered_json::array();
  double err_b = 0.0, err_c = 0.0;
  for (Index i = 0; i < p.agent_count(); ++i) {
    const auto& g = run.synthesis.gains[static_cast<std::size_t>(i)];
    control_loop += p.b(i) * g.k_gain;
    observer_loop -= g.l_gain * p.c(i);
    err_b = std::max(err_b, norm2(g.fused_b - bb));
    err_c = std::max(err_c, norm2(g.fused_c - cc));
    agents.push_back({{"agent", i},
                      {"k_gain", matrix_json(g.k_gain)},
                      {"l_gain", matrix_json(g.l_gain)},
                      {"fused_input_gramian", matrix_json(g.fused_b)},
                      {"fused_output_gramian", matrix_json(g.fused_c)}});
  }
  ordered_json j;
  j["scenario"] = run.scenario.name;
  j["pi"] = run.pw.pi;
  j["epsilon"] = run.pw.epsilon;
  j["input_fusion_rounds"] = run.synthesis.input_fusion.rounds;
  j["output_fusion_rounds"] = run.synthesis.output_fusion.rounds;
  j["max_input_gramian_error"] = err_b;
  j["max_output_gramian_error"] = err_c;
  j["control_loop_spectral_radius"] = spectral_radius(control_loop);
  j["observer_loop_spectral_radius"] = spectral_radius(observer_loop);
  j["agents"] = agents;
  return j.dump(2) + "\n";
}

std::string bounds_json(const PreparedRun& run, const BoundReport& b) {
  const Scenario& sc = run.scenario;
  ordered_json j;
  j["scenario"] = sc.name;
  j["theta"] = b.theta;
  j["lambda"] = b.lambda;
  j["lambda_tilde"] = b.lambda_tilde;
  j["v_norm_sq"] = b.v_norm_sq;
  j["lambda_min_q"] = b.lambda_min_q;
  j["lambda_max_p"] = b.lambda_max_p;
  j["psi"] = {{"plain", b.psi.psi},
              {"decomposed", b.psi.psi_tilde},
              {"decomposed_relaxed", b.psi.psi_tilde1},
              {"plain_kappa", b.psi.psi1},
              {"decomposed_kappa", b.psi.psi2}};
  j["kappa"] = {{"a", b.kappa.kappa_a}, {"b", b.kappa.kappa_b}, {"c", b.kappa.kappa_c}, {"k", b.kappa.kappa_k},
                {"l", b.kappa.kappa_l}, {"p", b.kappa.kappa_p}, {"q", b.kappa.kappa_q}};
  j["m1_bar"] = bound_json(b.m1_bar);
  j["m1_bar_kappa"] = bound_json(b.m1_bar_kappa);
  j["m2_bar"] = bound_json(b.m2_bar);
  j["m2_bar_relaxed"] = bound_json(b.m2_bar_relaxed);
  j["m2_bar_kappa"] = bound_json(b.m2_bar_kappa);
  j["m1_auto"] = steps_from_bound(b.m1_bar);
  j["m2_auto"] = steps_from_bound(b.m2_bar);
  j["mode"] = mode_json(run.mode);
  j["closed_loop_spectral_radius"] = closed_loop_radius(run);

  if (sc.noise.active()) {
    const int m2 = run.mode.variant == FusionVariant::decomposed ? run.mode.steps : sc.m2.value;
    try {
      const NoiseCertificate nc = noise_bound(sc.plant, run.synthesis.gains, build_augmented(run.w, run.pw), m2, sc.noise);
      j["noise"] = {{"m2", m2}, {"theta_breve", nc.theta_breve}, {"bound", nc.bound}};
    } catch (const NumericError& e) {
      j["noise"] = {{"m2", m2}, {"error", e.what()}};
    }
  }
  const LqrReport lqr = lqr_value(sc.plant.input_gramian(), sc.plant.a(), sc.initial_error());
  j["lqr"] = {{"j_value", lqr.j_value}, {"iterations", lqr.iterations}, {"monotone", lqr.monotone},
              {"p_riccati", matrix_json(lqr.p_riccati)}};
  return j.dump(2) + "\n";
}

std::string simulation_json(const PreparedRun& run, const SimTrace& trace, const Verdict& verdict) {
  ordered_json j;
  j["scenario"] = scenario_json(run.scenario);
  j["mode"] = mode_json(run.mode);
  j["pi"] = run.pw.pi;
  j["closed_loop_spectral_radius"] = closed_loop_radius(run);
  j["rows"] = trace.rows();
  j["diverged_at"] = trace.diverged_at ? ordered_json(*trace.diverged_at) : ordered_json(nullptr);
  j["tail_mean_error"] = std::isfinite(verdict.tail_mean) ? ordered_json(verdict.tail_mean) : ordered_json(nullptr);
  j["final_error"] = std::isfinite(trace.error_norm.back()) ? ordered_json(trace.error_norm.back()) : ordered_json(nullptr);
  j["stabilized"] = verdict.stabilized;
  return j.dump(2) + "\n";
}

std::string audit_json(const AuditReport& r) {
  ordered_json j;
  j["target"] = r.target;
  j["adversary"] = r.adversary;
  j["topology_condition"] = r.topology_condition;
  ordered_json worlds = ordered_json::array();
  for (const auto& e : r.counterfactuals)
    worlds.push_back({{"alt_pi", e.alt_pi},
                      {"absorbing_agent", e.world.absorbing_agent},
                      {"reference_hash", hex(e.world.reference_hash)},
                      {"replay_hash", hex(e.world.replay_hash)},
                      {"identical", e.world.identical},
                      {"naive_replay_differs", e.world.naive_replay_differs},
                      {"messages", e.world.replayed_view.size()},
                      {"absorbing_deviation", e.world.absorbing_deviation},
                      {"alt_input_matrix", matrix_json(e.world.alt_plant.b(r.target))}});
  j["counterfactuals"] = worlds;
  ordered_json table = ordered_json::array();
  for (const auto& a : r.inference)
    table.push_back({{"assumed_pi", a.assumed_pi},
                     {"theta", a.theta ? ordered_json(*a.theta) : ordered_json(nullptr)},
                     {"implied_cos_sq", a.implied_cos_sq},
                     {"consistent", a.theta.has_value()}});
  j["inference"] = table;
  return j.dump(2) + "\n";
}

std::string channel_comparison_json(const ChannelComparison& cmp, const Scenario& sc) {
  ordered_json j;
  j["scenario"] = sc.name;
  const VectorXd s0 = sc.initial_error();
  j["initial_state"] = std::vector<double>(s0.data(), s0.data() + s0.size());
  j["j_without"] = cmp.j0;
  j["j_with"] = cmp.j1;
  j["monotone"] = cmp.monotone;
  j["iterates_ordered"] = cmp.iterates_ordered;
  return j.dump(2) + "\n";
}

std::string epsilon_json(const EpsilonChoice& choice, const StochasticMatrix& w, double configured_epsilon) {
  ordered_json j;
  j["epsilon"] = choice.epsilon;
  j["lambda_tilde"] = choice.lambda_tilde;
  j["objective"] = choice.objective;
  j["lambda"] = second_eigenvalue(w);
  std::vector<Complex> rest = eigenvalues(w.matrix()).eigenvalues;
  rest.erase(std::min_element(rest.begin(), rest.end(),
                              [](Complex a, Complex b) { return std::abs(a - 1.0) < std::abs(b - 1.0); }));
  j["configured_epsilon"] = configured_epsilon;
  j["configured_objective"] = epsilon_objective(rest, configured_epsilon);
  return j.dump(2) + "\n";
}

void write_text(const std::filesystem::path& dir, const std::string& name, const std::string& text) {
  std::filesystem::create_directories(dir);
  std::ofstream out(dir / name, std::ios::binary);
  if (!out) throw ConfigError((dir / name).string() + ": cannot write");
  out << text;
}

}  // namespace ppcc
