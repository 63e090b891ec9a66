// End-to-end acceptance checks. One PASS/FAIL line per criterion; tolerances are fixed here.

#include "ppcc/simulation.hpp"

#include "test_util.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <functional>
#include <iostream>
#include <numbers>
#include <numeric>
#include <sstream>
#include <thread>

using namespace ppcc;

namespace {

const std::filesystem::path scenario_dir = PPCC_SCENARIO_DIR;

struct Outcome {
  bool pass = true;
  std::ostringstream detail;

  void check(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail << " [FAILED: " << what << "]";
    }
  }
};

Scenario four_robot_scenario() { return load_scenario(scenario_dir / "sec4_four_robots.json"); }

struct RunResult {
  Verdict verdict;
  double radius = 0;
  bool diverged = false;
};

RunResult run_mode(Scenario sc, bool privacy, int steps) {
  sc.privacy = privacy;
  (privacy ? sc.m2 : sc.m1) = {steps, false};
  const PreparedRun run = prepare(sc);
  const SimTrace trace = simulate(run);
  RunResult r;
  r.verdict = stabilization_verdict(trace, sc);
  r.diverged = trace.diverged_at.has_value();
  r.radius = spectral_radius(build_closed_loop_matrix(sc.plant, run.synthesis.gains, run.w, run.pw, run.mode));
  return r;
}

// Random plant with one scalar input and output per agent.
PlantModel random_plant(test::Draws& d, Index n, Index agents) {
  const MatrixXd a = test::stable_matrix(d, n, d.uniform(0.8, 1.1));
  std::vector<Channel> channels;
  for (Index i = 0; i < agents; ++i) channels.push_back({d.gaussian(n, 1), d.gaussian(1, n)});
  return PlantModel(a, std::move(channels));
}

PrivacyWeights random_privacy(test::Draws& d, Index agents) {
  PrivacyWeights pw{d.uniform(0.01, 0.66), {}};
  for (Index i = 0; i < agents; ++i) pw.pi.push_back(d.uniform(0.01, 0.99));
  return pw;
}

// 1: the four-robot scenario as configured settles below the verdict threshold.
Outcome criterion_1() {
  Outcome o;
  const Scenario sc = four_robot_scenario();
  const PreparedRun run = prepare(sc);
  const SimTrace trace = simulate(run);
  const Verdict v = stabilization_verdict(trace, sc);
  o.detail << "M2=" << run.mode.steps << " horizon=" << sc.horizon << " tail mean error=" << v.tail_mean
           << " final error=" << trace.error_norm.back();
  o.check(run.mode.variant == FusionVariant::decomposed && run.mode.steps == 20, "scenario is not M2 = 20 with privacy");
  o.check(!v.diverged, "diverged");
  o.check(v.tail_mean < 1.0, "tail mean error >= 1");
  return o;
}

// 2: plain M1 = 10 stabilizes, decomposed M2 = 10 diverges, decomposed M2 = 15 stabilizes.
Outcome criterion_2() {
  Outcome o;
  const Scenario sc = four_robot_scenario();
  const RunResult plain10 = run_mode(sc, false, 10);
  const RunResult priv10 = run_mode(sc, true, 10);
  const RunResult priv15 = run_mode(sc, true, 15);
  o.detail << "rho(F1,M1=10)=" << plain10.radius << " rho(F2,M2=10)=" << priv10.radius
           << " rho(F2,M2=15)=" << priv15.radius << "; tail errors " << plain10.verdict.tail_mean << ", ";
  if (priv10.diverged)
    o.detail << "diverged";
  else
    o.detail << priv10.verdict.tail_mean;
  o.detail << ", " << priv15.verdict.tail_mean;
  o.check(plain10.verdict.stabilized && plain10.radius < 1.0, "plain M1 = 10 does not stabilize");
  o.check(priv10.diverged && priv10.radius >= 1.0, "decomposed M2 = 10 does not diverge");
  o.check(priv15.verdict.stabilized && priv15.radius < 1.0, "decomposed M2 = 15 does not stabilize");
  return o;
}

// 3: lambda_tilde > lambda, psi_tilde >= psi, M1_bar < M2_bar on random connected graphs.
Outcome criterion_3() {
  Outcome o;
  test::Draws d(3003);
  int graphs = 0, both_finite = 0, gap = 0, psi = 0, order = 0, divergent = 0;
  while (graphs < 120) {
    const Index agents = d.integer(2, 8);
    const Index n = d.integer(2, 4);
    const CommGraph g = test::random_connected_graph(d, agents);
    const StochasticMatrix w = build_weights(g, graphs % 2 ? WeightRule::metropolis : WeightRule::uniform);
    const PlantModel p = random_plant(d, n, agents);
    const PrivacyWeights pw = random_privacy(d, agents);
    const auto gains = exact_gains(p);
    const BoundReport r = compute_bounds(p, g, gains, w, pw, MatrixXd::Identity(2 * n, 2 * n));
    ++graphs;
    if (r.lambda_tilde >= 1.0) ++divergent;
    if (!(r.lambda_tilde > r.lambda)) ++gap;
    if (!(r.psi.psi_tilde >= r.psi.psi)) ++psi;
    if (!r.m1_bar.vacuous && !r.m2_bar.vacuous) {
      ++both_finite;
      if (!(r.m1_bar.value < r.m2_bar.value)) ++order;
    }
  }
  o.detail << graphs << " graphs, " << both_finite << " with both bounds non-vacuous, " << divergent
           << " with lambda_tilde >= 1; counterexamples: gap " << gap
           << ", psi " << psi << ", bound order " << order;
  o.check(gap == 0, "lambda_tilde <= lambda");
  o.check(psi == 0, "psi_tilde < psi");
  o.check(order == 0, "M1_bar >= M2_bar");
  o.check(graphs >= 100, "too few graphs");
  return o;
}

// 4: fused Gramian error decays at lambda_tilde; fused gains stabilize both loops.
Outcome criterion_4() {
  Outcome o;
  const Scenario sc = four_robot_scenario();
  const StochasticMatrix w = build_weights(sc.graph, sc.weight_rule);
  const PrivacyWeights pw = sc.privacy_weights();
  const double lt = second_eigenvalue(build_augmented(w, pw).w_tilde);
  std::vector<MatrixXd> init;
  for (Index i = 0; i < sc.plant.agent_count(); ++i)
    init.push_back(static_cast<double>(sc.plant.agent_count()) * sc.plant.b(i) * sc.plant.b(i).transpose());
  const MatrixXd target = sc.plant.input_gramian();
  std::vector<double> hs, logs;
  for (int h = 200; h <= 800; h += 50) {
    const GramianFusion f = fuse_gramian(init, sc.graph, w, pw, {sc.delta, 10000, h});
    double err = 0;
    for (const auto& m : f.fused) err = std::max(err, norm2(m - target));
    hs.push_back(h);
    logs.push_back(std::log(err));
  }
  const double hbar = std::accumulate(hs.begin(), hs.end(), 0.0) / static_cast<double>(hs.size());
  const double lbar = std::accumulate(logs.begin(), logs.end(), 0.0) / static_cast<double>(logs.size());
  double num = 0, den = 0;
  for (std::size_t k = 0; k < hs.size(); ++k) {
    num += (hs[k] - hbar) * (logs[k] - lbar);
    den += (hs[k] - hbar) * (hs[k] - hbar);
  }
  const double rate = std::exp(num / den);

  const GainSynthesis syn = synthesize_gains(sc.plant, sc.graph, w, pw, {sc.delta, sc.max_rounds});
  MatrixXd control = sc.plant.a(), observer = sc.plant.a();
  for (Index i = 0; i < sc.plant.agent_count(); ++i) {
    control += sc.plant.b(i) * syn.gains[static_cast<std::size_t>(i)].k_gain;
    observer -= syn.gains[static_cast<std::size_t>(i)].l_gain * sc.plant.c(i);
  }
  const double rho_k = spectral_radius(control), rho_l = spectral_radius(observer);
  o.detail << "fitted rate=" << rate << " lambda_tilde=" << lt << " rho(A+BK)=" << rho_k << " rho(A-LC)=" << rho_l;
  o.check(std::abs(rate - lt) <= 0.1 * lt, "decay rate off by more than 10%");
  o.check(rho_k < 1.0, "control loop unstable");
  o.check(rho_l < 1.0, "observer loop unstable");
  return o;
}

// 5: adding the fifth robot lowers the LQR value; reference magnitudes; random monotonicity.
Outcome criterion_5() {
  Outcome o;
  const Scenario sc = four_robot_scenario();
  const VectorXd s0 = sc.initial_error();
  const ChannelComparison c = compare_channel_addition(sc.plant, sc.channel_addition->b.col(0), s0);
  const double rel4 = std::abs(c.j0 - 9.5e5) / 9.5e5;
  const double rel5 = std::abs(c.j1 - 9.1e5) / 9.1e5;

  test::Draws d(5005);
  int failures = 0, ordered_failures = 0;
  const int plants = 20;
  for (int t = 0; t < plants; ++t) {
    const Index n = d.integer(2, 5);
    const MatrixXd a = d.gaussian(n, n) / std::sqrt(static_cast<double>(n));
    std::vector<Channel> channels{{d.gaussian(n, 2), MatrixXd::Zero(1, n)}};
    const PlantModel p(a, std::move(channels));
    VectorXd b_new = d.gaussian(n, 1);
    b_new.normalize();
    const ChannelComparison r = compare_channel_addition(p, b_new, d.gaussian(n, 1));
    if (!r.monotone) ++failures;
    if (!r.iterates_ordered) ++ordered_failures;
  }
  o.detail << "J4=" << c.j0 << " J5=" << c.j1 << " (relative gaps to 9.5e5/9.1e5: " << rel4 << ", " << rel5
           << "); random plants with j0 < j1: " << failures << "/" << plants
           << " (iterate order broken in " << ordered_failures << ")";
  o.check(c.j0 > c.j1, "J4 <= J5");
  o.check(rel4 <= 0.15 && rel5 <= 0.15, "reference magnitudes off by more than 15%");
  o.check(failures == 0, "random channel additions raised the cost");
  return o;
}

// 6: Monte-Carlo steady-state error against the noise certificate; noiseless runs settle.
Outcome criterion_6() {
  Outcome o;
  Scenario sc = four_robot_scenario();
  sc.noise = {0.1, 0.1, 0};
  const PreparedRun base = prepare(sc);
  const double bound =
      noise_bound(sc.plant, base.synthesis.gains, build_augmented(base.w, base.pw), base.mode.steps, sc.noise).bound;

  const int seeds = 500;
  std::vector<double> means(seeds, 0.0);
  std::atomic<int> next{0};
  std::vector<std::thread> pool;
  const unsigned workers = std::max(1u, std::thread::hardware_concurrency());
  for (unsigned t = 0; t < workers; ++t)
    pool.emplace_back([&] {
      for (int s = next++; s < seeds; s = next++) {
        PreparedRun run = base;
        run.scenario.noise.seed = static_cast<std::uint64_t>(s) + 1;
        const SimTrace trace = simulate(run);
        // Steady state: the second half of the horizon.
        const std::size_t start = trace.s.size() / 2;
        double sum = 0;
        for (std::size_t k = start; k < trace.s.size(); ++k) sum += trace.s[k].squaredNorm();
        means[static_cast<std::size_t>(s)] = sum / static_cast<double>(trace.s.size() - start);
      }
    });
  for (auto& t : pool) t.join();
  const auto within = std::count_if(means.begin(), means.end(), [&](double m) { return m <= bound; });
  const double worst = *std::max_element(means.begin(), means.end());

  Scenario quiet = four_robot_scenario();
  const PreparedRun q = prepare(quiet);
  const double zero_bound =
      noise_bound(quiet.plant, q.synthesis.gains, build_augmented(q.w, q.pw), q.mode.steps, {0.0, 0.0, 0}).bound;
  const SimTrace quiet_trace = simulate(q);

  o.detail << "bound=" << bound << " runs within=" << within << "/" << seeds << " worst mean ||s||^2=" << worst
           << "; noiseless bound=" << zero_bound << " final error=" << quiet_trace.error_norm.back();
  o.check(static_cast<double>(within) >= 0.99 * seeds, "fewer than 99% of runs below the bound");
  o.check(zero_bound == 0.0, "noiseless bound is not zero");
  o.check(quiet_trace.error_norm.back() < 1e-9, "noiseless run does not converge");
  return o;
}

// 7: counterfactual worlds are indistinguishable to the observer; inference table behavior.
Outcome criterion_7() {
  Outcome o;
  const Scenario sc = four_robot_scenario();
  const AuditReport r = run_audit(prepare(sc));
  std::vector<double> pis;
  int identical = 0;
  for (const auto& e : r.counterfactuals)
    if (e.world.identical && e.world.reference_hash == e.world.replay_hash) {
      ++identical;
      pis.push_back(e.alt_pi);
    }
  std::sort(pis.begin(), pis.end());
  const bool distinct = std::adjacent_find(pis.begin(), pis.end()) == pis.end();
  bool monotone = true;
  for (std::size_t k = 1; k < r.inference.size(); ++k)
    monotone = monotone && r.inference[k].theta && r.inference[k - 1].theta &&
               *r.inference[k].theta > *r.inference[k - 1].theta;

  ReferenceWorld ref{sc.plant, sc.graph, build_weights(sc.graph, sc.weight_rule), sc.privacy_weights(),
                     prepare(sc).synthesis.share_log()};
  const AngleInference exact = adversary_infer_angle(extract_view(ref.log, sc.graph, r.target, r.adversary), 0.13, 4);
  const double err = exact.theta ? std::abs(*exact.theta - std::numbers::pi / 4) : 1.0;
  o.detail << identical << " identical worlds; inference monotone=" << monotone << "; |theta(0.13) - pi/4|=" << err;
  o.check(r.topology_condition, "topology condition fails");
  o.check(identical >= 5 && distinct, "fewer than 5 identical worlds");
  o.check(monotone, "inference table not strictly increasing");
  o.check(err <= 1e-6, "inference at the true pi is off");
  return o;
}

// 8: message passing vs matrix recursion; DARE vs value iteration; Lyapunov vs series.
Outcome criterion_8() {
  Outcome o;
  const Scenario sc = four_robot_scenario();
  const PreparedRun run = prepare(sc);
  const PlantModel& p = sc.plant;
  double recursion_err = 0;
  for (auto variant : {FusionVariant::plain, FusionVariant::decomposed}) {
    const FusionMode mode{variant, variant == FusionVariant::plain ? sc.m1.value : sc.m2.value};
    const MatrixXd f = build_closed_loop_matrix(p, run.synthesis.gains, run.w, run.pw, mode);
    auto agents = make_agents(p, run.synthesis.gains, run.pw.pi);
    VectorXd s = sc.initial_error();
    VectorXd eta = VectorXd::Zero(f.rows());
    eta.head(p.state_dim()) = s;
    for (int k = 0; k < 100; ++k) {
      std::vector<VectorXd> u, y;
      VectorXd next = p.a() * s;
      for (Index i = 0; i < p.agent_count(); ++i) {
        u.push_back(control(agents[static_cast<std::size_t>(i)]));
        y.push_back(p.c(i) * s);
        next += p.b(i) * u.back();
      }
      estimator_step(agents, sc.graph, run.w, run.pw.epsilon, mode, p.a(), u, y);
      s = next;
      eta = f * eta;
      VectorXd stacked(f.rows());
      stacked.head(p.state_dim()) = s;
      Index at = p.state_dim();
      for (const auto& a : agents) {
        stacked.segment(at, p.state_dim()) = variant == FusionVariant::plain ? a.z : a.alpha;
        at += p.state_dim();
      }
      if (variant == FusionVariant::decomposed)
        for (const auto& a : agents) {
          stacked.segment(at, p.state_dim()) = a.beta;
          at += p.state_dim();
        }
      recursion_err = std::max(recursion_err, (stacked - eta).cwiseAbs().maxCoeff());
    }
  }

  // Plain value iteration, run far past convergence.
  const MatrixXd g = p.input_gramian();
  MatrixXd pv = MatrixXd::Zero(4, 4);
  for (int l = 0; l < 20000; ++l) {
    const MatrixXd pl = MatrixXd::Identity(4, 4) + p.a().transpose() * pv * p.a();
    pv = pl - pl * g * (g.transpose() * pl * g + MatrixXd::Identity(4, 4)).inverse() * g.transpose() * pl;
  }
  const MatrixXd pv_full = MatrixXd::Identity(4, 4) + p.a().transpose() * pv * p.a();
  const MatrixXd dare = riccati_fixed_point(p.a(), g).p;
  const double dare_err = (dare - pv_full).norm() / pv_full.norm();

  test::Draws d(8008);
  double lyap_err = 0;
  for (int t = 0; t < 30; ++t) {
    const Index n = d.integer(1, 8);
    const MatrixXd f = test::stable_matrix(d, n, d.uniform(0.1, 0.9));
    const MatrixXd r = d.gaussian(n, n);
    const MatrixXd q = r * r.transpose() + MatrixXd::Identity(n, n);
    MatrixXd series = MatrixXd::Zero(n, n), term = q;
    for (int k = 0; k < 5000 && term.norm() > 1e-14 * series.norm(); ++k) {
      series += term;
      term = f.transpose() * term * f;
    }
    const MatrixXd x = solve_discrete_lyapunov(f, q);
    lyap_err = std::max(lyap_err, (x - series).cwiseAbs().maxCoeff() / std::max(1.0, series.cwiseAbs().maxCoeff()));
  }
  o.detail << "max |message passing - recursion|=" << recursion_err << " DARE rel err=" << dare_err
           << " Lyapunov rel err=" << lyap_err;
  o.check(recursion_err <= 1e-9, "message passing deviates from the matrix recursion");
  o.check(dare_err <= 1e-8, "DARE disagrees with value iteration");
  o.check(lyap_err <= 1e-6, "Lyapunov disagrees with the series");
  return o;
}

// 9: step counts one above the exact-form bounds give Schur-stable closed loops.
Outcome criterion_9() {
  Outcome o;
  test::Draws d(9009);
  int systems = 0, attempts = 0, unstable_plain = 0, unstable_private = 0;
  int largest_m = 0;
  while (systems < 50 && attempts < 1000) {
    ++attempts;
    const Index agents = d.integer(2, 6);
    const Index n = d.integer(2, 4);
    const CommGraph g = test::random_connected_graph(d, agents);
    const StochasticMatrix w = build_weights(g, WeightRule::metropolis);
    const PlantModel p = random_plant(d, n, agents);
    const JointAssumptions ja = check_joint_assumptions(p);
    if (!ja.stabilizable || !ja.detectable) continue;
    const PrivacyWeights pw = random_privacy(d, agents);
    const auto gains = exact_gains(p);
    const BoundReport r = compute_bounds(p, g, gains, w, pw, MatrixXd::Identity(2 * n, 2 * n));
    if (r.m1_bar.vacuous || r.m2_bar.vacuous || r.m2_bar.value > 1e5) continue;
    ++systems;
    const int m1 = static_cast<int>(std::ceil(r.m1_bar.value)) + 1;
    const int m2 = static_cast<int>(std::ceil(r.m2_bar.value)) + 1;
    largest_m = std::max(largest_m, m2);
    if (spectral_radius(closed_loop_plain(p, gains, w, m1)) >= 1.0) ++unstable_plain;
    if (spectral_radius(closed_loop_private(p, gains, build_augmented(w, pw), m2)) >= 1.0) ++unstable_private;
  }
  o.detail << systems << " systems (" << attempts << " drawn), largest M2=" << largest_m
           << "; unstable: plain " << unstable_plain << ", decomposed " << unstable_private;
  o.check(systems == 50, "could not draw 50 qualifying systems");
  o.check(unstable_plain == 0 && unstable_private == 0, "bound-sized step count left the loop unstable");
  return o;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Acceptance checks"};
  std::vector<int> selected;
  app.add_option("--criterion", selected, "Criteria to run (default: all)")->check(CLI::Range(1, 9));
  CLI11_PARSE(app, argc, argv);
  if (selected.empty()) selected = {1, 2, 3, 4, 5, 6, 7, 8, 9};

  const std::vector<std::function<Outcome()>> criteria{criterion_1, criterion_2, criterion_3, criterion_4, criterion_5,
                                                       criterion_6, criterion_7, criterion_8, criterion_9};
  bool all = true;
  for (int c : selected) {
    Outcome o;
    try {
      o = criteria[static_cast<std::size_t>(c - 1)]();
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail << "exception: " << e.what();
    }
    std::cout << (o.pass ? "PASS" : "FAIL") << " criterion " << c << ": " << o.detail.str() << std::endl;
    all = all && o.pass;
  }
  return all ? 0 : 1;
}
