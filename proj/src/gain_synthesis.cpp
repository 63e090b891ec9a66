#include "ppcc/gain_synthesis.hpp"

#include "ppcc/consensus.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace ppcc {

GramianFusion fuse_gramian(const std::vector<MatrixXd>& init_per_agent, const CommGraph& g,
                           const StochasticMatrix& w, const PrivacyWeights& pw, const FusionOptions& options) {
  const Index n_agents = g.size();
  if (static_cast<Index>(init_per_agent.size()) != n_agents || w.size() != n_agents || pw.size() != n_agents)
    throw DimensionError("fuse_gramian: agent count mismatch");
  if (!(options.delta > 0.0)) throw ConfigError("fuse_gramian: delta must be positive");
  pw.validate();

  GramianFusion out;
  if (n_agents == 1) {
    out.fused = init_per_agent;
    return out;
  }

  std::vector<MatrixXd> shared, held;
  std::vector<double> eps_pi;
  for (Index i = 0; i < n_agents; ++i) {
    const double pi = pw.pi[static_cast<std::size_t>(i)];
    shared.push_back(pi * init_per_agent[static_cast<std::size_t>(i)]);
    held.push_back((1.0 - pi) * init_per_agent[static_cast<std::size_t>(i)]);
    eps_pi.push_back(pw.epsilon * pi);
  }

  const int limit = options.fixed_rounds > 0 ? options.fixed_rounds : options.max_rounds;
  bool settled = false;
  for (int h = 1; h <= limit; ++h) {
    out.transmitted.push_back(shared);
    decomposition_round(g, w.matrix(), eps_pi, shared, held);
    out.rounds = h;
    if (options.fixed_rounds > 0) continue;
    double largest_move = 0.0;
    for (Index i = 0; i < n_agents; ++i) {
      const auto s = static_cast<std::size_t>(i);
      largest_move = std::max(largest_move, norm2(shared[s] - out.transmitted.back()[s]));
    }
    if (largest_move <= options.delta) {
      settled = true;
      break;
    }
  }
  if (options.fixed_rounds == 0 && !settled)
    throw NumericError("fuse_gramian: delta not reached within " + std::to_string(options.max_rounds) + " rounds");

  for (Index i = 0; i < n_agents; ++i) {
    const auto s = static_cast<std::size_t>(i);
    MatrixXd sum = shared[s] + held[s];
    out.fused.push_back(0.5 * (sum + sum.transpose()));
  }
  return out;
}

MatrixXd compute_control_gain(const MatrixXd& a, const MatrixXd& b_local, const MatrixXd& fused_b) {
  const Index n = a.rows();
  if (b_local.rows() != n || fused_b.rows() != n || fused_b.cols() != n)
    throw DimensionError("compute_control_gain: dimension mismatch");
  const MatrixXd p = solve_dare(a, fused_b);
  const MatrixXd gp = fused_b.transpose() * p;
  return -b_local.transpose() * lu_solve(MatrixXd::Identity(n, n) + gp * fused_b, gp * a);
}

MatrixXd compute_observer_gain(const MatrixXd& a, const MatrixXd& c_local, const MatrixXd& fused_c) {
  const Index n = a.rows();
  if (c_local.cols() != n || fused_c.rows() != n || fused_c.cols() != n)
    throw DimensionError("compute_observer_gain: dimension mismatch");
  const MatrixXd p = solve_dare(a.transpose(), fused_c);
  const MatrixXd gain_core = lu_solve(MatrixXd::Identity(n, n) + fused_c * p * fused_c.transpose(), c_local.transpose());
  return a * p * fused_c.transpose() * gain_core;
}

ShareLog GainSynthesis::share_log() const {
  ShareLog log;
  auto append = [&log](const GramianFusion& f, SharedQuantity q) {
    for (std::size_t h = 0; h < f.transmitted.size(); ++h)
      for (std::size_t i = 0; i < f.transmitted[h].size(); ++i)
        log.push_back({q, 0, static_cast<int>(h), static_cast<Index>(i), f.transmitted[h][i]});
  };
  append(input_fusion, SharedQuantity::input_gramian);
  append(output_fusion, SharedQuantity::output_gramian);
  return log;
}

GainSynthesis synthesize_gains(const PlantModel& p, const CommGraph& g, const StochasticMatrix& w,
                               const PrivacyWeights& pw, const FusionOptions& options) {
  const Index n_agents = p.agent_count();
  if (g.size() != n_agents) throw DimensionError("synthesize_gains: graph and plant agent counts differ");
  const double scale = static_cast<double>(n_agents);
  std::vector<MatrixXd> b_init, c_init;
  for (Index i = 0; i < n_agents; ++i) {
    b_init.push_back(scale * p.b(i) * p.b(i).transpose());
    c_init.push_back(scale * p.c(i).transpose() * p.c(i));
  }
  GainSynthesis out;
  out.input_fusion = fuse_gramian(b_init, g, w, pw, options);
  out.output_fusion = fuse_gramian(c_init, g, w, pw, options);
  for (Index i = 0; i < n_agents; ++i) {
    const auto s = static_cast<std::size_t>(i);
    AgentGains gains;
    gains.fused_b = out.input_fusion.fused[s];
    gains.fused_c = out.output_fusion.fused[s];
    gains.k_gain = compute_control_gain(p.a(), p.b(i), gains.fused_b);
    gains.l_gain = compute_observer_gain(p.a(), p.c(i), gains.fused_c);
    out.gains.push_back(std::move(gains));
  }
  return out;
}

std::vector<AgentGains> exact_gains(const PlantModel& p) {
  const MatrixXd gb = p.input_gramian();
  const MatrixXd gc = p.output_gramian();
  std::vector<AgentGains> out;
  for (Index i = 0; i < p.agent_count(); ++i)
    out.push_back({compute_control_gain(p.a(), p.b(i), gb), compute_observer_gain(p.a(), p.c(i), gc), gb, gc});
  return out;
}

KappaBounds derive_kappa_bounds(const PlantModel& p, const CommGraph& g, const std::vector<AgentGains>& gains,
                                const MatrixXd& lyap_p, const MatrixXd& lyap_q) {
  const Index n_agents = p.agent_count();
  if (static_cast<Index>(gains.size()) != n_agents || g.size() != n_agents)
    throw DimensionError("derive_kappa_bounds: agent count mismatch");
  std::vector<double> kb, kc, kk, kl;
  for (Index i = 0; i < n_agents; ++i) {
    const auto& gi = gains[static_cast<std::size_t>(i)];
    // sqrt||fused_b|| dominates every ||B^j|| only in the fusion limit; the local norm covers the gap.
    kb.push_back(std::max(std::sqrt(norm2(gi.fused_b)), norm2(p.b(i))));
    kc.push_back(std::max(std::sqrt(norm2(gi.fused_c)), norm2(p.c(i))));
    kk.push_back(norm2(gi.k_gain));
    kl.push_back(norm2(gi.l_gain));
  }
  KappaBounds k;
  k.kappa_a = norm2(p.a());
  k.kappa_b = max_consensus(g, kb).front();
  k.kappa_c = max_consensus(g, kc).front();
  k.kappa_k = max_consensus(g, kk).front();
  k.kappa_l = max_consensus(g, kl).front();
  k.kappa_p = norm2(lyap_p);
  k.kappa_q = lambda_min(lyap_q);
  return k;
}

}  // namespace ppcc
