#include "ppcc/agents.hpp"

#include "ppcc/consensus.hpp"
#include "ppcc/linalg.hpp"

#include <string>

namespace ppcc {

std::vector<AgentRuntime> make_agents(const PlantModel& p, const std::vector<AgentGains>& gains,
                                      const std::vector<double>& pi) {
  const Index n_agents = p.agent_count();
  if (static_cast<Index>(gains.size()) != n_agents || static_cast<Index>(pi.size()) != n_agents)
    throw DimensionError("make_agents: agent count mismatch");
  std::vector<AgentRuntime> agents;
  for (Index i = 0; i < n_agents; ++i) {
    const auto s = static_cast<std::size_t>(i);
    AgentRuntime a;
    a.id = i;
    a.pi = pi[s];
    a.channel = p.channels()[s];
    a.gains = gains[s];
    a.z = VectorXd::Zero(p.state_dim());
    a.alpha = VectorXd::Zero(p.state_dim());
    a.beta = VectorXd::Zero(p.state_dim());
    agents.push_back(std::move(a));
  }
  return agents;
}

VectorXd local_innovation(const AgentRuntime& agent, const VectorXd& u, const VectorXd& y, const MatrixXd& a,
                          Index agent_count) {
  const auto& ch = agent.channel;
  if (u.size() != ch.b.cols() || y.size() != ch.c.rows() || agent.z.size() != a.rows())
    throw DimensionError("local_innovation: dimension mismatch for agent " + std::to_string(agent.id));
  const double scale = static_cast<double>(agent_count);
  return a * agent.z + scale * (ch.b * u) + scale * (agent.gains.l_gain * (y - ch.c * agent.z));
}

void fuse_plain(std::vector<AgentRuntime>& agents, const CommGraph& g, const StochasticMatrix& w, int m1,
                const std::vector<VectorXd>& innovations) {
  if (m1 < 0) throw ConfigError("fuse_plain: negative fusion step count");
  std::vector<VectorXd> x = innovations;
  for (int l = 1; l <= m1; ++l) mixing_round(g, w.matrix(), x);
  for (std::size_t i = 0; i < agents.size(); ++i) agents[i].z = x[i];
}

void fuse_private(std::vector<AgentRuntime>& agents, const CommGraph& g, const StochasticMatrix& w, double epsilon,
                  int m2, const std::vector<VectorXd>& innovations, std::int64_t k, ShareLog* log) {
  if (m2 < 1) throw ConfigError("fuse_private: at least one fusion step is required");
  std::vector<VectorXd> alpha, beta;
  std::vector<double> eps_pi;
  for (std::size_t i = 0; i < agents.size(); ++i) {
    alpha.push_back(agents[i].pi * innovations[i]);
    beta.push_back((1.0 - agents[i].pi) * innovations[i]);
    eps_pi.push_back(epsilon * agents[i].pi);
  }
  for (int l = 1; l <= m2; ++l) {
    if (log)
      for (std::size_t i = 0; i < agents.size(); ++i)
        log->push_back({SharedQuantity::estimate, k, l - 1, static_cast<Index>(i), alpha[i]});
    decomposition_round(g, w.matrix(), eps_pi, alpha, beta);
  }
  for (std::size_t i = 0; i < agents.size(); ++i) {
    agents[i].alpha = alpha[i];
    agents[i].beta = beta[i];
    agents[i].z = alpha[i] + beta[i];
  }
}

VectorXd control(const AgentRuntime& agent) { return agent.gains.k_gain * agent.z; }

void estimator_step(std::vector<AgentRuntime>& agents, const CommGraph& g, const StochasticMatrix& w,
                    double epsilon, const FusionMode& mode, const MatrixXd& a, const std::vector<VectorXd>& u,
                    const std::vector<VectorXd>& y, std::int64_t k, ShareLog* log) {
  std::vector<VectorXd> innovations;
  for (std::size_t i = 0; i < agents.size(); ++i)
    innovations.push_back(local_innovation(agents[i], u[i], y[i], a, static_cast<Index>(agents.size())));
  if (mode.variant == FusionVariant::plain)
    fuse_plain(agents, g, w, mode.steps, innovations);
  else
    fuse_private(agents, g, w, epsilon, mode.steps, innovations, k, log);
}

NetworkBlocks network_blocks(const PlantModel& p, const std::vector<AgentGains>& gains) {
  const Index n_agents = p.agent_count();
  const Index n = p.state_dim();
  if (static_cast<Index>(gains.size()) != n_agents) throw DimensionError("network_blocks: one gain set per agent expected");
  std::vector<MatrixXd> b, k, l, c;
  for (Index i = 0; i < n_agents; ++i) {
    const auto& gi = gains[static_cast<std::size_t>(i)];
    if (gi.k_gain.rows() != p.b(i).cols() || gi.k_gain.cols() != n || gi.l_gain.rows() != n ||
        gi.l_gain.cols() != p.c(i).rows())
      throw DimensionError("network_blocks: gain shapes of agent " + std::to_string(i) + " do not match the plant");
    b.push_back(p.b(i));
    k.push_back(gi.k_gain);
    l.push_back(gi.l_gain);
    c.push_back(p.c(i));
  }
  NetworkBlocks out;
  out.b_bar = block_diagonal(b);
  out.k_bar = block_diagonal(k);
  out.l_bar = block_diagonal(l);
  out.c_bar = block_diagonal(c);
  out.stacked_b = p.stacked_input();
  out.stacked_c = p.stacked_output();
  const double scale = static_cast<double>(n_agents);
  out.estimator = kron(MatrixXd::Identity(n_agents, n_agents), p.a()) - scale * out.l_bar * out.c_bar +
                  scale * out.b_bar * out.k_bar;
  return out;
}

MatrixXd closed_loop_plain(const PlantModel& p, const std::vector<AgentGains>& gains, const StochasticMatrix& w,
                           int m1) {
  const NetworkBlocks nb = network_blocks(p, gains);
  const Index n = p.state_dim();
  const Index nn = n * p.agent_count();
  const MatrixXd mix = kron(matrix_power(w.matrix(), m1), MatrixXd::Identity(n, n));
  const double scale = static_cast<double>(p.agent_count());
  MatrixXd f(n + nn, n + nn);
  f << p.a(), nb.stacked_b * nb.k_bar,
       scale * mix * nb.l_bar * nb.stacked_c, mix * nb.estimator;
  return f;
}

MatrixXd closed_loop_private(const PlantModel& p, const std::vector<AgentGains>& gains, const AugmentedWeights& aug,
                             int m2) {
  const NetworkBlocks nb = network_blocks(p, gains);
  const Index n = p.state_dim();
  const Index n_agents = p.agent_count();
  const Index nn = n * n_agents;
  const MatrixXd eye_n = MatrixXd::Identity(n, n);
  const MatrixXd mix = kron(MatrixXd(matrix_power(aug.w_tilde, m2) * aug.v), eye_n);  // 2Nn x Nn
  MatrixXd recombine(nn, 2 * nn);  // z = alpha + beta
  recombine << MatrixXd::Identity(nn, nn), MatrixXd::Identity(nn, nn);
  const double scale = static_cast<double>(n_agents);
  MatrixXd f(n + 2 * nn, n + 2 * nn);
  f << p.a(), nb.stacked_b * nb.k_bar * recombine,
       scale * mix * nb.l_bar * nb.stacked_c, mix * nb.estimator * recombine;
  return f;
}

MatrixXd build_closed_loop_matrix(const PlantModel& p, const std::vector<AgentGains>& gains,
                                  const StochasticMatrix& w, const PrivacyWeights& pw, const FusionMode& mode) {
  if (mode.variant == FusionVariant::plain) return closed_loop_plain(p, gains, w, mode.steps);
  return closed_loop_private(p, gains, build_augmented(w, pw), mode.steps);
}

}  // namespace ppcc
