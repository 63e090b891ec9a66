#pragma once

#include "ppcc/gain_synthesis.hpp"
#include "ppcc/graph.hpp"
#include "ppcc/plant.hpp"
#include "ppcc/share_log.hpp"

#include <cstdint>
#include <vector>

namespace ppcc {

enum class FusionVariant { plain, decomposed };

struct FusionMode {
  FusionVariant variant = FusionVariant::decomposed;
  int steps = 1;
};

struct AgentRuntime {
  Index id = 0;
  double pi = 0.5;  // private; never copied into shared messages
  Channel channel;  // private B^i, C^i
  AgentGains gains;
  VectorXd z, alpha, beta;
};

std::vector<AgentRuntime> make_agents(const PlantModel& p, const std::vector<AgentGains>& gains,
                                      const std::vector<double>& pi);

// x = A z + N B u + N L (y - C z)
VectorXd local_innovation(const AgentRuntime& agent, const VectorXd& u, const VectorXd& y, const MatrixXd& a,
                          Index agent_count);

// M rounds of neighbor averaging; z^i <- x^i_M.
void fuse_plain(std::vector<AgentRuntime>& agents, const CommGraph& g, const StochasticMatrix& w, int m1,
                const std::vector<VectorXd>& innovations);

// Split each innovation into (pi x, (1 - pi) x), run M decomposed rounds, z = alpha + beta.
// Every transmitted alpha is appended to log when one is supplied.
void fuse_private(std::vector<AgentRuntime>& agents, const CommGraph& g, const StochasticMatrix& w, double epsilon,
                  int m2, const std::vector<VectorXd>& innovations, std::int64_t k = 0, ShareLog* log = nullptr);

VectorXd control(const AgentRuntime& agent);

// One estimator update for the whole network given this step's inputs and measurements.
void estimator_step(std::vector<AgentRuntime>& agents, const CommGraph& g, const StochasticMatrix& w,
                    double epsilon, const FusionMode& mode, const MatrixXd& a, const std::vector<VectorXd>& u,
                    const std::vector<VectorXd>& y, std::int64_t k = 0, ShareLog* log = nullptr);

// Stacked block matrices shared by the closed-loop assembly and the bounds.
struct NetworkBlocks {
  MatrixXd b_bar;      // blockdiag(B^i), Nn x r
  MatrixXd k_bar;      // blockdiag(K^i), r x Nn
  MatrixXd l_bar;      // blockdiag(L^i), Nn x m
  MatrixXd c_bar;      // blockdiag(C^i), m x Nn
  MatrixXd stacked_b;  // [B^1 ... B^N], n x r
  MatrixXd stacked_c;  // [C^1; ...; C^N], m x n
  MatrixXd estimator;  // I (x) A - N Lbar Cbar + N Bbar Kbar
};

NetworkBlocks network_blocks(const PlantModel& p, const std::vector<AgentGains>& gains);

// State (s, z^1..z^N) transition under plain fusion with M rounds.
MatrixXd closed_loop_plain(const PlantModel& p, const std::vector<AgentGains>& gains, const StochasticMatrix& w,
                           int m1);
// State (s, alpha^1..alpha^N, beta^1..beta^N) transition under decomposed fusion with M rounds.
MatrixXd closed_loop_private(const PlantModel& p, const std::vector<AgentGains>& gains, const AugmentedWeights& aug,
                             int m2);

MatrixXd build_closed_loop_matrix(const PlantModel& p, const std::vector<AgentGains>& gains,
                                  const StochasticMatrix& w, const PrivacyWeights& pw, const FusionMode& mode);

}  // namespace ppcc
