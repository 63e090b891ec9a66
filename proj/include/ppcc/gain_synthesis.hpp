#pragma once

#include "ppcc/graph.hpp"
#include "ppcc/linalg.hpp"
#include "ppcc/plant.hpp"
#include "ppcc/share_log.hpp"

#include <vector>

namespace ppcc {

struct AgentGains {
  MatrixXd k_gain;   // r_i x n
  MatrixXd l_gain;   // n x m_i
  MatrixXd fused_b;  // agent's estimate of sum_j B^j B^j^T
  MatrixXd fused_c;  // agent's estimate of sum_j C^j^T C^j
};

struct GramianFusion {
  std::vector<MatrixXd> fused;  // bar + hat per agent
  int rounds = 0;
  // transmitted[h][i]: agent i's shared component sent during round h+1.
  std::vector<std::vector<MatrixXd>> transmitted;
};

struct FusionOptions {
  double delta = 1e-3;
  int max_rounds = 10000;
  // Keep iterating for exactly this many rounds, ignoring delta (used for decay fits).
  int fixed_rounds = 0;
};

// Decomposed consensus over per-agent symmetric matrices, run until every agent's shared
// component moves by at most delta (2-norm) in one round.
GramianFusion fuse_gramian(const std::vector<MatrixXd>& init_per_agent, const CommGraph& g,
                           const StochasticMatrix& w, const PrivacyWeights& pw, const FusionOptions& options = {});

MatrixXd compute_control_gain(const MatrixXd& a, const MatrixXd& b_local, const MatrixXd& fused_b);
MatrixXd compute_observer_gain(const MatrixXd& a, const MatrixXd& c_local, const MatrixXd& fused_c);

struct GainSynthesis {
  std::vector<AgentGains> gains;
  GramianFusion input_fusion;
  GramianFusion output_fusion;

  // Both fusion streams as broadcast records for the privacy audit.
  ShareLog share_log() const;
};

GainSynthesis synthesize_gains(const PlantModel& p, const CommGraph& g, const StochasticMatrix& w,
                               const PrivacyWeights& pw, const FusionOptions& options = {});

// Every agent uses the exact Gramians (the fusion limit).
std::vector<AgentGains> exact_gains(const PlantModel& p);

struct KappaBounds {
  double kappa_a = 0, kappa_b = 0, kappa_c = 0, kappa_k = 0, kappa_l = 0, kappa_p = 0, kappa_q = 0;
};

// Network-wide norm bounds. Per-agent local values are combined by max-consensus over g;
// p and q come from the Lyapunov certificate.
KappaBounds derive_kappa_bounds(const PlantModel& p, const CommGraph& g, const std::vector<AgentGains>& gains,
                                const MatrixXd& lyap_p, const MatrixXd& lyap_q);

}  // namespace ppcc
