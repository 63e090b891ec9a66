#pragma once

#include "ppcc/agents.hpp"
#include "ppcc/gain_synthesis.hpp"
#include "ppcc/graph.hpp"
#include "ppcc/plant.hpp"

#include <optional>
#include <vector>

namespace ppcc {

// Block upper-triangular transition of (s, estimation error) under exact Gramians.
MatrixXd separation_matrix(const PlantModel& p, const std::vector<AgentGains>& gains);

struct LyapunovCertificate {
  double theta = 0.0;
  MatrixXd p, q, f;
};

// P0 from f^T P0 f - P0 + Q0 = 0; theta = lambda_min(Q0) / (2 lambda_max(P0)) unless overridden;
// P = P0 / (1 + theta), Q = Q0 - theta P0 / (1 + theta), so (1 + theta) f^T P f - P + Q = 0.
LyapunovCertificate build_lyapunov_certificate(const MatrixXd& f, const MatrixXd& q0,
                                               std::optional<double> theta_override = std::nullopt);

struct StepBound {
  double value = 0.0;
  bool vacuous = false;  // log argument >= 1: every step count satisfies the inequality
};

// 0.5 * log_rate(theta^2 lmin_q / (2 (1 + theta)^2 psi^2 lmax_p)); rate 0 gives 1.
StepBound step_bound_exact(double rate, double theta, double psi, double lmin_q, double lmax_p);
// log_rate(sqrt(2) theta / (2 (1 + theta) psi) * sqrt(kappa_q / kappa_p)); rate 0 gives 1.
StepBound step_bound_kappa(double rate, double theta, double psi, double kappa_q, double kappa_p);

struct PsiConstants {
  double psi = 0;          // plain fusion
  double psi_tilde = 0;    // decomposed fusion, with 2||V||^2
  double psi_tilde1 = 0;   // decomposed fusion, with 2
  double psi1 = 0;         // plain fusion, norm-bound form
  double psi2 = 0;         // decomposed fusion, norm-bound form
};

PsiConstants psi_constants(const PlantModel& p, const std::vector<AgentGains>& gains, const AugmentedWeights& aug,
                           const KappaBounds& kappa);

enum class BoundForm { exact, relaxed, kappa };

struct BoundReport {
  StepBound m1_bar, m1_bar_kappa;
  StepBound m2_bar, m2_bar_relaxed, m2_bar_kappa;
  PsiConstants psi;
  double lambda = 0, lambda_tilde = 0, v_norm_sq = 0;
  double theta = 0, lambda_min_q = 0, lambda_max_p = 0;
  KappaBounds kappa;
};

BoundReport compute_bounds(const PlantModel& p, const CommGraph& g, const std::vector<AgentGains>& gains,
                           const StochasticMatrix& w, const PrivacyWeights& pw, const MatrixXd& q0,
                           std::optional<double> theta_override = std::nullopt);

StepBound compute_m1_bar(const LyapunovCertificate& cert, const PlantModel& p, const std::vector<AgentGains>& gains,
                         const StochasticMatrix& w, BoundForm form, const KappaBounds* kappa = nullptr);
StepBound compute_m2_bar(const LyapunovCertificate& cert, const PlantModel& p, const std::vector<AgentGains>& gains,
                         const AugmentedWeights& aug, BoundForm form, const KappaBounds* kappa = nullptr);

struct EpsilonChoice {
  double epsilon = 0;
  double lambda_tilde = 0;  // objective / 2
  double objective = 0;
};

// max over non-unit eigenvalues of W of |1 + lambda +- sqrt((1 - lambda)^2 + 4 eps^2) - 2 eps|.
double epsilon_objective(const std::vector<Complex>& non_unit_eigenvalues, double epsilon);
EpsilonChoice optimize_epsilon(const StochasticMatrix& w, int grid = 200);

struct NoiseCertificate {
  MatrixXd p_breve, q_breve, f_omega;
  double theta_breve = 0;
  double bound = 0;
};

// Noise input map for (omega, nu): diag(I_n, N (W~^M V (x) I_n) Lbar), padded to the
// decomposed closed-loop state.
MatrixXd noise_input_matrix(const PlantModel& p, const std::vector<AgentGains>& gains, const AugmentedWeights& aug,
                            int m2);

NoiseCertificate noise_bound(const PlantModel& p, const std::vector<AgentGains>& gains, const AugmentedWeights& aug,
                             int m2, const NoiseSpec& sigma);

struct ErrorCovariance {
  std::vector<MatrixXd> sequence;  // P_e,1 .. P_e,horizon from P_e,0 = 0
  MatrixXd fixed_point;
  double selector_norm_sq = 0;     // ||I_e||^2
  MatrixXd error_bound;            // ||I_e||^2 P_e
};

ErrorCovariance error_covariance_recursion(const PlantModel& p, const std::vector<AgentGains>& gains,
                                           const AugmentedWeights& aug, int m2, const NoiseSpec& sigma, int horizon);

// Selects e_k = z_k - 1 (x) s_k from the decomposed closed-loop state.
MatrixXd error_selector(Index n, Index agent_count);

struct LqrReport {
  MatrixXd p_riccati;
  double j_value = 0;
  VectorXd initial_state;
  int iterations = 0;
  bool monotone = true;  // P_l nondecreasing in the Loewner order
};

LqrReport lqr_value(const MatrixXd& gramian, const MatrixXd& a, const VectorXd& s0);

struct ChannelComparison {
  double j0 = 0, j1 = 0;
  bool monotone = false;
  bool iterates_ordered = false;  // P_{0,l} >= P_{1,l} for every l
};

ChannelComparison compare_channel_addition(const PlantModel& p, const VectorXd& b_new, const VectorXd& s0);

}  // namespace ppcc
