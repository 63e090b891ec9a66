#include "ppcc/analysis.hpp"

#include "ppcc/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace ppcc {

MatrixXd separation_matrix(const PlantModel& p, const std::vector<AgentGains>& gains) {
  const Index n = p.state_dim();
  if (static_cast<Index>(gains.size()) != p.agent_count()) throw DimensionError("separation_matrix: agent count mismatch");
  MatrixXd bk = MatrixXd::Zero(n, n);
  MatrixXd lc = MatrixXd::Zero(n, n);
  for (Index i = 0; i < p.agent_count(); ++i) {
    bk += p.b(i) * gains[static_cast<std::size_t>(i)].k_gain;
    lc += gains[static_cast<std::size_t>(i)].l_gain * p.c(i);
  }
  MatrixXd f(2 * n, 2 * n);
  f << p.a() + bk, bk,
       MatrixXd::Zero(n, n), p.a() - lc;
  return f;
}

LyapunovCertificate build_lyapunov_certificate(const MatrixXd& f, const MatrixXd& q0, std::optional<double> theta_override) {
  if (!is_schur_stable(f)) throw NumericError("build_lyapunov_certificate: F is not Schur stable");
  const MatrixXd p0 = solve_discrete_lyapunov(f, q0);
  const double ratio = lambda_min(q0) / lambda_max(p0);
  LyapunovCertificate cert;
  cert.theta = theta_override.value_or(0.5 * ratio);
  if (!(cert.theta > 0.0)) throw ConfigError("build_lyapunov_certificate: theta must be positive");
  cert.p = p0 / (1.0 + cert.theta);
  cert.q = q0 - cert.theta / (1.0 + cert.theta) * p0;
  cert.f = f;
  if (!is_positive_definite(cert.q))
    throw ConfigError("build_lyapunov_certificate: theta too large, Q is not positive definite");
  const MatrixXd residual = (1.0 + cert.theta) * f.transpose() * cert.p * f - cert.p + cert.q;
  if (norm2(residual) > 1e-8 * std::max(1.0, norm2(cert.p)))
    throw NumericError("build_lyapunov_certificate: residual check failed");
  return cert;
}

namespace {

StepBound log_bound(double rate, double argument, double factor) {
  if (rate <= 1e-12) return {1.0, false};  // rank-one W, up to eigensolver noise
  if (argument >= 1.0) return {0.0, true};
  if (rate >= 1.0) return {0.0, true};  // consensus error never contracts
  return {factor * std::log(argument) / std::log(rate), false};
}

double sq(double x) { return x * x; }

double kappa_psi(const KappaBounds& k, double n_agents, double w_a, double w_bk, double w_lc) {
  const double n2 = sq(n_agents);
  return std::max(1.0, w_a * sq(k.kappa_a) + w_bk * n2 * sq(k.kappa_b) * sq(k.kappa_k) +
                           w_lc * n2 * sq(k.kappa_l) * sq(k.kappa_c));
}

// ||N Bbar Kbar||^2 + ||A - N Bbar Kbar||^2 and ||A + N Lbar Cbar||^2 + ||A||^2, A the estimator block.
struct NormTerms {
  double control = 0, estimate = 0;
};

NormTerms norm_terms(const PlantModel& p, const std::vector<AgentGains>& gains) {
  const NetworkBlocks nb = network_blocks(p, gains);
  const double n_agents = static_cast<double>(p.agent_count());
  const MatrixXd nbk = n_agents * nb.b_bar * nb.k_bar;
  const MatrixXd nlc = n_agents * nb.l_bar * nb.c_bar;
  return {sq(norm2(nbk)) + sq(norm2(nb.estimator - nbk)), sq(norm2(nb.estimator + nlc)) + sq(norm2(nb.estimator))};
}

}  // namespace

StepBound step_bound_exact(double rate, double theta, double psi, double lmin_q, double lmax_p) {
  const double argument = sq(theta) * lmin_q / (2.0 * sq(1.0 + theta) * sq(psi) * lmax_p);
  return log_bound(rate, argument, 0.5);
}

StepBound step_bound_kappa(double rate, double theta, double psi, double kappa_q, double kappa_p) {
  const double argument = std::sqrt(2.0) * theta / (2.0 * (1.0 + theta) * psi) * std::sqrt(kappa_q / kappa_p);
  return log_bound(rate, argument, 1.0);
}

PsiConstants psi_constants(const PlantModel& p, const std::vector<AgentGains>& gains, const AugmentedWeights& aug,
                           const KappaBounds& kappa) {
  const NormTerms t = norm_terms(p, gains);
  const double n_agents = static_cast<double>(p.agent_count());
  const double v_sq = sq(norm2(aug.v));

  PsiConstants c;
  c.psi = std::max({1.0, t.control, t.estimate});
  c.psi_tilde = std::max({1.0, t.control, 2.0 * v_sq * t.estimate});
  c.psi_tilde1 = std::max({1.0, t.control, 2.0 * t.estimate});
  c.psi1 = kappa_psi(kappa, n_agents, 5.0, 5.0, 3.0);
  c.psi2 = kappa_psi(kappa, n_agents, 10.0, 10.0, 6.0);
  return c;
}

StepBound compute_m1_bar(const LyapunovCertificate& cert, const PlantModel& p, const std::vector<AgentGains>& gains,
                         const StochasticMatrix& w, BoundForm form, const KappaBounds* kappa) {
  const double rate = second_eigenvalue(w);
  if (form == BoundForm::kappa) {
    if (!kappa) throw ConfigError("compute_m1_bar: norm-bound form needs kappa bounds");
    const double psi1 = kappa_psi(*kappa, static_cast<double>(p.agent_count()), 5.0, 5.0, 3.0);
    return step_bound_kappa(rate, cert.theta, psi1, kappa->kappa_q, kappa->kappa_p);
  }
  const NormTerms t = norm_terms(p, gains);
  const double psi = std::max({1.0, t.control, t.estimate});
  return step_bound_exact(rate, cert.theta, psi, lambda_min(cert.q), lambda_max(cert.p));
}

StepBound compute_m2_bar(const LyapunovCertificate& cert, const PlantModel& p, const std::vector<AgentGains>& gains,
                         const AugmentedWeights& aug, BoundForm form, const KappaBounds* kappa) {
  const double rate = second_eigenvalue(aug.w_tilde);
  if (form == BoundForm::kappa && !kappa) throw ConfigError("compute_m2_bar: norm-bound form needs kappa bounds");
  const PsiConstants c = psi_constants(p, gains, aug, kappa ? *kappa : KappaBounds{});
  switch (form) {
    case BoundForm::exact:
      return step_bound_exact(rate, cert.theta, c.psi_tilde, lambda_min(cert.q), lambda_max(cert.p));
    case BoundForm::relaxed:
      return step_bound_exact(rate, cert.theta, c.psi_tilde1, lambda_min(cert.q), lambda_max(cert.p));
    case BoundForm::kappa:
      return step_bound_kappa(rate, cert.theta, c.psi2, kappa->kappa_q, kappa->kappa_p);
  }
  return {};
}

BoundReport compute_bounds(const PlantModel& p, const CommGraph& g, const std::vector<AgentGains>& gains,
                           const StochasticMatrix& w, const PrivacyWeights& pw, const MatrixXd& q0,
                           std::optional<double> theta_override) {
  const AugmentedWeights aug = build_augmented(w, pw);
  const LyapunovCertificate cert = build_lyapunov_certificate(separation_matrix(p, gains), q0, theta_override);
  BoundReport r;
  r.kappa = derive_kappa_bounds(p, g, gains, cert.p, cert.q);
  r.psi = psi_constants(p, gains, aug, r.kappa);
  r.lambda = second_eigenvalue(w);
  r.lambda_tilde = second_eigenvalue(aug.w_tilde);
  r.v_norm_sq = sq(norm2(aug.v));
  r.theta = cert.theta;
  r.lambda_min_q = lambda_min(cert.q);
  r.lambda_max_p = lambda_max(cert.p);
  r.m1_bar = step_bound_exact(r.lambda, r.theta, r.psi.psi, r.lambda_min_q, r.lambda_max_p);
  r.m1_bar_kappa = step_bound_kappa(r.lambda, r.theta, r.psi.psi1, r.kappa.kappa_q, r.kappa.kappa_p);
  r.m2_bar = step_bound_exact(r.lambda_tilde, r.theta, r.psi.psi_tilde, r.lambda_min_q, r.lambda_max_p);
  r.m2_bar_relaxed = step_bound_exact(r.lambda_tilde, r.theta, r.psi.psi_tilde1, r.lambda_min_q, r.lambda_max_p);
  r.m2_bar_kappa = step_bound_kappa(r.lambda_tilde, r.theta, r.psi.psi2, r.kappa.kappa_q, r.kappa.kappa_p);
  return r;
}

double epsilon_objective(const std::vector<Complex>& non_unit_eigenvalues, double epsilon) {
  double worst = 0.0;
  for (const Complex& lambda : non_unit_eigenvalues) {
    const Complex root = std::sqrt((1.0 - lambda) * (1.0 - lambda) + 4.0 * epsilon * epsilon);
    worst = std::max({worst, std::abs(1.0 + lambda + root - 2.0 * epsilon), std::abs(1.0 + lambda - root - 2.0 * epsilon)});
  }
  return worst;
}

EpsilonChoice optimize_epsilon(const StochasticMatrix& w, int grid) {
  if (grid < 10) throw ConfigError("optimize_epsilon: grid must have at least 10 points");
  std::vector<Complex> ev = eigenvalues(w.matrix()).eigenvalues;
  auto unit = std::min_element(ev.begin(), ev.end(), [](Complex a, Complex b) { return std::abs(a - 1.0) < std::abs(b - 1.0); });
  ev.erase(unit);
  const double lo = 1e-3;
  const double hi = 2.0 / 3.0 - 1e-3;
  EpsilonChoice best{lo, 0.0, epsilon_objective(ev, lo)};
  for (int k = 1; k < grid; ++k) {
    const double eps = lo + (hi - lo) * k / (grid - 1);
    const double obj = epsilon_objective(ev, eps);
    if (obj < best.objective) best = {eps, 0.0, obj};
  }
  best.lambda_tilde = best.objective / 2.0;
  return best;
}

MatrixXd noise_input_matrix(const PlantModel& p, const std::vector<AgentGains>& gains, const AugmentedWeights& aug,
                            int m2) {
  const NetworkBlocks nb = network_blocks(p, gains);
  const Index n = p.state_dim();
  const Index m = p.output_dim();
  const MatrixXd mix = kron(MatrixXd(matrix_power(aug.w_tilde, m2) * aug.v), MatrixXd::Identity(n, n));
  MatrixXd f_omega = MatrixXd::Zero(n + mix.rows(), n + m);
  f_omega.topLeftCorner(n, n).setIdentity();
  f_omega.bottomRightCorner(mix.rows(), m) = static_cast<double>(p.agent_count()) * mix * nb.l_bar;
  return f_omega;
}

NoiseCertificate noise_bound(const PlantModel& p, const std::vector<AgentGains>& gains, const AugmentedWeights& aug,
                             int m2, const NoiseSpec& sigma) {
  const MatrixXd f2 = closed_loop_private(p, gains, aug, m2);
  if (!is_schur_stable(f2)) throw NumericError("noise_bound: decomposed closed loop is not Schur stable");
  NoiseCertificate c;
  c.q_breve = MatrixXd::Identity(f2.rows(), f2.cols());
  c.p_breve = solve_discrete_lyapunov(f2, c.q_breve);
  c.theta_breve = 1.0 - lambda_min(c.q_breve) / lambda_max(c.p_breve);
  c.f_omega = noise_input_matrix(p, gains, aug, m2);
  const double energy = static_cast<double>(p.state_dim()) * sq(sigma.sigma_w) +
                        static_cast<double>(p.output_dim()) * sq(sigma.sigma_v);
  c.bound = lambda_max(c.f_omega.transpose() * c.p_breve * c.f_omega) * energy /
            (lambda_min(c.p_breve) * (1.0 - c.theta_breve));
  return c;
}

MatrixXd error_selector(Index n, Index agent_count) {
  const Index nn = n * agent_count;
  MatrixXd sel(nn, n + 2 * nn);
  sel << -kron(VectorXd::Ones(agent_count), MatrixXd::Identity(n, n)), MatrixXd::Identity(nn, nn),
         MatrixXd::Identity(nn, nn);
  return sel;
}

ErrorCovariance error_covariance_recursion(const PlantModel& p, const std::vector<AgentGains>& gains,
                                           const AugmentedWeights& aug, int m2, const NoiseSpec& sigma, int horizon) {
  const MatrixXd f2 = closed_loop_private(p, gains, aug, m2);
  if (!is_schur_stable(f2)) throw NumericError("error_covariance_recursion: decomposed closed loop is not Schur stable");
  const MatrixXd f_omega = noise_input_matrix(p, gains, aug, m2);
  VectorXd q_diag(p.state_dim() + p.output_dim());
  q_diag << VectorXd::Constant(p.state_dim(), sq(sigma.sigma_w)), VectorXd::Constant(p.output_dim(), sq(sigma.sigma_v));
  const MatrixXd drive = f_omega * q_diag.asDiagonal() * f_omega.transpose();

  ErrorCovariance out;
  MatrixXd pe = MatrixXd::Zero(f2.rows(), f2.cols());
  for (int k = 1; k <= horizon; ++k) {
    pe = f2 * pe * f2.transpose() + drive;
    out.sequence.push_back(pe);
  }
  out.fixed_point = solve_stein(f2.transpose(), drive);
  out.selector_norm_sq = sq(norm2(error_selector(p.state_dim(), p.agent_count())));
  out.error_bound = out.selector_norm_sq * out.fixed_point;
  return out;
}

LqrReport lqr_value(const MatrixXd& gramian, const MatrixXd& a, const VectorXd& s0) {
  if (s0.size() != a.rows()) throw DimensionError("lqr_value: initial state dimension mismatch");
  std::vector<MatrixXd> history;
  const RiccatiIterate it = riccati_fixed_point(a, gramian, {}, &history);
  if (norm2(dare_residual(a, gramian, it.p)) > 1e-8 * norm2(it.p)) throw NumericError("lqr_value: residual check failed");
  LqrReport r;
  r.p_riccati = it.p;
  r.iterations = it.iterations;
  r.initial_state = s0;
  r.j_value = s0.dot(it.p * s0);
  for (std::size_t l = 1; l < history.size(); ++l)
    if (lambda_min(history[l] - history[l - 1]) < -1e-9 * norm2(history[l])) r.monotone = false;
  return r;
}

ChannelComparison compare_channel_addition(const PlantModel& p, const VectorXd& b_new, const VectorXd& s0) {
  const PlantModel extended = add_channel(p, b_new);
  const MatrixXd g0 = p.input_gramian();
  const MatrixXd g1 = extended.input_gramian();
  std::vector<MatrixXd> h0, h1;
  const MatrixXd p0 = riccati_fixed_point(p.a(), g0, {}, &h0).p;
  const MatrixXd p1 = riccati_fixed_point(p.a(), g1, {}, &h1).p;
  ChannelComparison c;
  c.j0 = s0.dot(p0 * s0);
  c.j1 = s0.dot(p1 * s0);
  c.monotone = c.j0 >= c.j1 - 1e-9 * c.j0;
  c.iterates_ordered = true;
  const std::size_t steps = std::max(h0.size(), h1.size());
  for (std::size_t l = 0; l < steps; ++l) {
    const MatrixXd& a0 = h0[std::min(l, h0.size() - 1)];
    const MatrixXd& a1 = h1[std::min(l, h1.size() - 1)];
    if (lambda_min(a0 - a1) < -1e-9 * norm2(a0)) {
      c.iterates_ordered = false;
      break;
    }
  }
  return c;
}

}  // namespace ppcc
