#include "ppcc/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace ppcc {

namespace {

void require_square(const MatrixXd& m, const char* what) {
  if (m.rows() != m.cols())
    throw DimensionError(std::string(what) + ": matrix is " + std::to_string(m.rows()) + "x" +
                         std::to_string(m.cols()) + ", expected square");
}

void require_finite(const MatrixXd& m, const char* what) {
  if (!m.allFinite()) throw NumericError(std::string(what) + ": non-finite entries");
}

}  // namespace

Spectrum eigenvalues(const MatrixXd& m) {
  require_square(m, "eigenvalues");
  require_finite(m, "eigenvalues");
  Spectrum s;
  if (m.size() == 0) return s;
  Eigen::EigenSolver<MatrixXd> solver(m, false);
  if (solver.info() != Eigen::Success) throw NumericError("eigenvalues: QR iteration did not converge");
  const auto& ev = solver.eigenvalues();
  s.eigenvalues.assign(ev.data(), ev.data() + ev.size());
  std::sort(s.eigenvalues.begin(), s.eigenvalues.end(), [](Complex a, Complex b) {
    if (std::abs(a) != std::abs(b)) return std::abs(a) > std::abs(b);
    if (a.real() != b.real()) return a.real() > b.real();
    return a.imag() > b.imag();
  });
  s.spectral_radius = std::abs(s.eigenvalues.front());
  return s;
}

VectorXd symmetric_eigenvalues(const MatrixXd& m) {
  require_square(m, "symmetric_eigenvalues");
  require_finite(m, "symmetric_eigenvalues");
  Eigen::SelfAdjointEigenSolver<MatrixXd> solver(0.5 * (m + m.transpose()), Eigen::EigenvaluesOnly);
  if (solver.info() != Eigen::Success) throw NumericError("symmetric_eigenvalues: no convergence");
  return solver.eigenvalues();
}

double spectral_radius(const MatrixXd& m) { return eigenvalues(m).spectral_radius; }

bool is_schur_stable(const MatrixXd& m, double margin) { return spectral_radius(m) < 1.0 - margin; }

double norm2(const MatrixXd& m) {
  if (m.size() == 0) return 0.0;
  require_finite(m, "norm2");
  Eigen::JacobiSVD<MatrixXd> svd(m);
  return svd.singularValues()(0);
}

double lambda_min(const MatrixXd& symmetric) { return symmetric_eigenvalues(symmetric).minCoeff(); }
double lambda_max(const MatrixXd& symmetric) { return symmetric_eigenvalues(symmetric).maxCoeff(); }

bool is_symmetric(const MatrixXd& m, double rel_tol) {
  if (m.rows() != m.cols()) return false;
  return (m - m.transpose()).cwiseAbs().maxCoeff() <= rel_tol * std::max(1.0, m.cwiseAbs().maxCoeff());
}

bool is_positive_definite(const MatrixXd& symmetric) {
  if (!is_symmetric(symmetric)) return false;
  Eigen::LLT<MatrixXd> llt(symmetric);
  return llt.info() == Eigen::Success && lambda_min(symmetric) > 0.0;
}

double norm_inf(const MatrixXd& m) {
  if (m.size() == 0) return 0.0;
  return m.cwiseAbs().rowwise().sum().maxCoeff();
}

MatrixXd lu_solve(const MatrixXd& m, const MatrixXd& rhs) {
  require_square(m, "lu_solve");
  if (m.rows() != rhs.rows()) throw DimensionError("lu_solve: right-hand side row mismatch");
  Eigen::PartialPivLU<MatrixXd> lu(m);
  const double threshold = 1e-12 * norm_inf(m);
  const double smallest = lu.matrixLU().diagonal().cwiseAbs().minCoeff();
  if (!(smallest >= threshold) || smallest == 0.0) throw NumericError("lu_solve: matrix is singular");
  return lu.solve(rhs);
}

MatrixXd inverse(const MatrixXd& m) { return lu_solve(m, MatrixXd::Identity(m.rows(), m.cols())); }

MatrixXd matrix_power(const MatrixXd& m, int exponent) {
  require_square(m, "matrix_power");
  if (exponent < 0) throw DimensionError("matrix_power: negative exponent");
  MatrixXd result = MatrixXd::Identity(m.rows(), m.cols());
  MatrixXd base = m;
  while (exponent > 0) {
    if (exponent & 1) result = result * base;
    exponent >>= 1;
    if (exponent > 0) base = base * base;
  }
  return result;
}

MatrixXd block_diagonal(const std::vector<MatrixXd>& blocks) {
  Index rows = 0, cols = 0;
  for (const auto& b : blocks) {
    rows += b.rows();
    cols += b.cols();
  }
  MatrixXd out = MatrixXd::Zero(rows, cols);
  Index r = 0, c = 0;
  for (const auto& b : blocks) {
    out.block(r, c, b.rows(), b.cols()) = b;
    r += b.rows();
    c += b.cols();
  }
  return out;
}

MatrixXd solve_stein(const MatrixXd& f, const MatrixXd& q) {
  require_square(f, "solve_stein");
  require_square(q, "solve_stein");
  if (f.rows() != q.rows()) throw DimensionError("solve_stein: f and q sizes differ");
  const Index n = f.rows();
  if (n == 0) return MatrixXd(0, 0);

  // f = U T U^H, so f^T = U T^H U^H and the equation becomes T^H Y T - Y + U^H q U = 0.
  Eigen::ComplexSchur<Eigen::MatrixXcd> schur(f.cast<Complex>());
  if (schur.info() != Eigen::Success) throw NumericError("solve_stein: Schur decomposition failed");
  const Eigen::MatrixXcd& t = schur.matrixT();
  const Eigen::MatrixXcd& u = schur.matrixU();
  const Eigen::MatrixXcd qt = u.adjoint() * q.cast<Complex>() * u;

  Eigen::MatrixXcd y = Eigen::MatrixXcd::Zero(n, n);
  Eigen::MatrixXcd yt = Eigen::MatrixXcd::Zero(n, n);  // column j of (Y T) once column j is solved
  for (Index j = 0; j < n; ++j) {
    // r(i) = sum_{l<j} Y(i,l) T(l,j)
    Eigen::VectorXcd r = Eigen::VectorXcd::Zero(n);
    if (j > 0) r = y.leftCols(j) * t.col(j).head(j);
    for (Index i = 0; i < n; ++i) {
      Complex s = std::conj(t(i, i)) * r(i);
      for (Index k = 0; k < i; ++k) s += std::conj(t(k, i)) * yt(k, j);
      const Complex denom = 1.0 - std::conj(t(i, i)) * t(j, j);
      if (std::abs(denom) < 1e-14) throw NumericError("solve_stein: reciprocal eigenvalue pair, no unique solution");
      y(i, j) = (qt(i, j) + s) / denom;
      yt(i, j) = r(i) + y(i, j) * t(j, j);
    }
  }
  MatrixXd p = (u * y * u.adjoint()).real();
  return 0.5 * (p + p.transpose());
}

MatrixXd solve_discrete_lyapunov(const MatrixXd& f, const MatrixXd& q) {
  require_square(f, "solve_discrete_lyapunov");
  if (!is_schur_stable(f)) throw NumericError("solve_discrete_lyapunov: f is not Schur stable");
  if (!is_positive_definite(q)) throw NumericError("solve_discrete_lyapunov: q is not symmetric positive definite");
  MatrixXd p = solve_stein(f, q);
  const double residual = norm2(f.transpose() * p * f - p + q);
  if (residual > 1e-8 * norm2(p)) throw NumericError("solve_discrete_lyapunov: residual check failed");
  return p;
}

RiccatiIterate riccati_fixed_point(const MatrixXd& a, const MatrixXd& g, const RiccatiOptions& options,
                                   std::vector<MatrixXd>* history) {
  require_square(a, "riccati_fixed_point");
  require_square(g, "riccati_fixed_point");
  if (a.rows() != g.rows()) throw DimensionError("riccati_fixed_point: a and g sizes differ");
  const Index n = a.rows();
  const MatrixXd eye = MatrixXd::Identity(n, n);

  MatrixXd p_bar = MatrixXd::Zero(n, n);
  MatrixXd p_prev = MatrixXd::Zero(n, n);
  for (int l = 1; l <= options.max_iterations; ++l) {
    MatrixXd p = eye + a.transpose() * p_bar * a;
    p = 0.5 * (p + p.transpose());
    if (!p.allFinite()) throw NumericError("riccati_fixed_point: iteration diverged (pair not stabilizable?)");
    if (history) history->push_back(p);
    const MatrixXd pg = p * g;
    p_bar = p - pg * lu_solve(g.transpose() * pg + eye, pg.transpose());
    if (l > 1 && norm_inf(p - p_prev) <= options.tolerance * std::max(1.0, norm_inf(p))) return {p, l};
    p_prev = std::move(p);
  }
  throw NumericError("riccati_fixed_point: no convergence within " + std::to_string(options.max_iterations) +
                     " iterations");
}

MatrixXd dare_residual(const MatrixXd& a, const MatrixXd& g, const MatrixXd& p) {
  const Index n = a.rows();
  const MatrixXd eye = MatrixXd::Identity(n, n);
  const MatrixXd gpa = g.transpose() * p * a;
  return eye + a.transpose() * p * a - gpa.transpose() * lu_solve(g.transpose() * p * g + eye, gpa) - p;
}

MatrixXd dare_closed_loop(const MatrixXd& a, const MatrixXd& g, const MatrixXd& p) {
  const Index n = a.rows();
  const MatrixXd eye = MatrixXd::Identity(n, n);
  return a - g * lu_solve(g.transpose() * p * g + eye, g.transpose() * p * a);
}

MatrixXd solve_dare(const MatrixXd& a, const MatrixXd& g, const RiccatiOptions& options) {
  require_square(g, "solve_dare");
  if (!is_symmetric(g, 1e-9)) throw DimensionError("solve_dare: g must be symmetric");
  MatrixXd p = riccati_fixed_point(a, g, options).p;
  if (norm2(dare_residual(a, g, p)) > 1e-8 * norm2(p)) throw NumericError("solve_dare: residual check failed");
  if (!is_schur_stable(dare_closed_loop(a, g, p)))
    throw NumericError("solve_dare: closed loop is not Schur stable");
  return p;
}

namespace {

bool pbh_full_rank(const MatrixXd& a, const MatrixXd& extra, bool columns, double tol) {
  const Index n = a.rows();
  if (n == 0) return true;
  const Spectrum spec = eigenvalues(a);
  for (const Complex& lambda : spec.eigenvalues) {
    if (std::abs(lambda) < 1.0 - 1e-9) continue;
    Eigen::MatrixXcd shifted = a.cast<Complex>() - lambda * Eigen::MatrixXcd::Identity(n, n);
    Eigen::MatrixXcd test;
    if (columns) {
      test.resize(n, n + extra.cols());
      test << shifted, extra.cast<Complex>();
    } else {
      test.resize(n + extra.rows(), n);
      test << shifted, extra.cast<Complex>();
    }
    Eigen::JacobiSVD<Eigen::MatrixXcd> svd(test);
    const auto& sv = svd.singularValues();
    const double cutoff = tol * (sv.size() ? sv(0) : 0.0);
    Index rank = 0;
    for (Index k = 0; k < sv.size(); ++k)
      if (sv(k) > cutoff) ++rank;
    if (rank < n) return false;
  }
  return true;
}

}  // namespace

bool is_stabilizable(const MatrixXd& a, const MatrixXd& b, double tol) {
  require_square(a, "is_stabilizable");
  if (b.rows() != a.rows()) throw DimensionError("is_stabilizable: b row count mismatch");
  return pbh_full_rank(a, b, true, tol);
}

bool is_detectable(const MatrixXd& a, const MatrixXd& c, double tol) {
  require_square(a, "is_detectable");
  if (c.cols() != a.cols()) throw DimensionError("is_detectable: c column count mismatch");
  return pbh_full_rank(a, c, false, tol);
}

}  // namespace ppcc
