#pragma once

#include "ppcc/types.hpp"

#include <vector>

namespace ppcc {

struct Spectrum {
  std::vector<Complex> eigenvalues;  // sorted by magnitude, largest first
  double spectral_radius = 0.0;
};

Spectrum eigenvalues(const MatrixXd& m);
// Ascending eigenvalues of a symmetric matrix.
VectorXd symmetric_eigenvalues(const MatrixXd& m);

double spectral_radius(const MatrixXd& m);
bool is_schur_stable(const MatrixXd& m, double margin = 0.0);

double norm2(const MatrixXd& m);
double lambda_min(const MatrixXd& symmetric);
double lambda_max(const MatrixXd& symmetric);
bool is_positive_definite(const MatrixXd& symmetric);
bool is_symmetric(const MatrixXd& m, double rel_tol = 1e-10);

// Partial-pivot LU; throws NumericError when a pivot falls below 1e-12 * ||m||_inf.
MatrixXd lu_solve(const MatrixXd& m, const MatrixXd& rhs);
MatrixXd inverse(const MatrixXd& m);

double norm_inf(const MatrixXd& m);

MatrixXd matrix_power(const MatrixXd& m, int exponent);
MatrixXd block_diagonal(const std::vector<MatrixXd>& blocks);

template <typename DerivedA, typename DerivedB>
MatrixX<typename DerivedA::Scalar> kron(const Eigen::MatrixBase<DerivedA>& a,
                                        const Eigen::MatrixBase<DerivedB>& b) {
  MatrixX<typename DerivedA::Scalar> out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Index i = 0; i < a.rows(); ++i)
    for (Index j = 0; j < a.cols(); ++j)
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

// Solves f^T p f - p + q = 0 for any symmetric q (complex Schur, column sweep).
MatrixXd solve_stein(const MatrixXd& f, const MatrixXd& q);

// Same equation with the Lyapunov preconditions enforced: f Schur stable, q PD.
MatrixXd solve_discrete_lyapunov(const MatrixXd& f, const MatrixXd& q);

struct RiccatiOptions {
  double tolerance = 1e-10;
  int max_iterations = 10000;
};

struct RiccatiIterate {
  MatrixXd p;
  int iterations = 0;
};

// Value iteration P_l = I + A^T Pbar_{l-1} A, Pbar_l = P_l - P_l G (G^T P_l G + I)^{-1} G^T P_l,
// starting from Pbar_0 = 0. When history is given every P_l is appended.
RiccatiIterate riccati_fixed_point(const MatrixXd& a, const MatrixXd& g,
                                   const RiccatiOptions& options = {},
                                   std::vector<MatrixXd>* history = nullptr);

MatrixXd dare_residual(const MatrixXd& a, const MatrixXd& g, const MatrixXd& p);
MatrixXd dare_closed_loop(const MatrixXd& a, const MatrixXd& g, const MatrixXd& p);

// Stabilizing solution of P = I + A^T P A - A^T P G (G^T P G + I)^{-1} G^T P A.
MatrixXd solve_dare(const MatrixXd& a, const MatrixXd& g, const RiccatiOptions& options = {});

// PBH rank tests at every eigenvalue of a with |lambda| >= 1.
bool is_stabilizable(const MatrixXd& a, const MatrixXd& b, double tol = 1e-9);
bool is_detectable(const MatrixXd& a, const MatrixXd& c, double tol = 1e-9);

}  // namespace ppcc
