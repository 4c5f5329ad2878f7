#ifndef MVHMM_MATNORM_HPP
#define MVHMM_MATNORM_HPP

#include "mvhmm/types.hpp"

#include <random>

namespace mvhmm {

/// Parameters of a P x R matrix-normal law: mean M, row covariance Sigma
/// (P x P) and column covariance Psi (R x R). vec(X) ~ N(vec(M), Psi (x) Sigma).
struct MatNormParams {
  Matrix mean;
  Matrix sigma;
  Matrix psi;
};

/// Log-density of X under the matrix normal, evaluated in trace form with
/// Cholesky solves. Throws DecompositionError naming "Sigma" or "Psi" when a
/// covariance is not positive definite.
double log_density(const Matrix& X, const MatNormParams& params);

/// Draws M + A Z B' with A A' = Sigma, B B' = Psi (Cholesky factors).
Matrix sample(const MatNormParams& params, std::mt19937_64& rng);

/// Cached factorization of one matrix-normal component, used to evaluate
/// many observations at once. Works on packed vec(X) columns.
class MatNormEvaluator {
 public:
  explicit MatNormEvaluator(const MatNormParams& params);

  /// Log-densities of every column of `vecData` ((P*R) x N).
  Vector log_density_packed(const Matrix& vecData) const;

  double log_normalizer() const { return logNorm_; }

 private:
  Vector meanVec_;
  Matrix whiten_;  // (L_Psi^{-1} (x) L_Sigma^{-1}), lower triangular
  double logNorm_ = 0.0;
};

/// log|A| through a Cholesky factorization; throws DecompositionError(which).
double log_det_spd(const Matrix& A, const char* which);

}  // namespace mvhmm

#endif  // MVHMM_MATNORM_HPP
