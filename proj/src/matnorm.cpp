#include "mvhmm/matnorm.hpp"

#include <cmath>

namespace mvhmm {

namespace {

constexpr double kLog2Pi = 1.8378770664093454835606594728112;  // log(2*pi)

Eigen::LLT<Matrix> factor(const Matrix& A, const char* which) {
  if (A.rows() != A.cols() || A.rows() == 0)
    throw DecompositionError(which, std::string(which) + " is not a non-empty square matrix");
  const double scale = 1.0 + A.cwiseAbs().maxCoeff();
  if (!A.allFinite() || (A - A.transpose()).cwiseAbs().maxCoeff() > 1e-10 * scale)
    throw DecompositionError(which, std::string(which) + " is not symmetric");
  Eigen::LLT<Matrix> llt(A);
  if (llt.info() != Eigen::Success)
    throw DecompositionError(which, std::string(which) + " is not positive definite");
  const auto diag = llt.matrixLLT().diagonal();
  if (!(diag.array() > 0.0).all() || !diag.allFinite())
    throw DecompositionError(which, std::string(which) + " is not positive definite");
  return llt;
}

double log_det_from(const Eigen::LLT<Matrix>& llt) {
  return 2.0 * llt.matrixLLT().diagonal().array().log().sum();
}

}  // namespace

double log_det_spd(const Matrix& A, const char* which) {
  return log_det_from(factor(A, which));
}

double log_density(const Matrix& X, const MatNormParams& params) {
  const auto P = params.mean.rows(), R = params.mean.cols();
  if (X.rows() != P || X.cols() != R || params.sigma.rows() != P || params.psi.rows() != R)
    throw Error("log_density: shapes do not conform");
  const auto sigmaLlt = factor(params.sigma, "Sigma");
  const auto psiLlt = factor(params.psi, "Psi");

  // tr[Sigma^-1 D Psi^-1 D'] = || L_Sigma^-1 D L_Psi^-T ||_F^2
  const Matrix A = sigmaLlt.matrixL().solve(X - params.mean);
  const Matrix Bt = psiLlt.matrixL().solve(A.transpose());
  const double quad = Bt.squaredNorm();

  return -0.5 * static_cast<double>(P * R) * kLog2Pi -
         0.5 * static_cast<double>(R) * log_det_from(sigmaLlt) -
         0.5 * static_cast<double>(P) * log_det_from(psiLlt) - 0.5 * quad;
}

Matrix sample(const MatNormParams& params, std::mt19937_64& rng) {
  const auto A = factor(params.sigma, "Sigma").matrixL().toDenseMatrix();
  const auto B = factor(params.psi, "Psi").matrixL().toDenseMatrix();
  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix Z(params.mean.rows(), params.mean.cols());
  // column-major fill order is part of the determinism contract
  for (Eigen::Index c = 0; c < Z.cols(); ++c)
    for (Eigen::Index r = 0; r < Z.rows(); ++r) Z(r, c) = normal(rng);
  return params.mean + A * Z * B.transpose();
}

MatNormEvaluator::MatNormEvaluator(const MatNormParams& params)
    : meanVec_(params.mean.reshaped()) {
  const auto P = params.mean.rows(), R = params.mean.cols();
  if (params.sigma.rows() != P || params.psi.rows() != R)
    throw Error("MatNormEvaluator: shapes do not conform");
  const auto sigmaLlt = factor(params.sigma, "Sigma");
  const auto psiLlt = factor(params.psi, "Psi");
  const Matrix sigmaInvL = sigmaLlt.matrixL().solve(Matrix::Identity(P, P));
  const Matrix psiInvL = psiLlt.matrixL().solve(Matrix::Identity(R, R));
  whiten_.setZero(P * R, P * R);
  for (Eigen::Index a = 0; a < R; ++a)
    for (Eigen::Index b = 0; b <= a; ++b)
      whiten_.block(a * P, b * P, P, P) = psiInvL(a, b) * sigmaInvL;
  logNorm_ = -0.5 * static_cast<double>(P * R) * kLog2Pi -
             0.5 * static_cast<double>(R) * log_det_from(sigmaLlt) -
             0.5 * static_cast<double>(P) * log_det_from(psiLlt);
}

Vector MatNormEvaluator::log_density_packed(const Matrix& vecData) const {
  Matrix centered = vecData.colwise() - meanVec_;
  const Matrix white = whiten_.triangularView<Eigen::Lower>() * centered;
  return (logNorm_ - 0.5 * white.colwise().squaredNorm().array()).matrix().transpose();
}

}  // namespace mvhmm
