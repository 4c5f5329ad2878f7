#ifndef MVHMM_COVARIANCE_HPP
#define MVHMM_COVARIANCE_HPP

#include "mvhmm/panel.hpp"
#include "mvhmm/structures.hpp"
#include "mvhmm/types.hpp"

#include <vector>

namespace mvhmm {

/// lambda * Gamma * diag(delta) * Gamma' with |diag(delta)| = 1 and Gamma orthogonal.
/// Columns of gamma are paired with entries of delta.
struct SpectralParts {
  double lambda = 1.0;
  Matrix gamma;
  Vector delta;

  Matrix assemble() const;
};

/// Eigen-decomposition of an SPD matrix, eigenvalues in descending order.
SpectralParts decompose(const Matrix& cov);

std::vector<SpectralParts> identity_parts(int K, int Q);

/// Per-state weighted scatter matrices (Y_k for rows, W_k for columns) and
/// their posterior weights sum_{i,t} z_itk.
struct ScatterSet {
  std::vector<Matrix> scatters;
  std::vector<double> weights;
};

/// Output of a covariance update: the assembled matrices and the spectral
/// parts that produced them. Shared parts are bit-identical across states.
struct CovarianceEstimate {
  std::vector<Matrix> cov;
  std::vector<SpectralParts> parts;
};

struct UpdateOptions {
  /// Rank-deficient scatters get 1e-10 * tr(Y)/Q * I added instead of throwing.
  bool allowJitter = false;
  int mmMaxIter = 100;
  double mmTol = 1e-8;
};

/// Conditional maximizer of the row-covariance part of the complete-data
/// log-likelihood under `structure`. `prev` supplies the previous volumes,
/// shapes and orientation for the structures whose update is conditional on
/// them (VEI, VEE, EVE, VVE, VEV).
CovarianceEstimate update_sigma(SigmaStructure structure, const ScatterSet& scatter,
                                const std::vector<SpectralParts>& prev, const PanelDims& dims,
                                const UpdateOptions& options = {});

/// Conditional maximizer for the column covariances subject to |Psi_k| = 1.
CovarianceEstimate update_psi(PsiStructure structure, const ScatterSet& scatter,
                              const std::vector<SpectralParts>& prev, const PanelDims& dims,
                              const UpdateOptions& options = {});

/// Inner state of the majorization-minimization orientation solver.
struct MmState {
  Matrix gamma;
  Matrix F;                        // last linearization matrix
  double objective = 0.0;          // f(gamma) at the returned gamma
  std::vector<double> trace;       // f before the first step, then after each step
  int iterations = 0;
};

/// sum_k tr(Y_k Gamma diag(shape_k)^-1 Gamma')
double orientation_objective(const std::vector<Matrix>& scatters,
                             const std::vector<Vector>& shapes, const Matrix& gamma);

/// Minimizes orientation_objective over orthogonal Gamma by repeatedly
/// minimizing the linear majorizer tr(F Gamma). Stops once the objective
/// moves by less than `tol` or after `maxIter` steps.
MmState mm_orientation(const std::vector<Matrix>& scatters, const std::vector<Vector>& shapes,
                       const Matrix& init, int maxIter = 100, double tol = 1e-8);

}  // namespace mvhmm

#endif  // MVHMM_COVARIANCE_HPP
