#ifndef MVHMM_HMM_HPP
#define MVHMM_HMM_HPP

#include "mvhmm/covariance.hpp"
#include "mvhmm/matnorm.hpp"
#include "mvhmm/panel.hpp"
#include "mvhmm/rng.hpp"
#include "mvhmm/structures.hpp"

#include <cstdint>
#include <functional>
#include <random>
#include <string>
#include <vector>

namespace mvhmm {

/// Homogeneous HMM with matrix-normal emissions. trans(j, k) = Pr(S_t = k | S_{t-1} = j).
struct HmmParams {
  int K = 0;
  Vector pi;
  Matrix trans;
  std::vector<MatNormParams> states;
};

/// Throws Error if any invariant fails: stochastic pi and rows of trans
/// (within `tol`), consistent shapes, and |Psi_k| = 1 within `psiDetTol`
/// when `psiDetTol` > 0.
void validate(const HmmParams& params, double tol = 1e-12, double psiDetTol = 0.0);

/// Smoothed quantities for a panel. Rows of z, logGamma and logBeta are
/// indexed n = i*T + t (zero-based unit i, time t).
struct Posteriors {
  int I = 0, T = 0, K = 0;
  Matrix z;
  Matrix logGamma;  // forward log-probabilities
  Matrix logBeta;   // backward log-probabilities
  std::vector<double> zz;  // Pr(S_{t-1} = j, S_t = k | X_i); zero at t = 0
  Vector unitLogLik;
  double logLik = 0.0;

  double pair(int i, int t, int j, int k) const {
    return zz[((static_cast<std::size_t>(i) * T + t) * K + j) * K + k];
  }
  double& pair(int i, int t, int j, int k) {
    return zz[((static_cast<std::size_t>(i) * T + t) * K + j) * K + k];
  }
};

/// Log-space forward-backward recursions.
Posteriors e_step(const MatrixPanel& panel, const HmmParams& params);

/// Parameters together with the spectral parts the conditional covariance
/// updates need from the previous iteration.
struct ModelState {
  HmmParams params;
  std::vector<SpectralParts> sigmaParts;
  std::vector<SpectralParts> psiParts;
};

/// Derives spectral parts for `params` consistent with `structure` (shared
/// orientations are taken from state 1).
ModelState make_state(HmmParams params, StructurePair structure);

/// Posterior-weighted sufficient statistics: weights N_k, means vec(M_k) and
/// the (P*R) x (P*R) scatter sum_n z_nk (x_n - m_k)(x_n - m_k)'.
struct StateMoments {
  Vector weight;
  std::vector<Vector> mean;
  std::vector<Matrix> scatter;
};

/// Throws EmptyStateError when a state weight drops below `collapseFloor`.
StateMoments compute_moments(const MatrixPanel& panel, const Posteriors& post,
                             double collapseFloor = 0.0);

/// Y_k = sum z (X - M_k) Psi_k^-1 (X - M_k)' from the packed scatter.
Matrix row_scatter(const Matrix& packedScatter, const Matrix& psi, int P, int R);
/// W_k = sum z (X - M_k)' Sigma_k^-1 (X - M_k) from the packed scatter.
Matrix column_scatter(const Matrix& packedScatter, const Matrix& sigma, int P, int R);

/// First conditional maximization: pi, transition matrix, means and Sigma_k
/// with Psi_k held at `prev`.
ModelState cm_step1(const MatrixPanel& panel, const Posteriors& post, const ModelState& prev,
                    SigmaStructure structure, const UpdateOptions& options = {});

/// Second conditional maximization: Psi_k with everything else held at `current`.
ModelState cm_step2(const MatrixPanel& panel, const Posteriors& post,
                    const ModelState& current, PsiStructure structure,
                    const UpdateOptions& options = {});

/// Uniform pi, flat-Dirichlet transition rows, K distinct observed slices as
/// means, identity covariances.
HmmParams random_init(const MatrixPanel& panel, int K, StructurePair structure,
                      std::mt19937_64& rng);

/// Local decoding: argmax_k z_itk, ties toward the lower index. I x T, zero-based.
IndexMatrix decode(const Posteriors& post);

struct IterationInfo {
  int start = -1;  // short-EM start index, -1 for the continued best start
  int iteration = 0;
  const HmmParams* params = nullptr;
  const Posteriors* posteriors = nullptr;
};

struct FitConfig {
  int maxIter = 500;
  double tol = 1e-8;  // relative log-likelihood change
  int shortRuns = 100;
  int shortIters = 1;
  std::uint64_t seed = kDefaultSeed;
  bool jitter = true;
  int mmMaxIter = 100;
  double mmTol = 1e-8;
  /// Called after every ECM iteration of every start.
  std::function<void(const IterationInfo&)> observer;
};

struct FitReport {
  StructurePair structure;
  int K = 0;
  PanelDims dims;
  HmmParams params;
  Posteriors posteriors;
  std::vector<double> logLikTrace;
  double logLik = 0.0;
  long nParams = 0;
  double bic = 0.0;
  IndexMatrix decoded;  // I x T, zero-based state labels
  int iterations = 0;
  bool converged = false;
  int bestStart = 0;
  double wallTime = 0.0;
  std::vector<std::string> warnings;
  std::vector<std::string> unitLabels, timeLabels;
};

/// Short-EM initialization followed by ECM to convergence. States in the
/// result are ordered by the grand mean of their mean matrices, ascending.
/// Throws FitFailure when every start fails or the continued run breaks down.
FitReport fit(const MatrixPanel& panel, StructurePair structure, int K,
              const FitConfig& config = {});

/// Reorders states so that new state k is old state order[k].
void permute_states(HmmParams& params, const std::vector<int>& order);
void permute_states(Posteriors& post, const std::vector<int>& order);

}  // namespace mvhmm

#endif  // MVHMM_HMM_HPP
