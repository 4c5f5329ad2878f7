#ifndef MVHMM_CRITERIA_HPP
#define MVHMM_CRITERIA_HPP

#include "mvhmm/structures.hpp"

namespace mvhmm {

/// (K-1) initial + K(K-1) transition + K*P*R mean parameters plus the
/// covariance counts of both structures.
long n_free_params(StructurePair structure, int K, int P, int R);

/// -2 logLik + nParams * log(nObs); smaller is better.
double bic(double logLik, long nParams, long nObs);

}  // namespace mvhmm

#endif  // MVHMM_CRITERIA_HPP
