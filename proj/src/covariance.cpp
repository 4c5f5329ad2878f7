#include "mvhmm/covariance.hpp"

#include <cmath>
#include <string>

namespace mvhmm {

namespace {

Matrix symmetrize(const Matrix& A) { return 0.5 * (A + A.transpose()); }

// |diag(v)|^{1/Q}
double geometric_mean(const Vector& v) {
  if (!((v.array() > 0.0).all()) || !v.allFinite())
    throw DecompositionError("scatter", "non-positive diagonal in a scatter matrix");
  return std::exp(v.array().log().mean());
}

struct Eig {
  Vector values;  // descending
  Matrix vectors;
};

Eig eig_descending(const Matrix& A) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(symmetrize(A));
  if (es.info() != Eigen::Success)
    throw DecompositionError("scatter", "eigendecomposition failed");
  const auto Q = A.rows();
  Eig out{Vector(Q), Matrix(Q, Q)};
  for (Eigen::Index j = 0; j < Q; ++j) {
    out.values(j) = es.eigenvalues()(Q - 1 - j);
    out.vectors.col(j) = es.eigenvectors().col(Q - 1 - j);
  }
  return out;
}

// |A|^{1/Q} for SPD A via Cholesky.
double det_root(const Matrix& A, const char* which) {
  Eigen::LLT<Matrix> llt(A);
  if (llt.info() != Eigen::Success)
    throw DecompositionError(which, std::string(which) + " is not positive definite");
  return std::exp(2.0 * llt.matrixLLT().diagonal().array().log().sum() /
                  static_cast<double>(A.rows()));
}

// Positive-definiteness gate for scatters, with the optional jitter policy.
Matrix gate(const Matrix& Y, int k, const char* which, bool allowJitter) {
  const Matrix S = symmetrize(Y);
  const auto Q = S.rows();
  const double tr = S.trace();
  auto fail = [&](const std::string& why) {
    return DecompositionError(which, std::string(which) + " scatter of state " +
                                         std::to_string(k + 1) + " " + why);
  };
  if (!S.allFinite()) throw fail("is not finite");
  if (!(tr > 0.0)) throw fail("is zero or indefinite");
  const double minEig = Eigen::SelfAdjointEigenSolver<Matrix>(S, Eigen::EigenvaluesOnly)
                            .eigenvalues()(0);
  if (minEig > 1e-12 * tr / static_cast<double>(Q)) return S;
  if (!allowJitter) throw fail("is singular");
  Matrix J = S;
  J.diagonal().array() += 1e-10 * tr / static_cast<double>(Q);
  if (minEig < 0.0) J.diagonal().array() -= minEig;
  return J;
}

void check_inputs(const ScatterSet& sc, const std::vector<SpectralParts>& prev, int Q,
                  const char* which) {
  const auto K = sc.scatters.size();
  if (K == 0 || sc.weights.size() != K)
    throw Error(std::string(which) + " update: scatter/weight count mismatch");
  if (!prev.empty() && prev.size() != K)
    throw Error(std::string(which) + " update: previous parts count mismatch");
  for (std::size_t k = 0; k < K; ++k) {
    if (sc.scatters[k].rows() != Q || sc.scatters[k].cols() != Q)
      throw Error(std::string(which) + " update: scatter has wrong shape");
    if (!(sc.weights[k] > 0.0))
      throw EmptyStateError(static_cast<int>(k), sc.weights[k],
                            "empty state " + std::to_string(k + 1) + " (weight " +
                                std::to_string(sc.weights[k]) + ")");
  }
}

SpectralParts prev_or_identity(const std::vector<SpectralParts>& prev, std::size_t k, int Q) {
  if (!prev.empty() && prev[k].gamma.rows() == Q) return prev[k];
  return SpectralParts{1.0, Matrix::Identity(Q, Q), Vector::Ones(Q)};
}

SpectralParts axis_parts(double lambda, const Vector& delta) {
  return SpectralParts{lambda, Matrix::Identity(delta.size(), delta.size()), delta};
}

CovarianceEstimate assemble_all(std::vector<SpectralParts> parts) {
  CovarianceEstimate out;
  out.cov.reserve(parts.size());
  for (const auto& p : parts) out.cov.push_back(p.assemble());
  out.parts = std::move(parts);
  return out;
}

}  // namespace

Matrix SpectralParts::assemble() const {
  return symmetrize(lambda * gamma * delta.asDiagonal() * gamma.transpose());
}

SpectralParts decompose(const Matrix& cov) {
  const Eig e = eig_descending(cov);
  if (!(e.values.array() > 0.0).all())
    throw DecompositionError("covariance", "covariance is not positive definite");
  const double lambda = std::exp(e.values.array().log().mean());
  return SpectralParts{lambda, e.vectors, e.values / lambda};
}

std::vector<SpectralParts> identity_parts(int K, int Q) {
  return std::vector<SpectralParts>(
      static_cast<std::size_t>(K), SpectralParts{1.0, Matrix::Identity(Q, Q), Vector::Ones(Q)});
}

double orientation_objective(const std::vector<Matrix>& scatters,
                             const std::vector<Vector>& shapes, const Matrix& gamma) {
  double f = 0.0;
  for (std::size_t k = 0; k < scatters.size(); ++k) {
    const Matrix rotated = gamma.transpose() * scatters[k] * gamma;
    f += (rotated.diagonal().array() / shapes[k].array()).sum();
  }
  return f;
}

MmState mm_orientation(const std::vector<Matrix>& scatters, const std::vector<Vector>& shapes,
                       const Matrix& init, int maxIter, double tol) {
  const auto Q = init.rows();
  if (init.cols() != Q ||
      (init.transpose() * init - Matrix::Identity(Q, Q)).cwiseAbs().maxCoeff() > 1e-8)
    throw Error("mm_orientation: initial orientation is not orthogonal");
  if (scatters.size() != shapes.size() || scatters.empty())
    throw Error("mm_orientation: scatter/shape count mismatch");

  std::vector<double> largest(scatters.size());
  for (std::size_t k = 0; k < scatters.size(); ++k)
    largest[k] = eig_descending(scatters[k]).values(0);

  MmState st;
  st.gamma = init;
  st.objective = orientation_objective(scatters, shapes, init);
  st.trace.push_back(st.objective);
  for (int it = 1; it <= maxIter; ++it) {
    // f(G) <= const + 2 tr(F G) with F = sum_k D_k^-1 G0' (Y_k - e_k I)
    st.F.setZero(Q, Q);
    for (std::size_t k = 0; k < scatters.size(); ++k) {
      const Vector inv = shapes[k].cwiseInverse();
      st.F += inv.asDiagonal() * (st.gamma.transpose() * scatters[k] -
                                  largest[k] * st.gamma.transpose());
    }
    Eigen::JacobiSVD<Matrix> svd(st.F, Eigen::ComputeFullU | Eigen::ComputeFullV);
    // argmin over orthogonal G of tr(U S V' G) is -V U'
    st.gamma = -svd.matrixV() * svd.matrixU().transpose();
    const double next = orientation_objective(scatters, shapes, st.gamma);
    const double change = std::abs(st.objective - next);
    st.objective = next;
    st.trace.push_back(next);
    st.iterations = it;
    if (change < tol) break;
  }
  return st;
}

CovarianceEstimate update_sigma(SigmaStructure structure, const ScatterSet& sc,
                                const std::vector<SpectralParts>& prev, const PanelDims& dims,
                                const UpdateOptions& opt) {
  const int P = dims.P;
  check_inputs(sc, prev, P, "Sigma");
  const std::size_t K = sc.scatters.size();
  const double R = dims.R, Pd = P;
  const double totalWeight = static_cast<double>(dims.I) * dims.T;

  std::vector<Matrix> Y;
  Y.reserve(K);
  for (std::size_t k = 0; k < K; ++k)
    Y.push_back(gate(sc.scatters[k], static_cast<int>(k), "Sigma", opt.allowJitter));
  Matrix Ysum = Matrix::Zero(P, P);
  for (const auto& y : Y) Ysum += y;

  std::vector<SpectralParts> parts(K);
  switch (structure) {
    case SigmaStructure::EII: {
      const double lambda = Ysum.trace() / (Pd * R * totalWeight);
      for (auto& p : parts) p = axis_parts(lambda, Vector::Ones(P));
      break;
    }
    case SigmaStructure::VII:
      for (std::size_t k = 0; k < K; ++k)
        parts[k] = axis_parts(Y[k].trace() / (Pd * R * sc.weights[k]), Vector::Ones(P));
      break;
    case SigmaStructure::EEI: {
      const Vector d = Ysum.diagonal();
      const double g = geometric_mean(d);
      const SpectralParts shared = axis_parts(g / (R * totalWeight), d / g);
      for (auto& p : parts) p = shared;
      break;
    }
    case SigmaStructure::VEI: {
      Vector acc = Vector::Zero(P);
      for (std::size_t k = 0; k < K; ++k)
        acc += Y[k].diagonal() / prev_or_identity(prev, k, P).lambda;
      const Vector delta = acc / geometric_mean(acc);
      for (std::size_t k = 0; k < K; ++k) {
        const double lambda =
            (Y[k].diagonal().array() / delta.array()).sum() / (Pd * R * sc.weights[k]);
        parts[k] = axis_parts(lambda, delta);
      }
      break;
    }
    case SigmaStructure::EVI: {
      double acc = 0.0;
      for (std::size_t k = 0; k < K; ++k) {
        const Vector d = Y[k].diagonal();
        const double g = geometric_mean(d);
        parts[k].delta = d / g;
        acc += g;
      }
      const double lambda = acc / (R * totalWeight);
      for (auto& p : parts) {
        p.lambda = lambda;
        p.gamma = Matrix::Identity(P, P);
      }
      break;
    }
    case SigmaStructure::VVI:
      for (std::size_t k = 0; k < K; ++k) {
        const Vector d = Y[k].diagonal();
        const double g = geometric_mean(d);
        parts[k] = axis_parts(g / (R * sc.weights[k]), d / g);
      }
      break;
    case SigmaStructure::EEE: {
      const Matrix sigma = symmetrize(Ysum / (R * totalWeight));
      const SpectralParts shared = decompose(sigma);
      for (auto& p : parts) p = shared;
      return CovarianceEstimate{std::vector<Matrix>(K, sigma), parts};
    }
    case SigmaStructure::VEE: {
      Matrix acc = Matrix::Zero(P, P);
      for (std::size_t k = 0; k < K; ++k) acc += Y[k] / prev_or_identity(prev, k, P).lambda;
      const Matrix C = symmetrize(acc / det_root(acc, "Sigma"));
      const Eigen::LLT<Matrix> cLlt(C);
      SpectralParts shape = decompose(C);
      shape.lambda = 1.0;
      for (std::size_t k = 0; k < K; ++k) {
        const double tr = cLlt.solve(Y[k]).trace();
        parts[k] = SpectralParts{tr / (Pd * R * sc.weights[k]), shape.gamma, shape.delta};
      }
      break;
    }
    case SigmaStructure::EVE:
    case SigmaStructure::VVE: {
      const bool variableVolume = structure == SigmaStructure::VVE;
      std::vector<Matrix> scaled(K);
      std::vector<Vector> shapes(K);
      for (std::size_t k = 0; k < K; ++k) {
        const SpectralParts p = prev_or_identity(prev, k, P);
        scaled[k] = variableVolume ? Matrix(Y[k] / p.lambda) : Y[k];
        shapes[k] = p.delta;
      }
      const Matrix init = prev_or_identity(prev, 0, P).gamma;
      const Matrix gamma = mm_orientation(scaled, shapes, init, opt.mmMaxIter, opt.mmTol).gamma;
      double acc = 0.0;
      for (std::size_t k = 0; k < K; ++k) {
        const Vector d = (gamma.transpose() * Y[k] * gamma).diagonal();
        const double g = geometric_mean(d);
        parts[k].gamma = gamma;
        parts[k].delta = d / g;
        if (variableVolume) {
          parts[k].lambda = g / (R * sc.weights[k]);
        } else {
          // tr(Gamma Delta_k^-1 Gamma' Y_k) = P * g for the normalized shape
          acc += (d.array() / parts[k].delta.array()).sum();
        }
      }
      if (!variableVolume) {
        const double lambda = acc / (Pd * R * totalWeight);
        for (auto& p : parts) p.lambda = lambda;
      }
      break;
    }
    case SigmaStructure::EEV:
    case SigmaStructure::VEV: {
      const bool variableVolume = structure == SigmaStructure::VEV;
      std::vector<Eig> eigs;
      eigs.reserve(K);
      Vector acc = Vector::Zero(P);
      for (std::size_t k = 0; k < K; ++k) {
        eigs.push_back(eig_descending(Y[k]));
        acc += variableVolume ? Vector(eigs[k].values / prev_or_identity(prev, k, P).lambda)
                              : eigs[k].values;
      }
      const double g = geometric_mean(acc);
      const Vector delta = acc / g;
      for (std::size_t k = 0; k < K; ++k) {
        parts[k].gamma = eigs[k].vectors;
        parts[k].delta = delta;
        parts[k].lambda =
            variableVolume
                ? (eigs[k].values.array() / delta.array()).sum() / (Pd * R * sc.weights[k])
                : g / (R * totalWeight);
      }
      break;
    }
    case SigmaStructure::EVV: {
      std::vector<Matrix> shapes(K);
      double acc = 0.0;
      for (std::size_t k = 0; k < K; ++k) {
        const double root = det_root(Y[k], "Sigma");
        shapes[k] = symmetrize(Y[k] / root);
        acc += root;
      }
      const double lambda = acc / (R * totalWeight);
      CovarianceEstimate out;
      for (std::size_t k = 0; k < K; ++k) {
        SpectralParts p = decompose(shapes[k]);
        p.lambda = lambda;
        out.cov.push_back(lambda * shapes[k]);
        out.parts.push_back(std::move(p));
      }
      return out;
    }
    case SigmaStructure::VVV: {
      CovarianceEstimate out;
      for (std::size_t k = 0; k < K; ++k) {
        const Matrix sigma = symmetrize(Y[k] / (R * sc.weights[k]));
        out.cov.push_back(sigma);
        out.parts.push_back(decompose(sigma));
      }
      return out;
    }
  }
  return assemble_all(std::move(parts));
}

CovarianceEstimate update_psi(PsiStructure structure, const ScatterSet& sc,
                              const std::vector<SpectralParts>& prev, const PanelDims& dims,
                              const UpdateOptions& opt) {
  const int R = dims.R;
  check_inputs(sc, prev, R, "Psi");
  const std::size_t K = sc.scatters.size();

  if (structure == PsiStructure::II) {
    return CovarianceEstimate{std::vector<Matrix>(K, Matrix::Identity(R, R)),
                              identity_parts(static_cast<int>(K), R)};
  }

  std::vector<Matrix> W;
  W.reserve(K);
  for (std::size_t k = 0; k < K; ++k)
    W.push_back(gate(sc.scatters[k], static_cast<int>(k), "Psi", opt.allowJitter));
  Matrix Wsum = Matrix::Zero(R, R);
  for (const auto& w : W) Wsum += w;

  std::vector<SpectralParts> parts(K);
  switch (structure) {
    case PsiStructure::II:
      break;
    case PsiStructure::EI: {
      const Vector d = Wsum.diagonal();
      const SpectralParts shared = axis_parts(1.0, d / geometric_mean(d));
      for (auto& p : parts) p = shared;
      break;
    }
    case PsiStructure::VI:
      for (std::size_t k = 0; k < K; ++k) {
        const Vector d = W[k].diagonal();
        parts[k] = axis_parts(1.0, d / geometric_mean(d));
      }
      break;
    case PsiStructure::EE: {
      const Matrix psi = symmetrize(Wsum / det_root(Wsum, "Psi"));
      SpectralParts shared = decompose(psi);
      shared.lambda = 1.0;
      for (auto& p : parts) p = shared;
      return CovarianceEstimate{std::vector<Matrix>(K, psi), parts};
    }
    case PsiStructure::VE: {
      std::vector<Vector> shapes(K);
      for (std::size_t k = 0; k < K; ++k) shapes[k] = prev_or_identity(prev, k, R).delta;
      const Matrix init = prev_or_identity(prev, 0, R).gamma;
      const Matrix gamma = mm_orientation(W, shapes, init, opt.mmMaxIter, opt.mmTol).gamma;
      for (std::size_t k = 0; k < K; ++k) {
        const Vector d = (gamma.transpose() * W[k] * gamma).diagonal();
        parts[k] = SpectralParts{1.0, gamma, d / geometric_mean(d)};
      }
      break;
    }
    case PsiStructure::EV: {
      std::vector<Eig> eigs;
      eigs.reserve(K);
      Vector acc = Vector::Zero(R);
      for (std::size_t k = 0; k < K; ++k) {
        eigs.push_back(eig_descending(W[k]));
        acc += eigs[k].values;
      }
      const Vector delta = acc / geometric_mean(acc);
      for (std::size_t k = 0; k < K; ++k) parts[k] = SpectralParts{1.0, eigs[k].vectors, delta};
      break;
    }
    case PsiStructure::VV: {
      CovarianceEstimate out;
      for (std::size_t k = 0; k < K; ++k) {
        const Matrix psi = symmetrize(W[k] / det_root(W[k], "Psi"));
        SpectralParts p = decompose(psi);
        p.lambda = 1.0;
        out.cov.push_back(psi);
        out.parts.push_back(std::move(p));
      }
      return out;
    }
  }
  return assemble_all(std::move(parts));
}

}  // namespace mvhmm
