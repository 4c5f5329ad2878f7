#include "mvhmm/hmm.hpp"

#include "mvhmm/criteria.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>
#include <optional>
#include <sstream>

namespace mvhmm {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

template <class Fn>
double log_sum_exp(int K, Fn&& term) {
  double mx = kNegInf;
  for (int k = 0; k < K; ++k) mx = std::max(mx, term(k));
  if (mx == kNegInf) return kNegInf;
  double s = 0.0;
  for (int k = 0; k < K; ++k) s += std::exp(term(k) - mx);
  return mx + std::log(s);
}

bool shares_orientation(SigmaStructure s) {
  return s == SigmaStructure::EVE || s == SigmaStructure::VVE;
}

std::vector<SpectralParts> parts_for(const std::vector<Matrix>& covs, bool sharedOrientation,
                                     bool unitVolume) {
  std::vector<SpectralParts> parts;
  parts.reserve(covs.size());
  for (const auto& c : covs) parts.push_back(decompose(c));
  if (sharedOrientation) {
    const Matrix gamma = parts.front().gamma;
    for (std::size_t k = 0; k < covs.size(); ++k) {
      const Vector d = (gamma.transpose() * covs[k] * gamma).diagonal();
      const double g = std::exp(d.array().log().mean());
      parts[k] = SpectralParts{g, gamma, d / g};
    }
  }
  if (unitVolume)
    for (auto& p : parts) p.lambda = 1.0;
  return parts;
}

// Canonical state order: grand mean of M_k ascending, ties by first differing entry.
std::vector<int> canonical_order(const HmmParams& params) {
  std::vector<int> order(static_cast<std::size_t>(params.K));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    const Matrix& ma = params.states[a].mean;
    const Matrix& mb = params.states[b].mean;
    const double ga = ma.mean(), gb = mb.mean();
    if (ga != gb) return ga < gb;
    for (Eigen::Index j = 0; j < ma.size(); ++j)
      if (ma.reshaped()(j) != mb.reshaped()(j)) return ma.reshaped()(j) < mb.reshaped()(j);
    return false;
  });
  return order;
}

UpdateOptions update_options(const FitConfig& c) {
  return UpdateOptions{c.jitter, c.mmMaxIter, c.mmTol};
}

ModelState apply_cm1(const MatrixPanel& panel, const Posteriors& post, const StateMoments& mom,
                     const ModelState& prev, SigmaStructure structure,
                     const UpdateOptions& options) {
  const auto& d = panel.dims();
  const int K = prev.params.K;
  ModelState next = prev;
  HmmParams& p = next.params;

  for (int k = 0; k < K; ++k) {
    double s = 0.0;
    for (int i = 0; i < d.I; ++i) s += post.z(static_cast<Eigen::Index>(i) * d.T, k);
    p.pi(k) = s / d.I;
  }

  if (d.T > 1) {
    Matrix counts = Matrix::Zero(K, K);
    for (int i = 0; i < d.I; ++i)
      for (int t = 1; t < d.T; ++t)
        for (int j = 0; j < K; ++j)
          for (int k = 0; k < K; ++k) counts(j, k) += post.pair(i, t, j, k);
    for (int j = 0; j < K; ++j) {
      const double row = counts.row(j).sum();
      if (row > 0.0) p.trans.row(j) = counts.row(j) / row;
    }
  }

  ScatterSet rows;
  for (int k = 0; k < K; ++k) {
    p.states[k].mean = mom.mean[k].reshaped(d.P, d.R);
    rows.scatters.push_back(row_scatter(mom.scatter[k], prev.params.states[k].psi, d.P, d.R));
    rows.weights.push_back(mom.weight(k));
  }
  CovarianceEstimate sigma = update_sigma(structure, rows, prev.sigmaParts, d, options);
  for (int k = 0; k < K; ++k) p.states[k].sigma = std::move(sigma.cov[k]);
  next.sigmaParts = std::move(sigma.parts);
  return next;
}

ModelState apply_cm2(const MatrixPanel& panel, const StateMoments& mom, const ModelState& current,
                     PsiStructure structure, const UpdateOptions& options) {
  const auto& d = panel.dims();
  const int K = current.params.K;
  ModelState next = current;
  ScatterSet cols;
  for (int k = 0; k < K; ++k) {
    cols.scatters.push_back(
        column_scatter(mom.scatter[k], current.params.states[k].sigma, d.P, d.R));
    cols.weights.push_back(mom.weight(k));
  }
  CovarianceEstimate psi = update_psi(structure, cols, current.psiParts, d, options);
  for (int k = 0; k < K; ++k) next.params.states[k].psi = std::move(psi.cov[k]);
  next.psiParts = std::move(psi.parts);
  return next;
}

double collapse_floor(const PanelDims& d) { return 1e-6 * static_cast<double>(d.cells()); }

ModelState ecm_iteration(const MatrixPanel& panel, const Posteriors& post, const ModelState& st,
                         StructurePair structure, const UpdateOptions& options) {
  // CM-step 2 reuses the moments: its means are exactly the CM-step 1 means.
  const StateMoments mom = compute_moments(panel, post, collapse_floor(panel.dims()));
  const ModelState half = apply_cm1(panel, post, mom, st, structure.sigma, options);
  return apply_cm2(panel, mom, half, structure.psi, options);
}

}  // namespace

void validate(const HmmParams& p, double tol, double psiDetTol) {
  if (p.K < 1) throw Error("HmmParams: K must be >= 1");
  if (p.pi.size() != p.K || p.trans.rows() != p.K || p.trans.cols() != p.K ||
      static_cast<int>(p.states.size()) != p.K)
    throw Error("HmmParams: inconsistent sizes");
  if ((p.pi.array() < 0.0).any() || std::abs(p.pi.sum() - 1.0) > tol)
    throw Error("HmmParams: initial probabilities are not a distribution");
  for (int j = 0; j < p.K; ++j)
    if ((p.trans.row(j).array() < 0.0).any() || std::abs(p.trans.row(j).sum() - 1.0) > tol)
      throw Error("HmmParams: transition row " + std::to_string(j + 1) + " is not stochastic");
  const auto P = p.states.front().mean.rows(), R = p.states.front().mean.cols();
  for (const auto& s : p.states) {
    if (s.mean.rows() != P || s.mean.cols() != R || s.sigma.rows() != P ||
        s.sigma.cols() != P || s.psi.rows() != R || s.psi.cols() != R)
      throw Error("HmmParams: state shapes differ");
    if (psiDetTol > 0.0 && std::abs(s.psi.determinant() - 1.0) > psiDetTol)
      throw Error("HmmParams: |Psi| differs from 1");
  }
}

Posteriors e_step(const MatrixPanel& panel, const HmmParams& params) {
  const auto& d = panel.dims();
  const int K = params.K, T = d.T;
  const Eigen::Index N = d.cells();
  if (params.states.empty() || params.states.front().mean.rows() != d.P ||
      params.states.front().mean.cols() != d.R)
    throw Error("e_step: parameter shapes do not match the panel");

  Matrix logPhi(N, K);
  for (int k = 0; k < K; ++k)
    logPhi.col(k) = MatNormEvaluator(params.states[k]).log_density_packed(panel.vec_data());
  if (!logPhi.allFinite()) throw NumericalError("non-finite state density in E-step");

  const Vector logPi = params.pi.array().log();
  const Matrix logTrans = params.trans.array().log();

  Posteriors post;
  post.I = d.I;
  post.T = T;
  post.K = K;
  post.z.resize(N, K);
  post.logGamma.resize(N, K);
  post.logBeta.resize(N, K);
  post.zz.assign(static_cast<std::size_t>(N) * K * K, 0.0);
  post.unitLogLik.resize(d.I);

  for (int i = 0; i < d.I; ++i) {
    const Eigen::Index base = static_cast<Eigen::Index>(i) * T;
    for (int k = 0; k < K; ++k) post.logGamma(base, k) = logPhi(base, k) + logPi(k);
    for (int t = 1; t < T; ++t)
      for (int k = 0; k < K; ++k)
        post.logGamma(base + t, k) =
            logPhi(base + t, k) +
            log_sum_exp(K, [&](int j) { return post.logGamma(base + t - 1, j) + logTrans(j, k); });

    for (int k = 0; k < K; ++k) post.logBeta(base + T - 1, k) = 0.0;
    for (int t = T - 2; t >= 0; --t)
      for (int j = 0; j < K; ++j)
        post.logBeta(base + t, j) = log_sum_exp(K, [&](int k) {
          return logPhi(base + t + 1, k) + post.logBeta(base + t + 1, k) + logTrans(j, k);
        });

    const double ll = log_sum_exp(K, [&](int k) { return post.logGamma(base + T - 1, k); });
    if (!std::isfinite(ll))
      throw NumericalError("non-finite log-likelihood for unit " + std::to_string(i + 1));
    post.unitLogLik(i) = ll;

    for (int t = 0; t < T; ++t)
      for (int k = 0; k < K; ++k)
        post.z(base + t, k) = std::exp(post.logGamma(base + t, k) + post.logBeta(base + t, k) - ll);
    for (int t = 1; t < T; ++t)
      for (int j = 0; j < K; ++j)
        for (int k = 0; k < K; ++k)
          post.pair(i, t, j, k) = std::exp(post.logGamma(base + t - 1, j) + logTrans(j, k) +
                                           logPhi(base + t, k) + post.logBeta(base + t, k) - ll);
  }
  post.logLik = post.unitLogLik.sum();
  return post;
}

ModelState make_state(HmmParams params, StructurePair structure) {
  std::vector<Matrix> sig, psi;
  for (const auto& s : params.states) {
    sig.push_back(s.sigma);
    psi.push_back(s.psi);
  }
  ModelState st;
  st.sigmaParts = parts_for(sig, shares_orientation(structure.sigma), false);
  st.psiParts = parts_for(psi, structure.psi == PsiStructure::VE, true);
  st.params = std::move(params);
  return st;
}

StateMoments compute_moments(const MatrixPanel& panel, const Posteriors& post,
                             double collapseFloor) {
  const Matrix& X = panel.vec_data();
  const int K = post.K;
  StateMoments m;
  m.weight = post.z.colwise().sum().transpose();
  for (int k = 0; k < K; ++k) {
    const double w = m.weight(k);
    if (!(w > collapseFloor) || !(w > 0.0)) {
      std::ostringstream msg;
      msg << "state collapse: state " << k + 1 << " has posterior weight " << w;
      throw EmptyStateError(k, w, msg.str());
    }
    const Vector mean = X * post.z.col(k) / w;
    const Matrix centered = X.colwise() - mean;
    const Matrix weighted = centered * post.z.col(k).asDiagonal();
    Matrix scatter = weighted * centered.transpose();
    m.mean.push_back(mean);
    m.scatter.push_back(0.5 * (scatter + scatter.transpose()));
  }
  return m;
}

Matrix row_scatter(const Matrix& S, const Matrix& psi, int P, int R) {
  const Matrix psiInv = psi.llt().solve(Matrix::Identity(R, R));
  Matrix Y = Matrix::Zero(P, P);
  for (int r = 0; r < R; ++r)
    for (int s = 0; s < R; ++s) Y += psiInv(r, s) * S.block(r * P, s * P, P, P);
  return 0.5 * (Y + Y.transpose());
}

Matrix column_scatter(const Matrix& S, const Matrix& sigma, int P, int R) {
  const Matrix sigmaInv = sigma.llt().solve(Matrix::Identity(P, P));
  Matrix W(R, R);
  for (int r = 0; r < R; ++r)
    for (int s = 0; s < R; ++s)
      W(r, s) = (sigmaInv.array() * S.block(r * P, s * P, P, P).array()).sum();
  return 0.5 * (W + W.transpose());
}

ModelState cm_step1(const MatrixPanel& panel, const Posteriors& post, const ModelState& prev,
                    SigmaStructure structure, const UpdateOptions& options) {
  const StateMoments mom = compute_moments(panel, post, collapse_floor(panel.dims()));
  return apply_cm1(panel, post, mom, prev, structure, options);
}

ModelState cm_step2(const MatrixPanel& panel, const Posteriors& post, const ModelState& current,
                    PsiStructure structure, const UpdateOptions& options) {
  StateMoments mom = compute_moments(panel, post, collapse_floor(panel.dims()));
  // scatter around the current means, which need not be this posterior's means
  const Matrix& X = panel.vec_data();
  for (int k = 0; k < post.K; ++k) {
    const Vector mean = current.params.states[k].mean.reshaped();
    const Matrix centered = X.colwise() - mean;
    const Matrix weighted = centered * post.z.col(k).asDiagonal();
    const Matrix s = weighted * centered.transpose();
    mom.scatter[k] = 0.5 * (s + s.transpose());
    mom.mean[k] = mean;
  }
  return apply_cm2(panel, mom, current, structure, options);
}

HmmParams random_init(const MatrixPanel& panel, int K, StructurePair, std::mt19937_64& rng) {
  const auto& d = panel.dims();
  if (K < 1) throw UsageError("random_init: K must be >= 1");
  if (K > d.cells())
    throw UsageError("random_init: K=" + std::to_string(K) + " exceeds the " +
                     std::to_string(d.cells()) + " available unit-time slices");
  HmmParams p;
  p.K = K;
  p.pi = Vector::Constant(K, 1.0 / K);
  p.trans.resize(K, K);
  std::exponential_distribution<double> expo(1.0);
  for (int j = 0; j < K; ++j) {
    for (int k = 0; k < K; ++k) p.trans(j, k) = expo(rng);
    p.trans.row(j) /= p.trans.row(j).sum();
  }
  // partial Fisher-Yates: K distinct slice indices
  std::vector<long> idx(static_cast<std::size_t>(d.cells()));
  std::iota(idx.begin(), idx.end(), 0L);
  for (int k = 0; k < K; ++k) {
    std::uniform_int_distribution<long> pick(k, d.cells() - 1);
    std::swap(idx[static_cast<std::size_t>(k)], idx[static_cast<std::size_t>(pick(rng))]);
  }
  for (int k = 0; k < K; ++k) {
    MatNormParams s;
    s.mean = panel.vec_data().col(idx[static_cast<std::size_t>(k)]).reshaped(d.P, d.R);
    s.sigma = Matrix::Identity(d.P, d.P);
    s.psi = Matrix::Identity(d.R, d.R);
    p.states.push_back(std::move(s));
  }
  return p;
}

IndexMatrix decode(const Posteriors& post) {
  IndexMatrix labels(post.I, post.T);
  for (int i = 0; i < post.I; ++i)
    for (int t = 0; t < post.T; ++t) {
      const Eigen::Index n = static_cast<Eigen::Index>(i) * post.T + t;
      int best = 0;
      for (int k = 1; k < post.K; ++k)
        if (post.z(n, k) > post.z(n, best)) best = k;
      labels(i, t) = best;
    }
  return labels;
}

void permute_states(HmmParams& params, const std::vector<int>& order) {
  const int K = params.K;
  HmmParams out = params;
  for (int a = 0; a < K; ++a) {
    out.pi(a) = params.pi(order[a]);
    out.states[a] = params.states[order[a]];
    for (int b = 0; b < K; ++b) out.trans(a, b) = params.trans(order[a], order[b]);
  }
  params = std::move(out);
}

void permute_states(Posteriors& post, const std::vector<int>& order) {
  const int K = post.K;
  Posteriors out = post;
  for (int a = 0; a < K; ++a) {
    out.z.col(a) = post.z.col(order[a]);
    out.logGamma.col(a) = post.logGamma.col(order[a]);
    out.logBeta.col(a) = post.logBeta.col(order[a]);
  }
  for (int i = 0; i < post.I; ++i)
    for (int t = 0; t < post.T; ++t)
      for (int a = 0; a < K; ++a)
        for (int b = 0; b < K; ++b) out.pair(i, t, a, b) = post.pair(i, t, order[a], order[b]);
  post = std::move(out);
}

FitReport fit(const MatrixPanel& panel, StructurePair structure, int K, const FitConfig& config) {
  const auto started = std::chrono::steady_clock::now();
  const auto& d = panel.dims();
  if (K < 1) throw UsageError("fit: K must be >= 1");
  if (config.shortRuns < 1 || config.shortIters < 1 || !(config.tol > 0.0))
    throw UsageError("fit: need shortRuns >= 1, shortIters >= 1 and tol > 0");
  if (K > d.cells()) throw UsageError("fit: K exceeds the number of unit-time slices");
  const UpdateOptions options = update_options(config);
  const std::string name = to_string(structure) + " K=" + std::to_string(K);

  struct Run {
    ModelState state;
    Posteriors post;
    std::vector<double> trace;
    int start = 0;
  };
  std::optional<Run> best;
  std::vector<std::string> diagnostics;

  auto notify = [&](int start, int iteration, const ModelState& st, const Posteriors& post) {
    if (config.observer) config.observer(IterationInfo{start, iteration, &st.params, &post});
  };

  for (int h = 0; h < config.shortRuns; ++h) {
    std::mt19937_64 rng(derive_seed(config.seed, {static_cast<std::uint64_t>(h)}));
    try {
      Run run;
      run.start = h;
      run.state = make_state(random_init(panel, K, structure, rng), structure);
      run.post = e_step(panel, run.state.params);
      run.trace.push_back(run.post.logLik);
      for (int s = 1; s <= config.shortIters; ++s) {
        run.state = ecm_iteration(panel, run.post, run.state, structure, options);
        run.post = e_step(panel, run.state.params);
        run.trace.push_back(run.post.logLik);
        notify(h, s, run.state, run.post);
      }
      if (!best || run.post.logLik > best->post.logLik) best = std::move(run);
    } catch (const Error& e) {
      diagnostics.push_back("start " + std::to_string(h) + ": " + e.what());
    }
  }
  if (!best) {
    std::string msg = "all " + std::to_string(config.shortRuns) + " starts failed for " + name;
    for (std::size_t j = 0; j < std::min<std::size_t>(diagnostics.size(), 5); ++j)
      msg += "\n  " + diagnostics[j];
    throw FitFailure(msg);
  }

  Run run = std::move(*best);
  int iterations = config.shortIters;
  bool converged = false;
  try {
    while (iterations < config.maxIter) {
      const double previous = run.post.logLik;
      run.state = ecm_iteration(panel, run.post, run.state, structure, options);
      run.post = e_step(panel, run.state.params);
      ++iterations;
      run.trace.push_back(run.post.logLik);
      notify(-1, iterations, run.state, run.post);
      if (std::abs(run.post.logLik - previous) < config.tol * std::abs(run.post.logLik)) {
        converged = true;
        break;
      }
    }
  } catch (const Error& e) {
    throw FitFailure(name + ", iteration " + std::to_string(iterations + 1) + ": " + e.what());
  }

  FitReport rep;
  rep.structure = structure;
  rep.K = K;
  rep.dims = d;
  const auto order = canonical_order(run.state.params);
  permute_states(run.state.params, order);
  permute_states(run.post, order);
  rep.params = std::move(run.state.params);
  rep.posteriors = std::move(run.post);
  rep.logLikTrace = std::move(run.trace);
  rep.logLik = rep.posteriors.logLik;
  rep.nParams = n_free_params(structure, K, d.P, d.R);
  rep.bic = bic(rep.logLik, rep.nParams, d.cells());
  rep.decoded = decode(rep.posteriors);
  rep.iterations = iterations;
  rep.converged = converged;
  rep.bestStart = run.start;
  rep.unitLabels = panel.unit_labels();
  rep.timeLabels = panel.time_labels();
  if (!converged)
    rep.warnings.push_back("not converged after " + std::to_string(iterations) + " iterations");
  const long scalars = d.cells() * d.P * d.R;
  if (rep.nParams > scalars)
    rep.warnings.push_back("overparameterized: " + std::to_string(rep.nParams) +
                           " free parameters for " + std::to_string(scalars) + " observed values");
  rep.wallTime =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  return rep;
}

}  // namespace mvhmm
