#include "mvhmm/simulation.hpp"

#include "json_util.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <optional>
#include <sstream>
#include <thread>

namespace mvhmm {

namespace {

Matrix mat2(double a, double b, double c, double d) {
  Matrix m(2, 2);
  m << a, b, c, d;
  return m;
}

HmmParams generator(const std::string& family, int K, double c) {
  const Matrix M1 = mat2(1.0, 1.5, 0.5, 1.0);
  const double shifts[4] = {0.0, c, 4.0, -2.0};
  std::vector<Matrix> sig, psi;
  if (family == "EII-II") {
    sig.assign(4, 1.5 * Matrix::Identity(2, 2));
    psi.assign(4, Matrix::Identity(2, 2));
  } else {
    sig = {mat2(0.85, 0.29, 0.29, 0.85), mat2(0.50, 0.30, 0.30, 0.50),
           mat2(1.45, 1.05, 1.05, 1.45), mat2(1.33, 0.29, 0.29, 1.33)};
    psi = {mat2(1.06, 0.36, 0.36, 1.06), mat2(1.25, 0.75, 0.75, 1.25),
           mat2(1.45, 1.00, 1.00, 1.45), mat2(1.03, 0.23, 0.23, 1.03)};
  }
  HmmParams p;
  p.K = K;
  if (K == 2) {
    p.pi = Vector::Constant(2, 0.5);
    p.trans = mat2(0.60, 0.40, 0.20, 0.80);
  } else {
    p.pi = Vector::Constant(4, 0.25);
    p.trans.resize(4, 4);
    p.trans << 0.55, 0.00, 0.21, 0.24,
               0.03, 0.52, 0.18, 0.27,
               0.06, 0.15, 0.49, 0.30,
               0.09, 0.12, 0.33, 0.46;
  }
  for (int k = 0; k < K; ++k)
    p.states.push_back(MatNormParams{(M1.array() + shifts[k]).matrix(), sig[k], psi[k]});
  return p;
}

int draw(const Vector& probs, std::mt19937_64& rng) {
  const double u = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
  double acc = 0.0;
  for (Eigen::Index k = 0; k < probs.size(); ++k) {
    acc += probs(k);
    if (u < acc) return static_cast<int>(k);
  }
  // rounding left u above the last partial sum: take the last positive entry
  for (Eigen::Index k = probs.size() - 1; k > 0; --k)
    if (probs(k) > 0.0) return static_cast<int>(k);
  return 0;
}

double mean_sq(const Matrix& a, const Matrix& b) { return (a - b).squaredNorm() / a.size(); }

std::vector<int> greedy_alignment(const Matrix& cost) {
  const int K = static_cast<int>(cost.rows());
  std::vector<int> perm(K, -1);
  std::vector<bool> usedTrue(K, false), usedEst(K, false);
  for (int step = 0; step < K; ++step) {
    double best = std::numeric_limits<double>::infinity();
    int bt = 0, be = 0;
    for (int t = 0; t < K; ++t)
      for (int e = 0; e < K; ++e)
        if (!usedTrue[t] && !usedEst[e] && cost(t, e) < best) {
          best = cost(t, e);
          bt = t;
          be = e;
        }
    perm[bt] = be;
    usedTrue[bt] = usedEst[be] = true;
  }
  return perm;
}

using detail::json;

}  // namespace

void validate(const Scenario& s) {
  if (s.replicates < 1) throw UsageError("scenario '" + s.label + "': replicates must be >= 1");
  if (s.I < 1 || s.T < 1) throw UsageError("scenario '" + s.label + "': I and T must be >= 1");
  try {
    validate(s.generator, 1e-12);
  } catch (const Error& e) {
    throw UsageError("scenario '" + s.label + "': " + e.what());
  }
}

std::vector<Scenario> builtin_scenarios(int replicates) {
  std::vector<Scenario> out;
  for (const std::string family : {"EII-II", "VVE-VE"})
    for (int K : {2, 4})
      for (int T : {5, 10, 15})
        for (int level : {1, 2}) {
          Scenario s;
          const double c = level == 1 ? 2.0 : 5.0;
          s.label = family + "/K" + std::to_string(K) + "/T" + std::to_string(T) + "/overlap" +
                    std::to_string(level);
          s.structure = parse_structure_pair(family);
          s.generator = generator(family, K, c);
          s.I = 100;
          s.T = T;
          s.replicates = replicates;
          s.overlapShift = c;
          out.push_back(std::move(s));
        }
  return out;
}

Scenario builtin_scenario(std::string_view label, int replicates) {
  auto all = builtin_scenarios(replicates);
  for (auto& s : all)
    if (s.label == label) return s;
  std::string msg = "unknown scenario '" + std::string(label) + "'; builtins are:";
  for (const auto& s : all) msg += "\n  " + s.label;
  throw UsageError(msg);
}

std::uint64_t generation_seed(std::uint64_t master, const Scenario& s, int replicate) {
  return derive_seed(master, {stable_hash(s.label), static_cast<std::uint64_t>(replicate), 0});
}

std::uint64_t replicate_fit_seed(std::uint64_t master, const Scenario& s, int replicate) {
  return derive_seed(master, {stable_hash(s.label), static_cast<std::uint64_t>(replicate), 1});
}

SimulatedPanel generate(const Scenario& s, int replicate, std::uint64_t seed) {
  validate(s);
  if (replicate < 0) throw UsageError("generate: replicate must be >= 0");
  std::mt19937_64 rng(generation_seed(seed, s, replicate));
  const HmmParams& g = s.generator;
  const int P = static_cast<int>(g.states.front().mean.rows());
  const int R = static_cast<int>(g.states.front().mean.cols());
  Matrix data(P * R, static_cast<Eigen::Index>(s.I) * s.T);
  IndexMatrix states(s.I, s.T);
  for (int i = 0; i < s.I; ++i)
    for (int t = 0; t < s.T; ++t) {
      const int k = t == 0 ? draw(g.pi, rng) : draw(g.trans.row(states(i, t - 1)).transpose(), rng);
      states(i, t) = k;
      data.col(static_cast<Eigen::Index>(i) * s.T + t) = sample(g.states[k], rng).reshaped();
    }
  return SimulatedPanel{MatrixPanel(PanelDims{P, R, s.I, s.T}, std::move(data)), std::move(states)};
}

std::vector<int> align_states(const HmmParams& est, const HmmParams& truth) {
  if (est.K != truth.K) throw UsageError("align_states: state counts differ");
  const int K = truth.K;
  Matrix cost(K, K);
  for (int t = 0; t < K; ++t)
    for (int e = 0; e < K; ++e)
      cost(t, e) = (est.states[e].mean - truth.states[t].mean).squaredNorm();
  if (K > 8) return greedy_alignment(cost);
  std::vector<int> perm(K), best;
  std::iota(perm.begin(), perm.end(), 0);
  double bestCost = std::numeric_limits<double>::infinity();
  do {
    double c = 0.0;
    for (int t = 0; t < K; ++t) c += cost(t, perm[t]);
    if (c < bestCost) {
      bestCost = c;
      best = perm;
    }
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best;
}

RecoveryReport recovery_mse(const std::vector<FitReport>& fits, const Scenario& s) {
  const HmmParams& g = s.generator;
  const int K = g.K;
  RecoveryReport rep;
  if (fits.empty()) throw UsageError("recovery_mse: no fits");

  std::vector<Matrix> sigTrue, psiTrue;
  for (const auto& st : g.states) {
    const double R = static_cast<double>(st.psi.rows());
    const double a = std::pow(st.psi.determinant(), 1.0 / R);
    psiTrue.push_back(st.psi / a);
    sigTrue.push_back(st.sigma * a);
  }

  for (const auto& f : fits) {
    if (f.K != K)
      throw UsageError("recovery_mse: fit has K=" + std::to_string(f.K) + ", scenario has K=" +
                       std::to_string(K));
    const auto perm = align_states(f.params, g);
    double m = 0.0, sg = 0.0, ps = 0.0, pi = 0.0, tr = 0.0;
    for (int k = 0; k < K; ++k) {
      const auto& e = f.params.states[perm[k]];
      m += mean_sq(e.mean, g.states[k].mean);
      sg += mean_sq(e.sigma, sigTrue[k]);
      ps += mean_sq(e.psi, psiTrue[k]);
      const double d = f.params.pi(perm[k]) - g.pi(k);
      pi += d * d;
      for (int j = 0; j < K; ++j) {
        const double dt = f.params.trans(perm[k], perm[j]) - g.trans(k, j);
        tr += dt * dt;
      }
    }
    rep.mseM += m / K;
    rep.mseSigma += sg / K;
    rep.msePsi += ps / K;
    rep.msePi += pi / K;
    rep.mseTrans += tr / (K * K);
    rep.alignment.push_back(perm);
    rep.seconds.push_back(f.wallTime);
  }
  const double n = static_cast<double>(fits.size());
  rep.mseM /= n;
  rep.mseSigma /= n;
  rep.msePsi /= n;
  rep.msePi /= n;
  rep.mseTrans /= n;
  return rep;
}

RecoveryRun run_recovery(const Scenario& s, const FitConfig& config, int workers) {
  validate(s);
  if (workers < 1) throw UsageError("run_recovery: workers must be >= 1");
  const int n = s.replicates;
  std::vector<std::optional<FitReport>> slots(static_cast<std::size_t>(n));
  std::vector<std::string> errors(static_cast<std::size_t>(n));

  auto work = [&](int r) {
    FitConfig c = config;
    c.seed = replicate_fit_seed(config.seed, s, r);
    try {
      const auto sim = generate(s, r, config.seed);
      slots[r] = fit(sim.panel, s.structure, s.generator.K, c);
    } catch (const Error& e) {
      errors[r] = "replicate " + std::to_string(r + 1) + ": " + e.what();
    }
  };
  const int nThreads = std::min(workers, n);
  if (nThreads <= 1) {
    for (int r = 0; r < n; ++r) work(r);
  } else {
    std::atomic<int> next{0};
    std::vector<std::jthread> pool;
    for (int w = 0; w < nThreads; ++w)
      pool.emplace_back([&] {
        for (int r = next++; r < n; r = next++) work(r);
      });
  }

  RecoveryRun run;
  for (int r = 0; r < n; ++r) {
    if (slots[r]) run.fits.push_back(std::move(*slots[r]));
    else run.failures.push_back(errors[r]);
  }
  if (run.fits.empty()) throw FitFailure("every replicate of '" + s.label + "' failed");
  run.report = recovery_mse(run.fits, s);
  return run;
}

std::vector<TimingRow> timing_run(const std::vector<Scenario>& scenarios,
                                  const std::vector<TimingMode>& modes, int workers,
                                  const FitConfig& config) {
  std::vector<TimingRow> rows;
  for (const auto& s : scenarios) {
    const auto sim = generate(s, 0, config.seed);
    ModelGrid grid;
    grid.Ks = {s.generator.K};
    grid.perFitConfig = config;
    for (TimingMode mode : modes) {
      const int w = mode == TimingMode::Sequential ? 1 : workers;
      const auto t0 = std::chrono::steady_clock::now();
      SelectionReport sel;
      try {
        sel = run_grid(sim.panel, grid, w);
      } catch (const FitFailure&) {
        // an all-failed grid still took this long
      }
      const double secs =
          std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      rows.push_back(TimingRow{s.label, mode, w, static_cast<int>(grid.structures.size()), secs});
    }
  }
  return rows;
}

void write_recovery_table(std::ostream& out, const std::vector<Scenario>& scenarios,
                          const std::vector<RecoveryReport>& reports, char d) {
  out << "# mse: entrywise squared error averaged over entries, states and replicates\n";
  out << "scenario" << d << "K" << d << "T" << d << "replicates" << d << "M" << d << "Sigma" << d
      << "Psi" << d << "pi" << d << "Pi\n";
  for (std::size_t j = 0; j < reports.size(); ++j) {
    const auto& s = scenarios.at(j);
    const auto& r = reports[j];
    out << s.label << d << s.generator.K << d << s.T << d << r.alignment.size() << d
        << format_real(r.mseM) << d << format_real(r.mseSigma) << d << format_real(r.msePsi) << d
        << format_real(r.msePi) << d << format_real(r.mseTrans) << '\n';
  }
}

void write_timing_table(std::ostream& out, const std::vector<TimingRow>& rows, char d) {
  out << "scenario" << d << "mode" << d << "workers" << d << "cells" << d << "seconds\n";
  for (const auto& r : rows)
    out << r.label << d << (r.mode == TimingMode::Sequential ? "sequential" : "parallel") << d
        << r.workers << d << r.cells << d << format_real(r.seconds) << '\n';
}

void save_scenario(const Scenario& s, const std::filesystem::path& path) {
  using detail::to_json;
  json states = json::array();
  for (const auto& st : s.generator.states)
    states.push_back(
        {{"mean", to_json(st.mean)}, {"sigma", to_json(st.sigma)}, {"psi", to_json(st.psi)}});
  json doc = {{"label", s.label},
              {"structure", to_string(s.structure)},
              {"I", s.I},
              {"T", s.T},
              {"replicates", s.replicates},
              {"overlapShift", s.overlapShift},
              {"K", s.generator.K},
              {"pi", to_json(s.generator.pi)},
              {"trans", to_json(s.generator.trans)},
              {"states", std::move(states)}};
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open " + path.string() + " for writing");
  out << doc.dump(1) << '\n';
  if (!out.flush()) throw Error("failed writing " + path.string());
}

Scenario load_scenario(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open scenario " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  try {
    const json doc = json::parse(ss.str());
    Scenario s;
    s.label = doc.at("label").get<std::string>();
    try {
      s.structure = parse_structure_pair(doc.at("structure").get<std::string>());
    } catch (const UsageError& e) {
      throw ParseError(std::string("scenario: ") + e.what());
    }
    s.I = doc.at("I").get<int>();
    s.T = doc.at("T").get<int>();
    s.replicates = doc.value("replicates", 50);
    s.overlapShift = doc.value("overlapShift", 0.0);
    const int K = doc.at("K").get<int>();
    if (K < 1) throw ParseError("scenario: K must be >= 1");
    const json& states = doc.at("states");
    if (!states.is_array() || static_cast<int>(states.size()) != K)
      throw ParseError("scenario: expected " + std::to_string(K) + " states");
    const json& first = states.at(0).at("mean");
    const auto P = static_cast<Eigen::Index>(first.size());
    const auto R = static_cast<Eigen::Index>(first.at(0).size());
    s.generator.K = K;
    s.generator.pi = detail::vector_from(doc.at("pi"), K, "pi");
    s.generator.trans = detail::matrix_from(doc.at("trans"), K, K, "trans");
    for (const auto& st : states)
      s.generator.states.push_back(
          MatNormParams{detail::matrix_from(st.at("mean"), P, R, "mean"),
                        detail::matrix_from(st.at("sigma"), P, P, "sigma"),
                        detail::matrix_from(st.at("psi"), R, R, "psi")});
    validate(s);
    return s;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError("malformed scenario file " + path.string() + ": " + e.what());
  }
}

}  // namespace mvhmm
