// Acceptance suite: prints one PASS/FAIL line per criterion and exits
// non-zero when any criterion fails.

#include "oracles.hpp"
#include "param_tables.hpp"

#include "mvhmm/covariance.hpp"
#include "mvhmm/criteria.hpp"
#include "mvhmm/matnorm.hpp"
#include "mvhmm/report_io.hpp"
#include "mvhmm/selection.hpp"
#include "mvhmm/simulation.hpp"

#include <chrono>
#include <cstdio>
#include <functional>
#include <sstream>
#include <thread>

using namespace mvhmm;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

int workers() { return static_cast<int>(std::max(1u, std::thread::hardware_concurrency())); }

// Worst posterior normalization errors seen across every fit of criteria 3-6.
struct PosteriorAudit {
  double rowSum = 0.0;
  double marginal = 0.0;
  long fits = 0;

  void add(const Posteriors& post) {
    ++fits;
    for (int i = 0; i < post.I; ++i)
      for (int t = 0; t < post.T; ++t) {
        const Eigen::Index n = static_cast<Eigen::Index>(i) * post.T + t;
        rowSum = std::max(rowSum, std::abs(post.z.row(n).sum() - 1.0));
        if (t == 0) continue;
        for (int k = 0; k < post.K; ++k) {
          double m = 0.0;
          for (int j = 0; j < post.K; ++j) m += post.pair(i, t, j, k);
          marginal = std::max(marginal, std::abs(m - post.z(n, k)));
        }
      }
  }
};

int failures = 0;

void report(int id, const char* name, bool pass, const std::string& detail, double secs) {
  std::printf("%s criterion %d (%s): %s [%.2f s]\n", pass ? "PASS" : "FAIL", id, name, detail.c_str(), secs);
  std::fflush(stdout);
  if (!pass) ++failures;
}

std::string fmt(const char* f, double a) {
  char buf[128];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

void likelihood_oracle() {
  const auto start = Clock::now();
  std::mt19937_64 rng(101);
  std::uniform_int_distribution<int> pr(1, 3), kk(1, 3), tt(2, 4), ii(1, 5);
  double worst = 0.0;
  for (int rep = 0; rep < 20; ++rep) {
    const int P = pr(rng), R = pr(rng), K = kk(rng), T = tt(rng), I = ii(rng);
    const auto hp = oracle::random_hmm(K, P, R, rng, 1.0);
    const auto panel = oracle::sample_panel(hp, I, T, rng);
    worst = std::max(worst, std::abs(e_step(panel, hp).logLik - oracle::brute_force_loglik(panel, hp)));
  }
  const double secs = seconds_since(start);
  report(1, "likelihood oracle", worst <= 1e-10 && secs < 10.0,
         fmt("max |e_step - enumeration| = %.3g over 20 panels (tol 1e-10)", worst), secs);
}

void density_oracle() {
  const auto start = Clock::now();
  std::mt19937_64 rng(202);
  std::uniform_int_distribution<int> dim(1, 4);
  double worst = 0.0;
  for (int rep = 0; rep < 100; ++rep) {
    const int P = dim(rng), R = dim(rng);
    const MatNormParams mp{oracle::gaussian(P, R, rng), oracle::random_spd(P, rng), oracle::random_spd(R, rng)};
    const Matrix X = sample(mp, rng);
    const double ref = oracle::kron_logpdf(X, mp);
    worst = std::max(worst, std::abs(log_density(X, mp) - ref));
    const Vector packed = MatNormEvaluator(mp).log_density_packed(oracle::vec(X));
    worst = std::max(worst, std::abs(packed(0) - ref));
  }
  const double secs = seconds_since(start);
  report(2, "density oracle", worst <= 1e-12 && secs < 1.0,
         fmt("max |matrix-normal - vectorized normal| = %.3g over 100 instances (tol 1e-12)", worst), secs);
}

void monotonicity_sweep(PosteriorAudit& audit) {
  const auto start = Clock::now();
  Scenario s = builtin_scenario("VVE-VE/K2/T5/overlap1", 1);
  s.I = 50;
  const MatrixPanel panel = generate(s, 0).panel;
  double worstDrop = 0.0, worstDet = 0.0;
  int failed = 0;
  std::ostringstream notes;
  for (const auto& structure : all_structure_pairs()) {
    FitConfig c;
    c.seed = cell_seed(kDefaultSeed, structure, 2);
    c.observer = [&](const IterationInfo& info) {
      for (const auto& st : info.params->states)
        worstDet = std::max(worstDet, std::abs(st.psi.determinant() - 1.0));
    };
    try {
      const FitReport rep = fit(panel, structure, 2, c);
      for (std::size_t j = 1; j < rep.logLikTrace.size(); ++j)
        worstDrop = std::max(worstDrop, rep.logLikTrace[j - 1] - rep.logLikTrace[j]);
      audit.add(rep.posteriors);
    } catch (const std::exception& e) {
      ++failed;
      notes << " " << to_string(structure) << ": " << e.what() << ";";
    }
  }
  const double secs = seconds_since(start);
  std::ostringstream d;
  d << "largest log-likelihood decrease " << worstDrop << " (tol 1e-8), max ||Psi|-1| " << worstDet
    << " (tol 1e-10), " << 98 - failed << "/98 fits" << notes.str();
  report(3, "monotonicity sweep", worstDrop <= 1e-8 && worstDet <= 1e-10 && failed == 0 && secs < 300.0,
         d.str(), secs);
}

void recovery(int id, const char* name, const char* label, PosteriorAudit& audit,
              const std::function<bool(const RecoveryReport&, std::string&)>& judge, double limit) {
  const auto start = Clock::now();
  const Scenario s = builtin_scenario(label, 10);
  const RecoveryRun run = run_recovery(s, FitConfig{}, workers());
  for (const auto& f : run.fits) audit.add(f.posteriors);
  std::string detail;
  bool pass = judge(run.report, detail) && run.failures.empty();
  const double secs = seconds_since(start);
  if (!run.failures.empty()) detail += "; " + std::to_string(run.failures.size()) + " failed fits";
  report(id, name, pass && secs < limit, std::string(label) + ", 10 replicates: " + detail, secs);
}

void structure_recovery(PosteriorAudit& audit) {
  const auto start = Clock::now();
  const Scenario s = builtin_scenario("EII-II/K2/T10/overlap2", 10);
  ModelGrid grid;
  grid.Ks = {1, 2, 3};
  int wins = 0;
  std::ostringstream winners;
  for (int rep = 0; rep < s.replicates; ++rep) {
    const SimulatedPanel sim = generate(s, rep);
    grid.perFitConfig.seed = replicate_fit_seed(kDefaultSeed, s, rep);
    const SelectionReport sel = run_grid(sim.panel, grid, workers());
    for (const auto& cell : sel.table)
      if (cell.ok) audit.add(cell.fit->posteriors);
    const GridCell& w = sel.winner();
    wins += w.structure == s.structure && w.K == 2;
    winners << (rep ? ", " : "") << to_string(w.structure) << "/K" << w.K;
  }
  const double secs = seconds_since(start);
  report(6, "structure recovery", wins >= 7 && secs < 3600.0,
         std::to_string(wins) + "/10 replicates select EII-II with K=2 (need 7); winners: " + winners.str(), secs);
}

void parameter_counts() {
  const auto start = Clock::now();
  std::mt19937_64 rng(707);
  int mismatches = 0, checked = 0;
  for (int K = 1; K <= 5; ++K)
    for (int Q = 1; Q <= 5; ++Q) {
      for (auto s : kAllSigmaStructures) {
        ++checked;
        mismatches += count_sigma_params(s, K, Q) != table_sigma_count(s, K, Q);
      }
      for (auto s : kAllPsiStructures) {
        const auto n = to_string(s);
        ++checked;
        mismatches += count_psi_params(s, K, Q) != oracle::jacobian_rank_count('1', n[0], n[1], K, Q, rng);
      }
    }
  const double secs = seconds_since(start);
  report(7, "parameter-count table", mismatches == 0 && secs < 1.0,
         std::to_string(checked - mismatches) + "/" + std::to_string(checked) + " counts agree", secs);
}

void mm_correctness() {
  const auto start = Clock::now();
  std::mt19937_64 rng(808);
  std::uniform_int_distribution<int> qd(2, 4), kd(1, 4);
  double worstGap = 0.0, worstRise = 0.0;
  for (int rep = 0; rep < 50; ++rep) {
    const int Q = qd(rng), K = kd(rng);
    const Matrix V = oracle::random_orthogonal(Q, rng);
    std::vector<Matrix> Y;
    std::vector<Vector> D;
    for (int k = 0; k < K; ++k) {
      // common eigenvectors with both spectra in descending order: V is a
      // minimizer, so f(V) is the analytic optimum
      const Vector y = oracle::separated_spectrum(Q, rng);
      const Vector d = oracle::separated_spectrum(Q, rng);
      Y.push_back(V * y.asDiagonal() * V.transpose());
      D.push_back(d / std::pow(d.prod(), 1.0 / Q));
    }
    const double best = orientation_objective(Y, D, V);
    const MmState st = mm_orientation(Y, D, oracle::random_orthogonal(Q, rng), 20000, 1e-15);
    worstGap = std::max(worstGap, st.objective - best);
    for (std::size_t j = 1; j < st.trace.size(); ++j)
      worstRise = std::max(worstRise, (st.trace[j] - st.trace[j - 1]) / std::max(1.0, std::abs(st.trace[j - 1])));
  }
  const double secs = seconds_since(start);
  std::ostringstream d;
  // a step may move the objective by rounding error only
  d << "max (objective - optimum) " << worstGap << " (tol 1e-9), largest relative objective increase "
    << worstRise << " (rounding allowance 1e-12)";
  report(8, "MM orientation", worstGap <= 1e-9 && worstRise <= 1e-12 && secs < 5.0, d.str(), secs);
}

std::string table_text(const SelectionReport& r) {
  std::ostringstream out;
  write_selection_table(out, r, false);
  return out.str();
}

void determinism_and_speedup() {
  const auto start = Clock::now();
  const Scenario s = builtin_scenario("VVE-VE/K2/T5/overlap1", 1);
  const MatrixPanel panel = generate(s, 0).panel;
  ModelGrid grid;
  grid.Ks = {2};
  grid.perFitConfig.seed = kDefaultSeed;

  auto t0 = Clock::now();
  const SelectionReport seq = run_grid(panel, grid, 1);
  const double seqSecs = seconds_since(t0);
  t0 = Clock::now();
  const SelectionReport par = run_grid(panel, grid, 8);
  const double parSecs = seconds_since(t0);

  bool identical = table_text(seq) == table_text(par) && seq.best == par.best;
  for (std::size_t j = 0; identical && j < seq.table.size(); ++j) {
    if (seq.table[j].ok != par.table[j].ok) identical = false;
    if (!identical || !seq.table[j].ok) continue;
    FitReport a = *seq.table[j].fit, b = *par.table[j].fit;
    a.wallTime = b.wallTime = 0.0;
    identical = serialize_report(a) == serialize_report(b);
  }
  const double secs = seconds_since(start);
  std::ostringstream d;
  d << seq.table.size() << " cells, reports " << (identical ? "bit-identical" : "DIFFER")
    << "; sequential " << seqSecs << " s vs 8 workers " << parSecs << " s on "
    << std::thread::hardware_concurrency() << " hardware thread(s)";
  report(9, "determinism and parallel speedup", identical && parSecs < seqSecs && secs < 600.0, d.str(), secs);
}

}  // namespace

int main() {
  std::printf("acceptance suite, %d worker thread(s)\n", workers());
  PosteriorAudit audit;
  likelihood_oracle();
  density_oracle();
  monotonicity_sweep(audit);
  recovery(4, "recovery, spherical generator", "EII-II/K2/T5/overlap2", audit,
           [](const RecoveryReport& r, std::string& d) {
             std::ostringstream o;
             o << "MSE(M) " << r.mseM << " (max 0.02), MSE(Pi) " << r.mseTrans << " (max 0.005)";
             d = o.str();
             return r.mseM <= 0.02 && r.mseTrans <= 0.005;
           },
           300.0);
  recovery(5, "recovery, VVE-VE generator", "VVE-VE/K2/T10/overlap2", audit,
           [](const RecoveryReport& r, std::string& d) {
             std::ostringstream o;
             o << "MSE(Sigma) " << r.mseSigma << " (max 0.01), MSE(Psi) " << r.msePsi << " (max 0.01)";
             d = o.str();
             return r.mseSigma <= 0.01 && r.msePsi <= 0.01;
           },
           600.0);
  structure_recovery(audit);
  parameter_counts();
  mm_correctness();
  determinism_and_speedup();
  {
    std::ostringstream d;
    d << audit.fits << " fits from criteria 3-6, max |sum_k z - 1| " << audit.rowSum
      << " (tol 1e-10), max |sum_j zz - z| " << audit.marginal << " (tol 1e-8)";
    report(10, "posterior normalization", audit.fits > 0 && audit.rowSum <= 1e-10 && audit.marginal <= 1e-8,
           d.str(), 0.0);
  }
  std::printf("%d criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
