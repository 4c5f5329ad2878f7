#include "mvhmm/selection.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <thread>

namespace mvhmm {

long n_free_params(StructurePair structure, int K, int P, int R) {
  if (K < 1 || P < 1 || R < 1) throw UsageError("n_free_params: K, P and R must be >= 1");
  const long k = K;
  return (k - 1) + k * (k - 1) + k * P * R + count_sigma_params(structure.sigma, K, P) +
         count_psi_params(structure.psi, K, R);
}

double bic(double logLik, long nParams, long nObs) {
  if (nObs < 1) throw UsageError("bic: nObs must be >= 1");
  return -2.0 * logLik + static_cast<double>(nParams) * std::log(static_cast<double>(nObs));
}

void validate(const ModelGrid& grid) {
  if (grid.structures.empty() || grid.Ks.empty()) throw UsageError("model grid is empty");
  if (grid.Ks.front() < 1) throw UsageError("model grid: K must be >= 1");
  for (std::size_t j = 1; j < grid.Ks.size(); ++j)
    if (grid.Ks[j] <= grid.Ks[j - 1])
      throw UsageError("model grid: Ks must be strictly increasing");
}

std::uint64_t cell_seed(std::uint64_t master, StructurePair structure, int K) {
  return derive_seed(master, {static_cast<std::uint64_t>(structure.sigma),
                              static_cast<std::uint64_t>(structure.psi),
                              static_cast<std::uint64_t>(K)});
}

std::optional<std::size_t> argmin_bic(const SelectionReport& report, long nObs) {
  std::optional<std::size_t> best;
  double bestValue = 0.0;
  for (std::size_t j = 0; j < report.table.size(); ++j) {
    const auto& c = report.table[j];
    if (!c.ok) continue;
    const double v = bic(c.logLik, c.nParams, nObs);
    if (!best || v < bestValue) {
      best = j;
      bestValue = v;
    }
  }
  return best;
}

SelectionReport run_grid(const MatrixPanel& panel, const ModelGrid& grid, int workers) {
  validate(grid);
  if (workers < 1) throw UsageError("run_grid: workers must be >= 1");

  SelectionReport report;
  for (const auto& s : grid.structures)
    for (int K : grid.Ks) {
      GridCell c;
      c.structure = s;
      c.K = K;
      report.table.push_back(std::move(c));
    }
  report.nObs = panel.dims().cells();

  auto run_cell = [&](GridCell& cell) {
    const auto t0 = std::chrono::steady_clock::now();
    FitConfig config = grid.perFitConfig;
    config.seed = cell_seed(grid.perFitConfig.seed, cell.structure, cell.K);
    try {
      auto rep = std::make_shared<FitReport>(fit(panel, cell.structure, cell.K, config));
      cell.ok = true;
      cell.logLik = rep->logLik;
      cell.nParams = rep->nParams;
      cell.bic = rep->bic;
      cell.fit = std::move(rep);
    } catch (const Error& e) {
      cell.ok = false;
      cell.nParams = n_free_params(cell.structure, cell.K, panel.dims().P, panel.dims().R);
      cell.diagnostic = e.what();
    }
    cell.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  };

  const std::size_t n = report.table.size();
  const std::size_t nThreads = std::min<std::size_t>(static_cast<std::size_t>(workers), n);
  if (nThreads <= 1) {
    for (auto& c : report.table) run_cell(c);
  } else {
    // Cells write only to their own slot, so the merge needs no locking.
    std::atomic<std::size_t> next{0};
    std::vector<std::jthread> pool;
    pool.reserve(nThreads);
    for (std::size_t w = 0; w < nThreads; ++w)
      pool.emplace_back([&] {
        for (std::size_t j = next++; j < n; j = next++) run_cell(report.table[j]);
      });
  }

  for (const auto& c : report.table)
    if (!c.ok)
      report.failures.push_back(to_string(c.structure) + " K=" + std::to_string(c.K) + ": " +
                                c.diagnostic);

  const auto best = argmin_bic(report, report.nObs);
  if (!best) throw FitFailure("every cell of the model grid failed");
  report.best = *best;

  const auto alt = argmin_bic(report, panel.dims().I);
  if (alt && *alt != *best) {
    const auto& a = report.table[*alt];
    report.warnings.push_back("winner changes to " + to_string(a.structure) + " K=" +
                              std::to_string(a.K) + " when the BIC sample size is the unit count");
  }
  return report;
}

void write_selection_table(std::ostream& out, const SelectionReport& report, bool withSeconds,
                           char d) {
  out << "structure" << d << "K" << d << "logLik" << d << "nParams" << d << "bic" << d
      << "status";
  if (withSeconds) out << d << "seconds";
  out << '\n';
  for (const auto& c : report.table) {
    out << to_string(c.structure) << d << c.K << d << (c.ok ? format_real(c.logLik) : "NA") << d
        << c.nParams << d << (c.ok ? format_real(c.bic) : "NA") << d
        << (c.ok ? "ok" : "failed");
    if (withSeconds) out << d << format_real(c.seconds);
    out << '\n';
  }
}

}  // namespace mvhmm
