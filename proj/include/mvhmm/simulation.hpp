#ifndef MVHMM_SIMULATION_HPP
#define MVHMM_SIMULATION_HPP

#include "mvhmm/hmm.hpp"
#include "mvhmm/selection.hpp"

#include <cstdint>
#include <filesystem>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

namespace mvhmm {

struct Scenario {
  std::string label;
  StructurePair structure;
  HmmParams generator;
  int I = 100;
  int T = 5;
  int replicates = 50;
  double overlapShift = 0.0;  // c: M_2 = M_1 + c
};

/// Throws UsageError for a bad scenario.
void validate(const Scenario& scenario);

/// EII-II and VVE-VE generators, K in {2, 4}, T in {5, 10, 15}, two
/// overlap levels; labels look like "VVE-VE/K4/T10/overlap1".
std::vector<Scenario> builtin_scenarios(int replicates = 50);

/// Looks up a builtin by label; UsageError listing the builtins otherwise.
Scenario builtin_scenario(std::string_view label, int replicates = 50);

struct SimulatedPanel {
  MatrixPanel panel;
  IndexMatrix states;  // I x T, zero-based generator states
};

/// Draws one replicate; a pure function of (seed, scenario label, replicate).
SimulatedPanel generate(const Scenario& scenario, int replicate,
                        std::uint64_t seed = kDefaultSeed);

/// Seeds used for the generation and for the fit of one replicate.
std::uint64_t generation_seed(std::uint64_t master, const Scenario& s, int replicate);
std::uint64_t replicate_fit_seed(std::uint64_t master, const Scenario& s, int replicate);

/// perm[k] is the estimated state matched to true state k; minimizes
/// sum_k ||M_hat[perm[k]] - M_k||_F^2, exactly for K <= 8, greedily above.
std::vector<int> align_states(const HmmParams& estimated, const HmmParams& truth);

struct RecoveryReport {
  // squared error averaged over entries, states and replicates
  double mseM = 0.0, mseSigma = 0.0, msePsi = 0.0, msePi = 0.0, mseTrans = 0.0;
  std::vector<std::vector<int>> alignment;  // per replicate
  std::vector<double> seconds;              // per fit
};

/// Truth is compared in its identifiable form: Psi_k rescaled to unit
/// determinant and Sigma_k scaled to keep the Kronecker product.
RecoveryReport recovery_mse(const std::vector<FitReport>& fits, const Scenario& scenario);

/// Generates `scenario.replicates` panels and fits the generating structure
/// at the true K to each, spreading replicates over `workers` threads.
struct RecoveryRun {
  std::vector<FitReport> fits;
  RecoveryReport report;
  std::vector<std::string> failures;
};
RecoveryRun run_recovery(const Scenario& scenario, const FitConfig& config, int workers = 1);

enum class TimingMode { Sequential, Parallel };

struct TimingRow {
  std::string label;
  TimingMode mode;
  int workers = 1;
  int cells = 0;
  double seconds = 0.0;
};

/// Wall time of the full 98-structure grid at each scenario's K on its first
/// replicate, once per mode. Only the grid call is timed.
std::vector<TimingRow> timing_run(const std::vector<Scenario>& scenarios,
                                  const std::vector<TimingMode>& modes, int workers,
                                  const FitConfig& config);

void write_recovery_table(std::ostream& out, const std::vector<Scenario>& scenarios,
                          const std::vector<RecoveryReport>& reports, char delimiter = ',');
void write_timing_table(std::ostream& out, const std::vector<TimingRow>& rows,
                        char delimiter = ',');

/// Scenario files: JSON with the fields of Scenario and the generator in the
/// layout used by fit reports.
void save_scenario(const Scenario& scenario, const std::filesystem::path& path);
Scenario load_scenario(const std::filesystem::path& path);

}  // namespace mvhmm

#endif  // MVHMM_SIMULATION_HPP
