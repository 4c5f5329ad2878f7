#ifndef MVHMM_SELECTION_HPP
#define MVHMM_SELECTION_HPP

#include "mvhmm/criteria.hpp"
#include "mvhmm/hmm.hpp"

#include <cstdint>
#include <memory>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

namespace mvhmm {

inline std::vector<StructurePair> all_pairs() {
  const auto a = all_structure_pairs();
  return {a.begin(), a.end()};
}

struct ModelGrid {
  std::vector<StructurePair> structures = all_pairs();
  std::vector<int> Ks;  // strictly increasing, >= 1
  FitConfig perFitConfig;
};

/// Throws UsageError unless the grid is non-empty with strictly increasing Ks >= 1.
void validate(const ModelGrid& grid);

/// Seed of the fit in cell (structure, K); depends only on the master seed
/// and the cell identity.
std::uint64_t cell_seed(std::uint64_t master, StructurePair structure, int K);

struct GridCell {
  StructurePair structure;
  int K = 0;
  bool ok = false;
  double logLik = 0.0;
  long nParams = 0;
  double bic = 0.0;
  double seconds = 0.0;
  std::string diagnostic;  // failure message, empty on success
  std::shared_ptr<const FitReport> fit;
};

struct SelectionReport {
  std::vector<GridCell> table;  // structure-major, then K, in grid order
  std::size_t best = 0;         // index into table
  std::vector<std::string> failures;
  std::vector<std::string> warnings;
  long nObs = 0;

  const GridCell& winner() const { return table.at(best); }
};

/// Fits every cell of the grid on up to `workers` threads. Failed cells are
/// recorded; only a grid in which every cell fails throws FitFailure. The
/// report does not depend on `workers` apart from the timing column.
SelectionReport run_grid(const MatrixPanel& panel, const ModelGrid& grid, int workers = 1);

/// Index of the smallest BIC among successful cells, recomputed with `nObs`;
/// ties go to the earlier cell. Empty when no cell succeeded.
std::optional<std::size_t> argmin_bic(const SelectionReport& report, long nObs);

/// Delimited table: structure,K,logLik,nParams,bic,status,seconds.
void write_selection_table(std::ostream& out, const SelectionReport& report,
                           bool withSeconds = true, char delimiter = ',');

}  // namespace mvhmm

#endif  // MVHMM_SELECTION_HPP
