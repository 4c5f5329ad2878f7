#ifndef MVHMM_PANEL_HPP
#define MVHMM_PANEL_HPP

#include "mvhmm/types.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace mvhmm {

struct PanelDims {
  int P = 0;  // row-factor levels
  int R = 0;  // column-factor levels
  int I = 0;  // units
  int T = 0;  // times
  long cells() const { return static_cast<long>(I) * T; }
  friend bool operator==(const PanelDims&, const PanelDims&) = default;
};

/// Four-way array of P x R observations for I units over T times.
///
/// Observations are stored column-wise as vec(X_it) (column-major, length
/// P*R) in a (P*R) x (I*T) matrix; column n = i*T + t holds unit i at time t
/// (both zero-based). Immutable after construction.
class MatrixPanel {
 public:
  MatrixPanel() = default;

  /// `slices` holds I*T matrices, unit-major (slice i*T + t).
  MatrixPanel(int I, int T, const std::vector<Matrix>& slices,
              std::vector<std::string> unitLabels = {},
              std::vector<std::string> timeLabels = {},
              std::vector<std::string> rowLabels = {},
              std::vector<std::string> colLabels = {});

  /// Builds from the packed (P*R) x (I*T) layout directly.
  MatrixPanel(PanelDims dims, Matrix vecData,
              std::vector<std::string> unitLabels = {},
              std::vector<std::string> timeLabels = {},
              std::vector<std::string> rowLabels = {},
              std::vector<std::string> colLabels = {});

  const PanelDims& dims() const { return dims_; }

  /// Zero-based access to entry (p, r, i, t).
  double operator()(int p, int r, int i, int t) const {
    return data_(p + dims_.P * r, static_cast<Eigen::Index>(i) * dims_.T + t);
  }

  /// The P x R matrix of unit i at time t (zero-based). Throws BoundsError.
  Matrix slice(int i, int t) const;

  /// Packed observations, one vec(X_it) per column.
  const Matrix& vec_data() const { return data_; }

  const std::vector<std::string>& unit_labels() const { return unitLabels_; }
  const std::vector<std::string>& time_labels() const { return timeLabels_; }
  const std::vector<std::string>& row_labels() const { return rowLabels_; }
  const std::vector<std::string>& col_labels() const { return colLabels_; }

 private:
  void check_and_fill_labels();

  PanelDims dims_;
  Matrix data_;
  std::vector<std::string> unitLabels_, timeLabels_, rowLabels_, colLabels_;
};

/// One-based slice lookup, matching the (i, t) convention of the file format.
Matrix slice_unit_time(const MatrixPanel& panel, int i, int t);

/// Reads a long-format table with header unit,time,row_level,col_level,value.
/// Levels are ordered by first appearance.
MatrixPanel load_panel(const std::filesystem::path& path, char delimiter = ',');

void save_panel(const MatrixPanel& panel, const std::filesystem::path& path,
                char delimiter = ',');

/// Entrywise log(x / (1 - x)); every entry must lie strictly inside (0, 1).
MatrixPanel logit_transform(const MatrixPanel& panel);

}  // namespace mvhmm

#endif  // MVHMM_PANEL_HPP
