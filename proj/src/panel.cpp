#include "mvhmm/panel.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <unordered_map>

namespace mvhmm {

namespace {

std::vector<std::string> default_labels(int n) {
  std::vector<std::string> out;
  out.reserve(n);
  for (int j = 1; j <= n; ++j) out.push_back(std::to_string(j));
  return out;
}

std::vector<std::string> split(const std::string& line, char delimiter) {
  std::vector<std::string> fields;
  std::string field;
  std::istringstream ss(line);
  while (std::getline(ss, field, delimiter)) fields.push_back(field);
  if (!line.empty() && line.back() == delimiter) fields.emplace_back();
  return fields;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

// Keeps first-appearance order of distinct labels.
class LevelIndex {
 public:
  int intern(const std::string& label) {
    auto [it, inserted] = index_.emplace(label, static_cast<int>(labels_.size()));
    if (inserted) labels_.push_back(label);
    return it->second;
  }
  int size() const { return static_cast<int>(labels_.size()); }
  const std::vector<std::string>& labels() const { return labels_; }

 private:
  std::unordered_map<std::string, int> index_;
  std::vector<std::string> labels_;
};

}  // namespace

MatrixPanel::MatrixPanel(int I, int T, const std::vector<Matrix>& slices,
                         std::vector<std::string> unitLabels,
                         std::vector<std::string> timeLabels,
                         std::vector<std::string> rowLabels,
                         std::vector<std::string> colLabels)
    : unitLabels_(std::move(unitLabels)),
      timeLabels_(std::move(timeLabels)),
      rowLabels_(std::move(rowLabels)),
      colLabels_(std::move(colLabels)) {
  if (I < 1 || T < 1) throw PanelError("panel needs I >= 1 and T >= 1");
  if (slices.size() != static_cast<std::size_t>(I) * T)
    throw PanelError("panel expects I*T slices, got " + std::to_string(slices.size()));
  const int P = static_cast<int>(slices.front().rows());
  const int R = static_cast<int>(slices.front().cols());
  dims_ = PanelDims{P, R, I, T};
  data_.resize(static_cast<Eigen::Index>(P) * R, static_cast<Eigen::Index>(I) * T);
  for (std::size_t n = 0; n < slices.size(); ++n) {
    if (slices[n].rows() != P || slices[n].cols() != R)
      throw PanelError("slice " + std::to_string(n) + " has inconsistent shape");
    data_.col(static_cast<Eigen::Index>(n)) = slices[n].reshaped();
  }
  check_and_fill_labels();
}

MatrixPanel::MatrixPanel(PanelDims dims, Matrix vecData,
                         std::vector<std::string> unitLabels,
                         std::vector<std::string> timeLabels,
                         std::vector<std::string> rowLabels,
                         std::vector<std::string> colLabels)
    : dims_(dims),
      data_(std::move(vecData)),
      unitLabels_(std::move(unitLabels)),
      timeLabels_(std::move(timeLabels)),
      rowLabels_(std::move(rowLabels)),
      colLabels_(std::move(colLabels)) {
  if (data_.rows() != static_cast<Eigen::Index>(dims_.P) * dims_.R ||
      data_.cols() != dims_.cells())
    throw PanelError("packed data extent does not match panel dims");
  check_and_fill_labels();
}

void MatrixPanel::check_and_fill_labels() {
  if (dims_.P < 1 || dims_.R < 1 || dims_.I < 1 || dims_.T < 1)
    throw PanelError("all panel dimensions must be >= 1");
  if (!data_.allFinite()) throw PanelError("panel contains non-finite values");
  auto fill = [](std::vector<std::string>& labels, int n, const char* what) {
    if (labels.empty()) {
      labels = default_labels(n);
    } else if (static_cast<int>(labels.size()) != n) {
      throw PanelError(std::string("wrong number of ") + what + " labels");
    }
  };
  fill(unitLabels_, dims_.I, "unit");
  fill(timeLabels_, dims_.T, "time");
  fill(rowLabels_, dims_.P, "row");
  fill(colLabels_, dims_.R, "column");
}

Matrix MatrixPanel::slice(int i, int t) const {
  if (i < 0 || i >= dims_.I || t < 0 || t >= dims_.T)
    throw BoundsError("slice (" + std::to_string(i) + "," + std::to_string(t) +
                      ") outside I=" + std::to_string(dims_.I) +
                      ", T=" + std::to_string(dims_.T));
  return data_.col(static_cast<Eigen::Index>(i) * dims_.T + t).reshaped(dims_.P, dims_.R);
}

Matrix slice_unit_time(const MatrixPanel& panel, int i, int t) {
  const auto& d = panel.dims();
  if (i < 1 || i > d.I || t < 1 || t > d.T)
    throw BoundsError("unit " + std::to_string(i) + ", time " + std::to_string(t) +
                      " outside 1..I=" + std::to_string(d.I) + ", 1..T=" + std::to_string(d.T));
  return panel.slice(i - 1, t - 1);
}

MatrixPanel load_panel(const std::filesystem::path& path, char delimiter) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open panel file " + path.string());

  std::string line;
  if (!std::getline(in, line)) throw ParseError("panel file is empty: " + path.string());
  const auto header = split(line, delimiter);
  const std::array<std::string, 5> names{"unit", "time", "row_level", "col_level", "value"};
  std::array<int, 5> col{-1, -1, -1, -1, -1};
  for (std::size_t c = 0; c < header.size(); ++c)
    for (std::size_t j = 0; j < names.size(); ++j)
      if (trim(header[c]) == names[j]) col[j] = static_cast<int>(c);
  for (std::size_t j = 0; j < names.size(); ++j)
    if (col[j] < 0) throw ParseError("panel header lacks column '" + names[j] + "'");

  struct Cell {
    int unit, time, row, column;
    double value;
  };
  LevelIndex units, times, rows, cols;
  std::vector<Cell> cells;
  long lineNo = 1;
  while (std::getline(in, line)) {
    ++lineNo;
    if (trim(line).empty()) continue;
    const auto f = split(line, delimiter);
    const int needed = *std::max_element(col.begin(), col.end());
    if (static_cast<int>(f.size()) <= needed)
      throw ParseError("row " + std::to_string(lineNo) + ": expected at least " +
                       std::to_string(needed + 1) + " fields");
    const std::string v = trim(f[col[4]]);
    double value = 0.0;
    auto res = std::from_chars(v.data(), v.data() + v.size(), value);
    if (v.empty() || res.ec != std::errc() || res.ptr != v.data() + v.size() ||
        !std::isfinite(value))
      throw ParseError("row " + std::to_string(lineNo) + ": value '" + v +
                       "' is not a finite number");
    cells.push_back({units.intern(trim(f[col[0]])), times.intern(trim(f[col[1]])),
                     rows.intern(trim(f[col[2]])), cols.intern(trim(f[col[3]])), value});
  }
  if (cells.empty()) throw ParseError("panel file has no data rows");

  const PanelDims dims{rows.size(), cols.size(), units.size(), times.size()};
  Matrix data(static_cast<Eigen::Index>(dims.P) * dims.R, dims.cells());
  std::vector<char> seen(static_cast<std::size_t>(data.size()), 0);
  for (const auto& c : cells) {
    const Eigen::Index r = c.row + static_cast<Eigen::Index>(dims.P) * c.column;
    const Eigen::Index n = static_cast<Eigen::Index>(c.unit) * dims.T + c.time;
    auto& flag = seen[static_cast<std::size_t>(n * data.rows() + r)];
    if (flag)
      throw PanelError("duplicate cell (unit=" + units.labels()[c.unit] +
                       ", time=" + times.labels()[c.time] + ", row_level=" +
                       rows.labels()[c.row] + ", col_level=" + cols.labels()[c.column] + ")");
    flag = 1;
    data(r, n) = c.value;
  }
  for (int i = 0; i < dims.I; ++i)
    for (int t = 0; t < dims.T; ++t)
      for (int p = 0; p < dims.P; ++p)
        for (int r = 0; r < dims.R; ++r) {
          const Eigen::Index n = static_cast<Eigen::Index>(i) * dims.T + t;
          const Eigen::Index q = p + static_cast<Eigen::Index>(dims.P) * r;
          if (!seen[static_cast<std::size_t>(n * data.rows() + q)])
            throw PanelError("incomplete panel: missing cell (unit=" + units.labels()[i] +
                             ", time=" + times.labels()[t] + ", row_level=" +
                             rows.labels()[p] + ", col_level=" + cols.labels()[r] + ")");
        }

  return MatrixPanel(dims, std::move(data), units.labels(), times.labels(), rows.labels(),
                     cols.labels());
}

void save_panel(const MatrixPanel& panel, const std::filesystem::path& path, char delimiter) {
  std::ofstream out(path);
  if (!out) throw ParseError("cannot write panel file " + path.string());
  const auto& d = panel.dims();
  out << "unit" << delimiter << "time" << delimiter << "row_level" << delimiter
      << "col_level" << delimiter << "value\n";
  for (int i = 0; i < d.I; ++i)
    for (int t = 0; t < d.T; ++t)
      for (int p = 0; p < d.P; ++p)
        for (int r = 0; r < d.R; ++r)
          out << panel.unit_labels()[i] << delimiter << panel.time_labels()[t] << delimiter
              << panel.row_labels()[p] << delimiter << panel.col_labels()[r] << delimiter
              << format_real(panel(p, r, i, t)) << '\n';
  if (!out) throw ParseError("failed writing panel file " + path.string());
}

MatrixPanel logit_transform(const MatrixPanel& panel) {
  const auto& d = panel.dims();
  Matrix out = panel.vec_data();
  for (Eigen::Index n = 0; n < out.cols(); ++n)
    for (Eigen::Index q = 0; q < out.rows(); ++q) {
      const double x = out(q, n);
      if (!(x > 0.0 && x < 1.0)) {
        const int p = static_cast<int>(q % d.P), r = static_cast<int>(q / d.P);
        const int i = static_cast<int>(n / d.T), t = static_cast<int>(n % d.T);
        throw DomainError("logit undefined for value " + format_real(x) + " at (p=" +
                          std::to_string(p + 1) + ", r=" + std::to_string(r + 1) +
                          ", i=" + std::to_string(i + 1) + ", t=" + std::to_string(t + 1) + ")");
      }
      out(q, n) = std::log(x) - std::log1p(-x);
    }
  return MatrixPanel(d, std::move(out), panel.unit_labels(), panel.time_labels(),
                     panel.row_labels(), panel.col_labels());
}

}  // namespace mvhmm
