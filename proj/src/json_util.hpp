#ifndef MVHMM_JSON_UTIL_HPP
#define MVHMM_JSON_UTIL_HPP

#include "mvhmm/types.hpp"

#include <json.hpp>

#include <string>

namespace mvhmm::detail {

using json = nlohmann::json;

inline json to_json(const Matrix& m) {
  json rows = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

inline json to_json(const Vector& v) {
  json a = json::array();
  for (Eigen::Index j = 0; j < v.size(); ++j) a.push_back(v(j));
  return a;
}

inline Matrix matrix_from(const json& j, Eigen::Index rows, Eigen::Index cols, const char* what) {
  if (!j.is_array() || static_cast<Eigen::Index>(j.size()) != rows)
    throw ParseError(std::string("'") + what + "' has the wrong number of rows");
  Matrix m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    const json& row = j[static_cast<std::size_t>(r)];
    if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != cols)
      throw ParseError(std::string("'") + what + "' has the wrong number of columns");
    for (Eigen::Index c = 0; c < cols; ++c)
      m(r, c) = row[static_cast<std::size_t>(c)].get<double>();
  }
  return m;
}

inline Vector vector_from(const json& j, Eigen::Index n, const char* what) {
  if (!j.is_array() || static_cast<Eigen::Index>(j.size()) != n)
    throw ParseError(std::string("'") + what + "' has the wrong length");
  Vector v(n);
  for (Eigen::Index k = 0; k < n; ++k) v(k) = j[static_cast<std::size_t>(k)].get<double>();
  return v;
}

}  // namespace mvhmm::detail

#endif  // MVHMM_JSON_UTIL_HPP
