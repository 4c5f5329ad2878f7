#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "oracles.hpp"

#include "mvhmm/panel.hpp"

#include <filesystem>
#include <fstream>

using namespace mvhmm;
namespace fs = std::filesystem;

namespace {

fs::path temp_file(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "mvhmm_panel_tests";
  fs::create_directories(dir);
  return dir / name;
}

void write_text(const fs::path& p, const std::string& text) {
  std::ofstream(p) << text;
}

std::string full_table() {
  std::string s = "unit,time,row_level,col_level,value\n";
  double v = 0.0;
  for (const char* u : {"A", "B"})
    for (const char* t : {"2004", "2005"})
      for (const char* r : {"male", "female"})
        for (const char* c : {"young", "old"}) {
          s += std::string(u) + "," + t + "," + r + "," + c + "," + std::to_string(v) + "\n";
          v += 1.0;
        }
  return s;
}

}  // namespace

TEST_CASE("a complete 16-row table loads as a 2x2x2x2 panel") {
  const auto path = temp_file("full.csv");
  write_text(path, full_table());
  const MatrixPanel p = load_panel(path);
  CHECK(p.dims() == PanelDims{2, 2, 2, 2});
  CHECK(p.unit_labels() == std::vector<std::string>{"A", "B"});
  CHECK(p.time_labels() == std::vector<std::string>{"2004", "2005"});
  CHECK(p.row_labels() == std::vector<std::string>{"male", "female"});
  // value counter runs unit, time, row, col
  CHECK(p(0, 0, 0, 0) == 0.0);
  CHECK(p(0, 1, 0, 0) == 1.0);
  CHECK(p(1, 0, 0, 0) == 2.0);
  CHECK(p(1, 1, 1, 1) == 15.0);
  CHECK(p(0, 0, 1, 0) == 8.0);
}

TEST_CASE("columns are located by header name") {
  const auto path = temp_file("reordered.csv");
  write_text(path,
             "value,col_level,row_level,time,unit\n"
             "1.5,c1,r1,t1,u1\n");
  const MatrixPanel p = load_panel(path);
  CHECK(p.dims() == PanelDims{1, 1, 1, 1});
  CHECK(p(0, 0, 0, 0) == 1.5);
}

TEST_CASE("a missing cell is reported by name") {
  std::string text = full_table();
  // drop unit A, time 2005, male, young (the fifth data row)
  std::istringstream in(text);
  std::string line, out;
  int row = 0;
  while (std::getline(in, line)) {
    if (row++ != 5) out += line + "\n";
  }
  const auto path = temp_file("missing.csv");
  write_text(path, out);
  try {
    load_panel(path);
    FAIL("expected PanelError");
  } catch (const PanelError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("incomplete panel") != std::string::npos);
    CHECK(msg.find("unit=A") != std::string::npos);
    CHECK(msg.find("time=2005") != std::string::npos);
    CHECK(msg.find("row_level=male") != std::string::npos);
    CHECK(msg.find("col_level=young") != std::string::npos);
  }
}

TEST_CASE("duplicate cells and bad numbers are rejected") {
  const auto dup = temp_file("dup.csv");
  write_text(dup, full_table() + "A,2004,male,young,3\n");
  CHECK_THROWS_WITH_AS(load_panel(dup), doctest::Contains("duplicate cell"), PanelError);

  const auto bad = temp_file("bad.csv");
  write_text(bad, "unit,time,row_level,col_level,value\nA,1,r,c,abc\n");
  CHECK_THROWS_WITH_AS(load_panel(bad), doctest::Contains("row 2"), ParseError);

  const auto inf = temp_file("inf.csv");
  write_text(inf, "unit,time,row_level,col_level,value\nA,1,r,c,inf\n");
  CHECK_THROWS_AS(load_panel(inf), ParseError);

  const auto hdr = temp_file("hdr.csv");
  write_text(hdr, "unit,time,row,col,value\nA,1,r,c,1\n");
  CHECK_THROWS_AS(load_panel(hdr), ParseError);
}

TEST_CASE("save then load reproduces every value") {
  std::mt19937_64 rng(7);
  const auto hp = oracle::random_hmm(2, 3, 2, rng);
  const MatrixPanel p = oracle::sample_panel(hp, 4, 3, rng);
  const auto path = temp_file("roundtrip.csv");
  save_panel(p, path);
  const MatrixPanel q = load_panel(path);
  REQUIRE(q.dims() == p.dims());
  CHECK((q.vec_data() - p.vec_data()).cwiseAbs().maxCoeff() <= 1e-15);
  CHECK(q.vec_data() == p.vec_data());

  const auto semi = temp_file("roundtrip.tsv");
  save_panel(p, semi, ';');
  CHECK(load_panel(semi, ';').vec_data() == p.vec_data());
}

TEST_CASE("logit transform") {
  std::vector<Matrix> slices{Matrix::Constant(1, 2, 0.5)};
  const MatrixPanel half(1, 1, slices);
  CHECK(logit_transform(half)(0, 1, 0, 0) == 0.0);

  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(1e-6, 1.0 - 1e-6);
  Matrix vals(100, 1);
  for (int j = 0; j < 100; ++j) vals(j) = u(rng);
  const MatrixPanel many(PanelDims{100, 1, 1, 1}, vals);
  const MatrixPanel y = logit_transform(many);
  for (int j = 0; j < 100; ++j) {
    const double back = 1.0 / (1.0 + std::exp(-y(j, 0, 0, 0)));
    CHECK(std::abs(back - vals(j)) <= 1e-14);
  }
  // strictly monotone
  std::vector<int> order(100);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int a, int b) { return vals(a) < vals(b); });
  for (int j = 1; j < 100; ++j) CHECK(y(order[j], 0, 0, 0) > y(order[j - 1], 0, 0, 0));

  std::vector<Matrix> edge{Matrix::Constant(2, 2, 0.3), Matrix::Constant(2, 2, 0.3)};
  edge[1](1, 0) = 1.0;
  try {
    logit_transform(MatrixPanel(1, 2, edge));
    FAIL("expected DomainError");
  } catch (const DomainError& e) {
    CHECK(std::string(e.what()).find("(p=2, r=1, i=1, t=2)") != std::string::npos);
  }
  edge[1](1, 0) = 0.0;
  CHECK_THROWS_AS(logit_transform(MatrixPanel(1, 2, edge)), DomainError);
}

TEST_CASE("slices") {
  std::vector<Matrix> slices(6, Matrix::Constant(2, 3, 4.25));
  const MatrixPanel p(2, 3, slices);
  CHECK(slice_unit_time(p, 2, 3) == Matrix::Constant(2, 3, 4.25));
  CHECK_THROWS_AS(slice_unit_time(p, 3, 1), BoundsError);
  CHECK_THROWS_AS(slice_unit_time(p, 1, 0), BoundsError);

  std::mt19937_64 rng(11);
  std::vector<Matrix> draws;
  for (int j = 0; j < 6; ++j) draws.push_back(oracle::gaussian(2, 3, rng));
  const MatrixPanel g(2, 3, draws);
  for (int i = 1; i <= 2; ++i)
    for (int t = 1; t <= 3; ++t) CHECK(slice_unit_time(g, i, t) == draws[(i - 1) * 3 + (t - 1)]);
}

TEST_CASE("construction checks") {
  std::vector<Matrix> slices{Matrix::Zero(2, 2), Matrix::Zero(2, 3)};
  CHECK_THROWS_AS(MatrixPanel(1, 2, slices), PanelError);
  std::vector<Matrix> one{Matrix::Zero(2, 2)};
  CHECK_THROWS_AS(MatrixPanel(2, 1, one), PanelError);
  Matrix bad = Matrix::Zero(4, 1);
  bad(2, 0) = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS(MatrixPanel(PanelDims{2, 2, 1, 1}, bad));
}
