#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "oracles.hpp"
#include "param_tables.hpp"

#include "mvhmm/criteria.hpp"
#include "mvhmm/structures.hpp"

#include <set>

using namespace mvhmm;

TEST_CASE("98 distinct pairs with round-trip names") {
  const auto pairs = all_structure_pairs();
  std::set<std::string> names;
  for (const auto& p : pairs) {
    const std::string n = to_string(p);
    names.insert(n);
    CHECK(parse_structure_pair(n) == p);
  }
  CHECK(names.size() == 98);
  CHECK(to_string(pairs.front()) == "EII-II");
  CHECK(to_string(pairs.back()) == "VVV-VV");
  CHECK(parse_structure_pair("VEV-EE") == StructurePair{SigmaStructure::VEV, PsiStructure::EE});
}

TEST_CASE("unknown names list the valid ones") {
  CHECK_THROWS_WITH_AS(parse_structure_pair("XYZ"), doctest::Contains("VVE-{II,EI,VI,EE,VE,EV,VV}"), UsageError);
  CHECK_THROWS_AS(parse_structure_pair("VVV-VVV"), UsageError);
  CHECK_THROWS_AS(parse_structure_pair("VVV"), UsageError);
  CHECK_THROWS_WITH_AS(parse_sigma_structure("ABC"), doctest::Contains("EVV"), UsageError);
  CHECK_THROWS_WITH_AS(parse_psi_structure("ZZ"), doctest::Contains("VE"), UsageError);
}

TEST_CASE("Sigma counts match the closed-form table") {
  CHECK(count_sigma_params(SigmaStructure::EII, 3, 4) == 1);
  CHECK(count_sigma_params(SigmaStructure::VVV, 4, 2) == 12);
  CHECK(count_sigma_params(SigmaStructure::EVE, 2, 3) == 8);
  for (int K = 1; K <= 5; ++K)
    for (int Q = 1; Q <= 5; ++Q)
      for (auto s : kAllSigmaStructures) {
        INFO(to_string(s) << " K=" << K << " Q=" << Q);
        CHECK(count_sigma_params(s, K, Q) == table_sigma_count(s, K, Q));
      }
}

TEST_CASE("Psi counts") {
  CHECK(count_psi_params(PsiStructure::II, 3, 3) == 0);
  CHECK(count_psi_params(PsiStructure::VV, 2, 3) == 10);
  CHECK(count_psi_params(PsiStructure::EE, 1, 2) == 2);
  CHECK(count_psi_params(PsiStructure::EE, 4, 2) == 2);
}

TEST_CASE("counts equal the rank of the spectral parameterization") {
  std::mt19937_64 rng(2024);
  for (int K = 1; K <= 4; ++K)
    for (int Q = 1; Q <= 4; ++Q) {
      for (auto s : kAllSigmaStructures) {
        const auto n = to_string(s);
        INFO(n << " K=" << K << " Q=" << Q);
        CHECK(count_sigma_params(s, K, Q) == oracle::jacobian_rank_count(n[0], n[1], n[2], K, Q, rng));
      }
      for (auto s : kAllPsiStructures) {
        const auto n = to_string(s);
        INFO(n << " K=" << K << " Q=" << Q);
        CHECK(count_psi_params(s, K, Q) == oracle::jacobian_rank_count('1', n[0], n[1], K, Q, rng));
      }
    }
}

TEST_CASE("total free parameters") {
  CHECK(n_free_params(parse_structure_pair("EII-II"), 1, 2, 2) == 5);
  CHECK(n_free_params(parse_structure_pair("VVV-VV"), 2, 2, 3) == 31);
  for (const auto& s : all_structure_pairs()) {
    // the chain contributes nothing when K = 1
    CHECK(n_free_params(s, 1, 3, 2) ==
          6 + count_sigma_params(s.sigma, 1, 3) + count_psi_params(s.psi, 1, 2));
    for (int K = 1; K < 8; ++K) CHECK(n_free_params(s, K + 1, 2, 3) > n_free_params(s, K, 2, 3));
  }
  CHECK_THROWS_AS(n_free_params(parse_structure_pair("EII-II"), 0, 2, 2), UsageError);
}

TEST_CASE("BIC") {
  CHECK(bic(0.0, 0, 10) == 0.0);
  const double a = bic(-100.0, 5, 100), b = bic(-100.0, 6, 100);
  CHECK(b - a == doctest::Approx(std::log(100.0)).epsilon(1e-14));
  CHECK(a < b);
  CHECK(bic(-50.0, 3, 20) == doctest::Approx(100.0 + 3.0 * std::log(20.0)));
  CHECK_THROWS_AS(bic(0.0, 1, 0), UsageError);
}
