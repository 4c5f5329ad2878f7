#ifndef MVHMM_STRUCTURES_HPP
#define MVHMM_STRUCTURES_HPP

#include <array>
#include <string>
#include <string_view>

namespace mvhmm {

/// Eigen-decomposition constraints on the row covariances, lambda*Gamma*Delta*Gamma'.
/// E = equal across states, V = variable, I = identity.
enum class SigmaStructure {
  EII, VII, EEI, VEI, EVI, VVI, EEE, VEE, EVE, VVE, EEV, VEV, EVV, VVV
};

/// Volume-free constraints on the unit-determinant column covariances Gamma*Delta*Gamma'.
enum class PsiStructure { II, EI, VI, EE, VE, EV, VV };

inline constexpr std::array<SigmaStructure, 14> kAllSigmaStructures{
    SigmaStructure::EII, SigmaStructure::VII, SigmaStructure::EEI, SigmaStructure::VEI,
    SigmaStructure::EVI, SigmaStructure::VVI, SigmaStructure::EEE, SigmaStructure::VEE,
    SigmaStructure::EVE, SigmaStructure::VVE, SigmaStructure::EEV, SigmaStructure::VEV,
    SigmaStructure::EVV, SigmaStructure::VVV};

inline constexpr std::array<PsiStructure, 7> kAllPsiStructures{
    PsiStructure::II, PsiStructure::EI, PsiStructure::VI, PsiStructure::EE,
    PsiStructure::VE, PsiStructure::EV, PsiStructure::VV};

struct StructurePair {
  SigmaStructure sigma = SigmaStructure::VVV;
  PsiStructure psi = PsiStructure::VV;
  friend bool operator==(const StructurePair&, const StructurePair&) = default;
};

/// All 98 pairs, Sigma-major in declaration order.
std::array<StructurePair, 98> all_structure_pairs();

std::string_view to_string(SigmaStructure s);
std::string_view to_string(PsiStructure s);
/// "VVE-VE" style name.
std::string to_string(StructurePair s);

/// Throw UsageError listing the valid names on failure.
SigmaStructure parse_sigma_structure(std::string_view name);
PsiStructure parse_psi_structure(std::string_view name);
StructurePair parse_structure_pair(std::string_view name);

/// Free parameters of Sigma_1..Sigma_K for a Q x Q row covariance.
long count_sigma_params(SigmaStructure s, int K, int Q);

/// Free parameters of Psi_1..Psi_K under |Psi_k| = 1.
long count_psi_params(PsiStructure s, int K, int Q);

}  // namespace mvhmm

#endif  // MVHMM_STRUCTURES_HPP
