#include "mvhmm/structures.hpp"

#include "mvhmm/types.hpp"

namespace mvhmm {

namespace {

constexpr std::array<std::string_view, 14> kSigmaNames{
    "EII", "VII", "EEI", "VEI", "EVI", "VVI", "EEE",
    "VEE", "EVE", "VVE", "EEV", "VEV", "EVV", "VVV"};
constexpr std::array<std::string_view, 7> kPsiNames{"II", "EI", "VI", "EE", "VE", "EV", "VV"};

std::string valid_pair_names() {
  std::string out;
  for (auto s : kSigmaNames) {
    out += out.empty() ? "" : ", ";
    out += std::string(s) + "-{II,EI,VI,EE,VE,EV,VV}";
  }
  return out;
}

}  // namespace

std::array<StructurePair, 98> all_structure_pairs() {
  std::array<StructurePair, 98> out{};
  std::size_t n = 0;
  for (auto s : kAllSigmaStructures)
    for (auto p : kAllPsiStructures) out[n++] = StructurePair{s, p};
  return out;
}

std::string_view to_string(SigmaStructure s) { return kSigmaNames[static_cast<int>(s)]; }
std::string_view to_string(PsiStructure s) { return kPsiNames[static_cast<int>(s)]; }

std::string to_string(StructurePair s) {
  return std::string(to_string(s.sigma)) + "-" + std::string(to_string(s.psi));
}

SigmaStructure parse_sigma_structure(std::string_view name) {
  for (std::size_t j = 0; j < kSigmaNames.size(); ++j)
    if (kSigmaNames[j] == name) return kAllSigmaStructures[j];
  throw UsageError("unknown Sigma structure '" + std::string(name) +
                   "'; valid: EII VII EEI VEI EVI VVI EEE VEE EVE VVE EEV VEV EVV VVV");
}

PsiStructure parse_psi_structure(std::string_view name) {
  for (std::size_t j = 0; j < kPsiNames.size(); ++j)
    if (kPsiNames[j] == name) return kAllPsiStructures[j];
  throw UsageError("unknown Psi structure '" + std::string(name) +
                   "'; valid: II EI VI EE VE EV VV");
}

StructurePair parse_structure_pair(std::string_view name) {
  const auto dash = name.find('-');
  if (dash == std::string_view::npos)
    throw UsageError("unknown structure '" + std::string(name) + "'; valid names: " +
                     valid_pair_names());
  try {
    return StructurePair{parse_sigma_structure(name.substr(0, dash)),
                         parse_psi_structure(name.substr(dash + 1))};
  } catch (const UsageError&) {
    throw UsageError("unknown structure '" + std::string(name) + "'; valid names: " +
                     valid_pair_names());
  }
}

long count_sigma_params(SigmaStructure s, int K, int Q) {
  const long k = K, q = Q;
  const long orient = q * (q - 1) / 2;
  switch (s) {
    case SigmaStructure::EII: return 1;
    case SigmaStructure::VII: return k;
    case SigmaStructure::EEI: return q;
    case SigmaStructure::VEI: return k + q - 1;
    case SigmaStructure::EVI: return k * (q - 1) + 1;
    case SigmaStructure::VVI: return k * q;
    case SigmaStructure::EEE: return q * (q + 1) / 2;
    case SigmaStructure::VEE: return q * (q + 1) / 2 + k - 1;
    case SigmaStructure::EVE: return orient + k * (q - 1) + 1;
    case SigmaStructure::VVE: return orient + k * q;
    case SigmaStructure::EEV: return k * orient + q;
    case SigmaStructure::VEV: return k * orient + k + q - 1;
    case SigmaStructure::EVV: return k * q * (q + 1) / 2 - k + 1;
    case SigmaStructure::VVV: return k * q * (q + 1) / 2;
  }
  return 0;
}

long count_psi_params(PsiStructure s, int K, int Q) {
  const long k = K, q = Q;
  switch (s) {
    case PsiStructure::II: return 0;
    case PsiStructure::EI: return q - 1;
    case PsiStructure::VI: return k * (q - 1);
    case PsiStructure::EE: return q * (q + 1) / 2 - 1;
    case PsiStructure::VE: return q * (q - 1) / 2 + k * (q - 1);
    case PsiStructure::EV: return k * q * (q - 1) / 2 + q - 1;
    case PsiStructure::VV: return k * q * (q + 1) / 2 - k;
  }
  return 0;
}

}  // namespace mvhmm
