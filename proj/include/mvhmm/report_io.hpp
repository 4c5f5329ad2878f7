#ifndef MVHMM_REPORT_IO_HPP
#define MVHMM_REPORT_IO_HPP

#include "mvhmm/hmm.hpp"

#include <filesystem>
#include <ostream>
#include <string>

namespace mvhmm {

/// JSON document with matrices as row-major nested arrays. Posteriors are
/// stored as z and the per-unit log-likelihoods; forward/backward tables and
/// pairwise expectations are not written and come back empty.
std::string serialize_report(const FitReport& report);
FitReport parse_report(const std::string& text);

void save_report(const FitReport& report, const std::filesystem::path& path);
/// Throws ParseError for unreadable or malformed files.
FitReport load_report(const std::filesystem::path& path);

/// Long-format labels: unit,time,state with one-based states.
void write_state_table(std::ostream& out, const FitReport& report, char delimiter = ',');

/// Number of units whose decoded state differs from the previous time, for
/// every time after the first: time,switches.
void write_switch_table(std::ostream& out, const FitReport& report, char delimiter = ',');
std::vector<int> switch_counts(const IndexMatrix& decoded);

/// Human-readable summary: fit statistics, pi, Pi and the state means.
void print_summary(std::ostream& out, const FitReport& report);

}  // namespace mvhmm

#endif  // MVHMM_REPORT_IO_HPP
