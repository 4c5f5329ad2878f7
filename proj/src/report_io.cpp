#include "mvhmm/report_io.hpp"

#include "json_util.hpp"

#include <fstream>
#include <iomanip>
#include <sstream>

namespace mvhmm {

namespace {

using namespace detail;

constexpr const char* kFormat = "mvhmm-fit-report";

}  // namespace

std::string serialize_report(const FitReport& rep) {
  json doc;
  doc["format"] = kFormat;
  doc["version"] = 1;
  doc["structure"] = to_string(rep.structure);
  doc["K"] = rep.K;
  doc["dims"] = {{"P", rep.dims.P}, {"R", rep.dims.R}, {"I", rep.dims.I}, {"T", rep.dims.T}};
  doc["logLik"] = rep.logLik;
  doc["nParams"] = rep.nParams;
  doc["bic"] = rep.bic;
  doc["iterations"] = rep.iterations;
  doc["converged"] = rep.converged;
  doc["bestStart"] = rep.bestStart;
  doc["wallTime"] = rep.wallTime;
  doc["warnings"] = rep.warnings;
  doc["unitLabels"] = rep.unitLabels;
  doc["timeLabels"] = rep.timeLabels;
  doc["logLikTrace"] = rep.logLikTrace;

  json states = json::array();
  for (const auto& s : rep.params.states)
    states.push_back({{"mean", to_json(s.mean)}, {"sigma", to_json(s.sigma)}, {"psi", to_json(s.psi)}});
  doc["params"] = {{"pi", to_json(rep.params.pi)}, {"trans", to_json(rep.params.trans)},
                   {"states", std::move(states)}};

  json decoded = json::array();
  for (Eigen::Index i = 0; i < rep.decoded.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index t = 0; t < rep.decoded.cols(); ++t) row.push_back(rep.decoded(i, t) + 1);
    decoded.push_back(std::move(row));
  }
  doc["decoded"] = std::move(decoded);
  doc["posteriors"] = {{"z", to_json(rep.posteriors.z)},
                       {"unitLogLik", to_json(rep.posteriors.unitLogLik)}};
  return doc.dump(1) + "\n";
}

FitReport parse_report(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    throw ParseError(std::string("report is not valid JSON: ") + e.what());
  }
  try {
    if (!doc.is_object() || doc.value("format", std::string()) != kFormat)
      throw ParseError("not a fit report (missing format tag)");
    FitReport rep;
    try {
      rep.structure = parse_structure_pair(doc.at("structure").get<std::string>());
    } catch (const UsageError& e) {
      throw ParseError(std::string("report: ") + e.what());
    }
    rep.K = doc.at("K").get<int>();
    const json& d = doc.at("dims");
    rep.dims = PanelDims{d.at("P").get<int>(), d.at("R").get<int>(), d.at("I").get<int>(),
                         d.at("T").get<int>()};
    const int K = rep.K;
    const auto& dm = rep.dims;
    if (K < 1 || dm.P < 1 || dm.R < 1 || dm.I < 1 || dm.T < 1)
      throw ParseError("report: non-positive dimension");
    rep.logLik = doc.at("logLik").get<double>();
    rep.nParams = doc.at("nParams").get<long>();
    rep.bic = doc.at("bic").get<double>();
    rep.iterations = doc.at("iterations").get<int>();
    rep.converged = doc.at("converged").get<bool>();
    rep.bestStart = doc.at("bestStart").get<int>();
    rep.wallTime = doc.at("wallTime").get<double>();
    rep.warnings = doc.at("warnings").get<std::vector<std::string>>();
    rep.unitLabels = doc.at("unitLabels").get<std::vector<std::string>>();
    rep.timeLabels = doc.at("timeLabels").get<std::vector<std::string>>();
    rep.logLikTrace = doc.at("logLikTrace").get<std::vector<double>>();
    if (static_cast<int>(rep.unitLabels.size()) != dm.I ||
        static_cast<int>(rep.timeLabels.size()) != dm.T)
      throw ParseError("report: label counts do not match dims");

    const json& p = doc.at("params");
    rep.params.K = K;
    rep.params.pi = vector_from(p.at("pi"), K, "pi");
    rep.params.trans = matrix_from(p.at("trans"), K, K, "trans");
    const json& states = p.at("states");
    if (!states.is_array() || static_cast<int>(states.size()) != K)
      throw ParseError("report: expected " + std::to_string(K) + " states");
    for (const auto& s : states)
      rep.params.states.push_back(MatNormParams{matrix_from(s.at("mean"), dm.P, dm.R, "mean"),
                                                matrix_from(s.at("sigma"), dm.P, dm.P, "sigma"),
                                                matrix_from(s.at("psi"), dm.R, dm.R, "psi")});

    const json& dec = doc.at("decoded");
    rep.decoded.resize(dm.I, dm.T);
    if (!dec.is_array() || static_cast<int>(dec.size()) != dm.I)
      throw ParseError("report: 'decoded' has the wrong number of rows");
    for (int i = 0; i < dm.I; ++i) {
      const json& row = dec[static_cast<std::size_t>(i)];
      if (!row.is_array() || static_cast<int>(row.size()) != dm.T)
        throw ParseError("report: 'decoded' has the wrong number of columns");
      for (int t = 0; t < dm.T; ++t) {
        const int label = row[static_cast<std::size_t>(t)].get<int>();
        if (label < 1 || label > K) throw ParseError("report: decoded label out of range");
        rep.decoded(i, t) = label - 1;
      }
    }

    const json& post = doc.at("posteriors");
    rep.posteriors.I = dm.I;
    rep.posteriors.T = dm.T;
    rep.posteriors.K = K;
    rep.posteriors.z = matrix_from(post.at("z"), dm.cells(), K, "z");
    rep.posteriors.unitLogLik = vector_from(post.at("unitLogLik"), dm.I, "unitLogLik");
    rep.posteriors.logLik = rep.logLik;
    return rep;
  } catch (const json::exception& e) {
    throw ParseError(std::string("malformed report: ") + e.what());
  }
}

void save_report(const FitReport& report, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open " + path.string() + " for writing");
  out << serialize_report(report);
  if (!out.flush()) throw Error("failed writing " + path.string());
}

FitReport load_report(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open report " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_report(ss.str());
}

std::vector<int> switch_counts(const IndexMatrix& decoded) {
  std::vector<int> counts;
  for (Eigen::Index t = 1; t < decoded.cols(); ++t)
    counts.push_back(static_cast<int>((decoded.col(t).array() != decoded.col(t - 1).array()).count()));
  return counts;
}

void write_state_table(std::ostream& out, const FitReport& rep, char d) {
  out << "unit" << d << "time" << d << "state\n";
  for (int i = 0; i < rep.dims.I; ++i)
    for (int t = 0; t < rep.dims.T; ++t)
      out << rep.unitLabels[i] << d << rep.timeLabels[t] << d << rep.decoded(i, t) + 1 << '\n';
}

void write_switch_table(std::ostream& out, const FitReport& rep, char d) {
  out << "time" << d << "switches\n";
  const auto counts = switch_counts(rep.decoded);
  for (std::size_t j = 0; j < counts.size(); ++j)
    out << rep.timeLabels[j + 1] << d << counts[j] << '\n';
}

void print_summary(std::ostream& out, const FitReport& rep) {
  const auto old = out.flags();
  const auto prec = out.precision();
  out << to_string(rep.structure) << " with K = " << rep.K << " (" << rep.dims.P << " x "
      << rep.dims.R << " matrices, I = " << rep.dims.I << ", T = " << rep.dims.T << ")\n";
  out << std::setprecision(10) << "log-likelihood " << rep.logLik << "   free parameters "
      << rep.nParams << "   BIC " << rep.bic << '\n';
  out << "iterations " << rep.iterations << (rep.converged ? " (converged)" : " (not converged)")
      << ", best start " << rep.bestStart + 1 << '\n';
  for (const auto& w : rep.warnings) out << "warning: " << w << '\n';

  const Eigen::IOFormat fmt(4, 0, "  ", "\n", "    ", "", "", "");
  out << std::fixed << std::setprecision(4);
  out << "\ninitial probabilities\n" << rep.params.pi.transpose().format(fmt) << '\n';
  out << "\ntransition matrix (row: from, column: to)\n" << rep.params.trans.format(fmt) << '\n';
  for (int k = 0; k < rep.K; ++k)
    out << "\nM_" << k + 1 << '\n' << rep.params.states[k].mean.format(fmt) << '\n';
  out.flags(old);
  out.precision(prec);
}

}  // namespace mvhmm
