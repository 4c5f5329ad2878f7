// Command-line front end: fit, select, simulate, decode, bench.

#include "mvhmm/report_io.hpp"
#include "mvhmm/selection.hpp"
#include "mvhmm/simulation.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

namespace fs = std::filesystem;
using namespace mvhmm;

namespace {

struct Common {
  std::string data;
  std::string outDir = ".";
  std::uint64_t seed = kDefaultSeed;
  bool logit = false;
  double tol = 1e-8;
  int maxIter = 500;
  int shortRuns = 100;
  int shortIters = 1;
  int workers = 1;
};

void add_fit_flags(CLI::App* app, Common& c) {
  app->add_option("--seed", c.seed, "master seed")->capture_default_str();
  app->add_option("--out-dir", c.outDir, "directory for output files")->capture_default_str();
  app->add_option("--tol", c.tol, "relative log-likelihood tolerance")->capture_default_str();
  app->add_option("--max-iter", c.maxIter, "maximum ECM iterations")->capture_default_str();
  app->add_option("--short-runs", c.shortRuns, "short-EM starts")->capture_default_str();
  app->add_option("--short-iters", c.shortIters, "iterations per short-EM start")
      ->capture_default_str();
}

FitConfig config_from(const Common& c) {
  FitConfig f;
  f.seed = c.seed;
  f.tol = c.tol;
  f.maxIter = c.maxIter;
  f.shortRuns = c.shortRuns;
  f.shortIters = c.shortIters;
  return f;
}

MatrixPanel read_panel(const Common& c) {
  MatrixPanel panel = load_panel(c.data);
  return c.logit ? logit_transform(panel) : panel;
}

fs::path prepare_out(const Common& c) {
  fs::path dir(c.outDir);
  fs::create_directories(dir);
  return dir;
}

template <class Writer>
void write_file(const fs::path& path, Writer&& writer) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open " + path.string() + " for writing");
  writer(out);
  if (!out.flush()) throw Error("failed writing " + path.string());
}

std::string file_stem(StructurePair s, int K) { return to_string(s) + "_K" + std::to_string(K); }

// "1-10", "2,3,5" or a mix like "1,3-4".
std::vector<int> parse_ks(const std::string& text) {
  std::vector<int> ks;
  std::stringstream ss(text);
  std::string part;
  while (std::getline(ss, part, ',')) {
    try {
      const auto dash = part.find('-');
      if (dash == std::string::npos) {
        ks.push_back(std::stoi(part));
      } else {
        const int a = std::stoi(part.substr(0, dash)), b = std::stoi(part.substr(dash + 1));
        for (int k = a; k <= b; ++k) ks.push_back(k);
      }
    } catch (const std::logic_error&) {
      throw UsageError("cannot read K list '" + text + "'");
    }
  }
  return ks;
}

std::vector<StructurePair> parse_structures(const std::string& text) {
  if (text == "all") return all_pairs();
  std::vector<StructurePair> out;
  std::stringstream ss(text);
  std::string part;
  while (std::getline(ss, part, ',')) out.push_back(parse_structure_pair(part));
  return out;
}

int cmd_fit(const Common& c, const std::string& structureName, int K) {
  const StructurePair structure = parse_structure_pair(structureName);
  const MatrixPanel panel = read_panel(c);
  const FitReport rep = fit(panel, structure, K, config_from(c));
  const fs::path dir = prepare_out(c);
  const fs::path path = dir / (file_stem(structure, K) + ".json");
  save_report(rep, path);
  print_summary(std::cout, rep);
  std::cout << "\nreport written to " << path.string() << '\n';
  return 0;
}

int cmd_select(const Common& c, const std::string& ks, const std::string& structures) {
  ModelGrid grid;
  grid.structures = parse_structures(structures);
  grid.Ks = parse_ks(ks);
  grid.perFitConfig = config_from(c);
  validate(grid);
  const MatrixPanel panel = read_panel(c);
  const SelectionReport sel = run_grid(panel, grid, c.workers);
  const fs::path dir = prepare_out(c);
  write_file(dir / "selection.csv", [&](std::ostream& o) { write_selection_table(o, sel); });
  const GridCell& best = sel.winner();
  save_report(*best.fit, dir / (file_stem(best.structure, best.K) + ".json"));
  for (const auto& f : sel.failures) std::cerr << "failed: " << f << '\n';
  for (const auto& w : sel.warnings) std::cerr << "warning: " << w << '\n';
  std::cout << "best model " << to_string(best.structure) << " with K = " << best.K
            << " (BIC " << format_real(best.bic) << ")\n";
  std::cout << sel.table.size() - sel.failures.size() << " of " << sel.table.size()
            << " fits succeeded; table written to " << (dir / "selection.csv").string() << '\n';
  return 0;
}

Scenario resolve_scenario(const std::string& name, int replicates) {
  Scenario s = fs::exists(name) ? load_scenario(name) : builtin_scenario(name);
  if (replicates > 0) s.replicates = replicates;
  return s;
}

int cmd_simulate(const Common& c, const std::string& scenario, int replicates) {
  const Scenario s = resolve_scenario(scenario, replicates);
  const RecoveryRun run = run_recovery(s, config_from(c), c.workers);
  const fs::path dir = prepare_out(c);
  write_file(dir / "recovery.csv",
             [&](std::ostream& o) { write_recovery_table(o, {s}, {run.report}); });
  write_file(dir / "fit_times.csv", [&](std::ostream& o) {
    o << "replicate,iterations,logLik,seconds\n";
    for (std::size_t r = 0; r < run.fits.size(); ++r)
      o << r + 1 << ',' << run.fits[r].iterations << ',' << format_real(run.fits[r].logLik) << ','
        << format_real(run.fits[r].wallTime) << '\n';
  });
  for (const auto& f : run.failures) std::cerr << "failed: " << f << '\n';
  const auto& r = run.report;
  std::cout << s.label << ": " << run.fits.size() << " fits\n"
            << "MSE  M " << r.mseM << "  Sigma " << r.mseSigma << "  Psi " << r.msePsi
            << "  pi " << r.msePi << "  Pi " << r.mseTrans << '\n';
  return 0;
}

int cmd_decode(const std::string& reportPath, const std::string& outDir) {
  const FitReport rep = load_report(reportPath);
  fs::path dir(outDir);
  fs::create_directories(dir);
  write_file(dir / "states.csv", [&](std::ostream& o) { write_state_table(o, rep); });
  write_file(dir / "switches.csv", [&](std::ostream& o) { write_switch_table(o, rep); });
  std::cout << "wrote " << (dir / "states.csv").string() << " and "
            << (dir / "switches.csv").string() << '\n';
  return 0;
}

int cmd_bench(const Common& c, const std::vector<std::string>& names) {
  std::vector<Scenario> scenarios;
  if (names.empty() || (names.size() == 1 && names[0] == "all"))
    scenarios = builtin_scenarios(1);
  else
    for (const auto& n : names) scenarios.push_back(resolve_scenario(n, 1));
  const auto rows = timing_run(scenarios, {TimingMode::Sequential, TimingMode::Parallel},
                               c.workers, config_from(c));
  const fs::path dir = prepare_out(c);
  write_file(dir / "timing.csv", [&](std::ostream& o) { write_timing_table(o, rows); });
  write_timing_table(std::cout, rows);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Matrix-variate hidden Markov models with parsimonious covariances"};
  app.require_subcommand(1);
  Common c;

  std::string structure, ks = "1-3", structures = "all", scenario, report, decodeOut = ".";
  int K = 1, replicates = 0;
  std::vector<std::string> benchScenarios;

  auto* fitCmd = app.add_subcommand("fit", "fit one structure at one K");
  fitCmd->add_option("--data", c.data, "panel file (unit,time,row,col,value)")->required();
  fitCmd->add_option("--structure", structure, "structure pair, e.g. VEV-EE")->required();
  fitCmd->add_option("--K", K, "number of hidden states")->required();
  fitCmd->add_flag("--logit", c.logit, "apply the logit transform first");
  add_fit_flags(fitCmd, c);

  auto* selCmd = app.add_subcommand("select", "fit a grid of structures and K, pick by BIC");
  selCmd->add_option("--data", c.data, "panel file")->required();
  selCmd->add_option("--Ks", ks, "K values, e.g. 1-10 or 1,2,4")->capture_default_str();
  selCmd->add_option("--structures", structures, "'all' or a comma list")->capture_default_str();
  selCmd->add_option("--workers", c.workers, "parallel fits")->capture_default_str();
  selCmd->add_flag("--logit", c.logit, "apply the logit transform first");
  add_fit_flags(selCmd, c);

  auto* simCmd = app.add_subcommand("simulate", "parameter recovery on a scenario");
  simCmd->add_option("--scenario", scenario, "builtin label or scenario file")->required();
  simCmd->add_option("--replicates", replicates, "override the replicate count");
  simCmd->add_option("--workers", c.workers, "parallel replicates")->capture_default_str();
  add_fit_flags(simCmd, c);

  auto* decCmd = app.add_subcommand("decode", "state labels and switch counts from a report");
  decCmd->add_option("--report", report, "fit report file")->required();
  decCmd->add_option("--out-dir", decodeOut, "directory for output files")->capture_default_str();

  auto* benchCmd = app.add_subcommand("bench", "sequential vs parallel grid timing");
  benchCmd->add_option("--scenario", benchScenarios, "scenario labels or files, or 'all'");
  benchCmd->add_option("--workers", c.workers, "workers in parallel mode")->capture_default_str();
  add_fit_flags(benchCmd, c);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*fitCmd) return cmd_fit(c, structure, K);
    if (*selCmd) return cmd_select(c, ks, structures);
    if (*simCmd) return cmd_simulate(c, scenario, replicates);
    if (*decCmd) return cmd_decode(report, decodeOut);
    if (*benchCmd) return cmd_bench(c, benchScenarios);
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 2;
}
