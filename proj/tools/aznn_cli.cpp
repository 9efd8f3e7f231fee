// aznn command-line front end.
//
// Subcommands: run-sqrt, run-symmetrizer (time-varying AZNN runs),
// static-symmetrizer (homotopy solver with certificate), derive-formula
// (exact look-ahead formula derivation), gallery (matrix export), report
// (re-summarize stored trajectory CSVs).
//
// Configuration is flat key=value text with one section per phase
// ([startup], [iterations], [final]); command-line flags override file
// values. Exit codes: 0 success, 1 I/O or config error, 2 divergence,
// 3 rank-deficient static output.

#include <CLI11.hpp>

#include <aznn/engine.hpp>
#include <aznn/findiff.hpp>
#include <aznn/flows.hpp>
#include <aznn/linalg.hpp>
#include <aznn/problems.hpp>
#include <aznn/static_symmetrizer.hpp>

#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

namespace {

using aznn::DenseMatrix;

constexpr int kExitOk = 0;
constexpr int kExitError = 1;
constexpr int kExitDiverged = 2;
constexpr int kExitRankDeficient = 3;

// --- key=value config files with [section] headers ---------------------------

using ConfigMap = std::map<std::string, std::string>;

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

// Keys are flattened to "section.key"; keys before any section keep their
// plain name.
ConfigMap parse_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file '" + path + "'");
  ConfigMap cfg;
  std::string line, section;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[' && line.back() == ']') {
      section = trim(line.substr(1, line.size() - 2));
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw std::runtime_error(path + ":" + std::to_string(lineno) +
                               ": expected key=value, got '" + line + "'");
    const std::string key = trim(line.substr(0, eq));
    if (key.empty())
      throw std::runtime_error(path + ":" + std::to_string(lineno) +
                               ": empty key");
    cfg[section.empty() ? key : section + "." + key] =
        trim(line.substr(eq + 1));
  }
  return cfg;
}

// Pre-scan argv for --config so file values can seed the flag defaults;
// CLI11 then overrides only the flags actually given.
std::string find_config_arg(int argc, char** argv) {
  for (int i = 1; i < argc; ++i) {
    const std::string a = argv[i];
    if (a == "--config" && i + 1 < argc) return argv[i + 1];
    if (a.rfind("--config=", 0) == 0) return a.substr(9);
  }
  return "";
}

template <class T>
void seed_from(const ConfigMap& cfg, const std::string& key, T& out) {
  const auto it = cfg.find(key);
  if (it == cfg.end()) return;
  std::istringstream ss(it->second);
  T v;
  if (!(ss >> v))
    throw std::runtime_error("config key '" + key + "': cannot parse '" +
                             it->second + "'");
  out = v;
}

void seed_from(const ConfigMap& cfg, const std::string& key, std::string& out) {
  const auto it = cfg.find(key);
  if (it != cfg.end()) out = it->second;
}

std::vector<double> parse_double_list(const std::string& csv) {
  std::vector<double> out;
  std::stringstream ss(csv);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    tok = trim(tok);
    if (!tok.empty()) out.push_back(std::stod(tok));
  }
  return out;
}

// --- shared time-varying run plumbing ----------------------------------------

struct RunFlags {
  std::string config_path;
  std::string formula = "4_5";
  double tau = 0.02;
  double t0 = 10.0;
  double t_end = 3610.0;
  long n = 3;
  uint64_t seed = 1;
  double eta_start = 160.0;
  int startup_steps = 12;
  double eta_iter = 1.45;
  double eta_final = 0.0;            // 0 = no final phase
  double final_switch_time = 0.0;
  bool baseline = false;
  double baseline_eta = 1.35;
  std::string csv_path;
  std::string summary_path;
  std::string snapshot_times;
  std::string snapshot_prefix;
};

void add_run_options(CLI::App* cmd, RunFlags& f) {
  cmd->add_option("--config", f.config_path,
                  "key=value config file; flags override file values");
  cmd->add_option("--formula", f.formula,
                  "look-ahead formula: 1_2, 2_3 or 4_5");
  cmd->add_option("--tau", f.tau, "sampling gap");
  cmd->add_option("--t0", f.t0, "start time");
  cmd->add_option("--t-end", f.t_end, "end time");
  cmd->add_option("--n", f.n, "flow dimension");
  cmd->add_option("--seed", f.seed, "flow seed");
  cmd->add_option("--eta-start", f.eta_start, "startup decay constant");
  cmd->add_option("--startup-steps", f.startup_steps, "Euler startup steps");
  cmd->add_option("--eta-iter", f.eta_iter, "main-phase decay constant");
  cmd->add_option("--eta-final", f.eta_final,
                  "third-phase decay constant (0 disables)");
  cmd->add_option("--final-switch-time", f.final_switch_time,
                  "time of the switch to eta-final");
  cmd->add_flag("--baseline", f.baseline,
                "basic non-adapted ZNN: one shared eta, minimal startup");
  cmd->add_option("--eta", f.baseline_eta, "shared eta for --baseline");
  cmd->add_option("--csv", f.csv_path, "trajectory CSV output path");
  cmd->add_option("--summary", f.summary_path,
                  "summary output path (default stdout)");
  cmd->add_option("--snapshot-times", f.snapshot_times,
                  "comma-separated times at which to export the solution");
  cmd->add_option("--snapshot-prefix", f.snapshot_prefix,
                  "path prefix for snapshot matrix files");
}

void seed_run_flags_from_config(RunFlags& f) {
  if (f.config_path.empty()) return;
  const ConfigMap cfg = parse_config(f.config_path);
  seed_from(cfg, "formula", f.formula);
  seed_from(cfg, "tau", f.tau);
  seed_from(cfg, "t0", f.t0);
  seed_from(cfg, "t_end", f.t_end);
  seed_from(cfg, "n", f.n);
  seed_from(cfg, "seed", f.seed);
  seed_from(cfg, "csv", f.csv_path);
  seed_from(cfg, "summary", f.summary_path);
  seed_from(cfg, "snapshot_times", f.snapshot_times);
  seed_from(cfg, "snapshot_prefix", f.snapshot_prefix);
  seed_from(cfg, "startup.eta", f.eta_start);
  seed_from(cfg, "startup.steps", f.startup_steps);
  seed_from(cfg, "iterations.eta", f.eta_iter);
  seed_from(cfg, "final.eta", f.eta_final);
  seed_from(cfg, "final.switch_time", f.final_switch_time);
  int baseline_int = f.baseline ? 1 : 0;
  seed_from(cfg, "baseline", baseline_int);
  f.baseline = baseline_int != 0;
  seed_from(cfg, "baseline_eta", f.baseline_eta);
}

std::ostream& summary_stream(const RunFlags& f, std::ofstream& file) {
  if (f.summary_path.empty()) return std::cout;
  file.open(f.summary_path);
  if (!file)
    throw std::runtime_error("cannot open summary file '" + f.summary_path +
                             "'");
  return file;
}

int execute_run(const RunFlags& f, const aznn::ProblemAdapter& adapter,
                const aznn::MatrixFlow& flow) {
  const aznn::FDFormula formula = aznn::formula_by_name(f.formula);

  aznn::PhaseConfig cfg;
  if (f.baseline) {
    cfg = aznn::baseline_config(f.baseline_eta, formula);
  } else {
    cfg.eta_start = f.eta_start;
    cfg.startup_steps = f.startup_steps;
    cfg.eta_iter = f.eta_iter;
    if (f.eta_final > 0.0) {
      cfg.eta_final = f.eta_final;
      cfg.final_switch_time = f.final_switch_time;
    }
  }
  cfg.validate(formula);

  aznn::RunOptions opt;
  opt.t0 = f.t0;
  opt.t_end = f.t_end;
  opt.tau = f.tau;
  if (!f.snapshot_times.empty())
    opt.snapshot_times = parse_double_list(f.snapshot_times);

  const aznn::Trajectory traj =
      aznn::run_aznn(adapter, flow, cfg, formula, opt);

  if (!f.csv_path.empty()) {
    std::ofstream csv(f.csv_path);
    if (!csv)
      throw std::runtime_error("cannot open CSV file '" + f.csv_path + "'");
    aznn::write_csv(csv, traj);
  }
  if (!f.snapshot_prefix.empty()) {
    for (size_t i = 0; i < traj.snapshots.size(); ++i)
      aznn::save_matrix(
          f.snapshot_prefix + "_" + std::to_string(i) + ".mat",
          traj.snapshots[i].second);
  }

  std::ofstream file;
  std::ostream& os = summary_stream(f, file);
  os << "run: " << (f.baseline ? "basic ZNN" : "adapted ZNN") << " "
     << adapter.name() << "\n";
  os << "flow: " << flow.descriptor << "\n";
  os << "config: formula=" << f.formula << " tau=" << f.tau << " t0=" << f.t0
     << " t_end=" << f.t_end << " n=" << f.n << " seed=" << f.seed << "\n";
  os << "config: eta_start=" << cfg.eta_start
     << " startup_steps=" << cfg.startup_steps << " eta_iter=" << cfg.eta_iter;
  if (cfg.eta_final)
    os << " eta_final=" << *cfg.eta_final
       << " final_switch_time=" << *cfg.final_switch_time;
  os << "\n";
  for (const auto& [phase, h] : aznn::h_report(cfg, f.tau))
    os << "h[" << phase << "] = " << h << "\n";
  if (traj.diverged) {
    os << "status: DIVERGED\n";
    return kExitDiverged;
  }
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6e", traj.min_residual());
  os << "min_residual = " << buf << "\n";
  std::snprintf(buf, sizeof buf, "%.6e", traj.final_residual());
  os << "final_residual = " << buf << "\n";
  os << "steps = " << traj.steps() << "\n";
  os << "phase_switch_indices =";
  for (int m : traj.phase_marks) os << " " << m;
  os << "\n";
  std::snprintf(buf, sizeof buf, "%.3e", traj.wall_time_per_step);
  os << "median_wall_time_per_step_s = " << buf << "\n";
  os << "status: OK\n";
  return kExitOk;
}

// --- subcommands --------------------------------------------------------------

int cmd_run_sqrt(const RunFlags& fin) {
  RunFlags f = fin;
  const aznn::MatrixFlow flow = aznn::trial_flow_squared(f.n, f.seed);
  aznn::SquareRootAdapter adapter(f.n);
  return execute_run(f, adapter, flow);
}

int cmd_run_symmetrizer(const RunFlags& fin, bool complex_flow,
                        uint64_t guess_seed) {
  RunFlags f = fin;
  const aznn::MatrixFlow flow =
      aznn::trial_flow_general(f.n, f.seed, complex_flow);
  aznn::SymmetrizerAdapter adapter(f.n, guess_seed);
  return execute_run(f, adapter, flow);
}

struct StaticFlags {
  std::string config_path;
  std::string matrix_path;
  std::string gallery_name;
  long n = 35;
  double alpha = 0.0;
  std::string preset = "large";
  bool custom = false;
  double eta = 0.0;
  double approach_exponent = 0.0;
  double t0 = 0.0;
  double tau = 0.0;
  double bb_scale = 0.0;
  long polish_steps = -1;
  uint64_t seed = 3;
  std::string out_matrix;
  std::string summary_path;
};

int cmd_static(const StaticFlags& fin) {
  StaticFlags f = fin;
  if (!f.config_path.empty()) {
    const ConfigMap cfg = parse_config(f.config_path);
    seed_from(cfg, "matrix", f.matrix_path);
    seed_from(cfg, "gallery", f.gallery_name);
    seed_from(cfg, "n", f.n);
    seed_from(cfg, "alpha", f.alpha);
    seed_from(cfg, "preset", f.preset);
    seed_from(cfg, "eta", f.eta);
    seed_from(cfg, "approach_exponent", f.approach_exponent);
    seed_from(cfg, "t0", f.t0);
    seed_from(cfg, "tau", f.tau);
    seed_from(cfg, "bb_scale", f.bb_scale);
    seed_from(cfg, "polish_steps", f.polish_steps);
    seed_from(cfg, "seed", f.seed);
    seed_from(cfg, "out_matrix", f.out_matrix);
    seed_from(cfg, "summary", f.summary_path);
  }

  DenseMatrix a;
  std::string source;
  aznn::StaticParams params;
  if (!f.matrix_path.empty()) {
    a = aznn::load_matrix(f.matrix_path);
    source = "file:" + f.matrix_path;
    params = aznn::preset_by_name(f.preset, f.seed);
  } else if (!f.gallery_name.empty()) {
    const aznn::GalleryKind kind = aznn::gallery_kind_by_name(f.gallery_name);
    a = aznn::gallery(kind, f.n, f.alpha);
    source = "gallery:" + f.gallery_name;
    params = aznn::preset_by_name(f.preset, kind, f.seed);
  } else {
    throw std::runtime_error("static-symmetrizer: need --matrix or --gallery");
  }

  // explicit parameter overrides turn the preset into a custom run
  bool overridden = false;
  auto override_d = [&](double v, double& target) {
    if (v > 0.0) {
      target = v;
      overridden = true;
    }
  };
  override_d(f.eta, params.eta);
  override_d(f.approach_exponent, params.approach_exponent);
  override_d(f.t0, params.t0);
  override_d(f.bb_scale, params.bb_scale);
  if (f.polish_steps >= 0) {
    params.polish_steps = f.polish_steps;
    overridden = true;
  }
  if (f.tau > 0.0) {
    params.tau = aznn::synchronize(params.t0, f.tau);
    overridden = true;
  } else {
    params.tau = aznn::synchronize(params.t0, params.tau);
  }
  if (overridden) params.preset_name = f.preset + "+overrides";
  params.seed = f.seed;

  const aznn::SymmetrizerCertificate cert = aznn::solve_static(a, params);

  if (!f.out_matrix.empty()) aznn::save_matrix(f.out_matrix, cert.symmetrizer);

  std::ofstream file;
  std::ostream* osp = &std::cout;
  if (!f.summary_path.empty()) {
    file.open(f.summary_path);
    if (!file)
      throw std::runtime_error("cannot open summary file '" + f.summary_path +
                               "'");
    osp = &file;
  }
  std::ostream& os = *osp;
  char buf[64];
  os << "static-symmetrizer certificate\n";
  os << "source = " << source << "\n";
  os << "n = " << a.rows() << "\n";
  os << "preset = " << cert.preset << "\n";
  os << "config: eta=" << params.eta << " a=" << params.approach_exponent
     << " t0=" << params.t0 << " tau=" << params.tau
     << " bb_scale=" << params.bb_scale
     << " polish_steps=" << params.polish_steps << " seed=" << params.seed
     << "\n";
  os << "h = " << cert.h << "\n";
  os << "steps = " << cert.steps_taken << "\n";
  std::snprintf(buf, sizeof buf, "%.6e", cert.rel_error);
  os << "rel_error = " << buf << "\n";
  os << "rank = " << cert.rank << (cert.full_rank ? " (full)" : " (DEFICIENT)")
     << "\n";
  std::snprintf(buf, sizeof buf, "%.6e", cert.cond2);
  os << "cond2 = " << buf << "\n";
  os << "status: " << (cert.full_rank ? "OK" : "RANK-DEFICIENT") << "\n";
  return cert.full_rank ? kExitOk : kExitRankDeficient;
}

int cmd_derive(int j, int s, uint64_t seed, int trials) {
  const aznn::FDFormula f = aznn::derive(j, s, seed, trials);
  std::cout << "formula " << f.name << " (j=" << f.j << ", s=" << f.s
            << ", points=" << f.points() << ")\n";
  std::cout << "zdot_k = [" << f.future_weight << "*z_{k+1}";
  for (size_t i = 0; i < f.past_weights.size(); ++i) {
    const std::string sign = f.past_weights[i] >= 0 ? " + " : " - ";
    std::cout << sign << boost::multiprecision::abs(f.past_weights[i])
              << "*z_{k-" << i << "}";
  }
  std::cout << "] / (" << f.tau_scale << "*tau)\n";
  std::cout << "local_order = " << f.local_order << "\n";
  const aznn::ConvergenceReport rep = aznn::check_convergent(f);
  std::cout << "p(1) = " << rep.p_at_1 << "\n";
  std::cout << "extraneous_root_moduli =";
  double worst = 0.0;
  for (double m : rep.extraneous_root_moduli) {
    std::cout << " " << m;
    worst = std::max(worst, m);
  }
  std::cout << "\nmax_extraneous_modulus = " << worst << "\n";
  std::cout << "convergent: " << (rep.pass ? "yes" : "NO") << "\n";
  return rep.pass ? kExitOk : kExitError;
}

int cmd_gallery(const std::string& name, long n, double alpha,
                const std::string& out) {
  const DenseMatrix m = aznn::gallery(aznn::gallery_kind_by_name(name), n, alpha);
  if (out.empty()) {
    aznn::save_matrix(std::cout, m);
  } else {
    aznn::save_matrix(out, m);
  }
  return kExitOk;
}

int cmd_report(const std::vector<std::string>& paths) {
  for (const auto& path : paths) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open CSV file '" + path + "'");
    std::string line;
    if (!std::getline(in, line))
      throw std::runtime_error(path + ": empty file");
    double min_res = std::numeric_limits<double>::infinity();
    double final_res = std::numeric_limits<double>::quiet_NaN();
    long rows = 0;
    int last_phase = -1;
    std::vector<long> switches;
    while (std::getline(in, line)) {
      std::stringstream ss(line);
      std::string tok;
      std::vector<std::string> cols;
      while (std::getline(ss, tok, ',')) cols.push_back(tok);
      if (cols.size() != 5)
        throw std::runtime_error(path + ": malformed row '" + line + "'");
      const double res = std::stod(cols[1]);
      const int phase = std::stoi(cols[4]);
      if (res < min_res) min_res = res;
      final_res = res;
      if (last_phase >= 0 && phase != last_phase) switches.push_back(rows - 1);
      last_phase = phase;
      ++rows;
    }
    if (rows == 0) throw std::runtime_error(path + ": no data rows");
    char buf[64];
    std::cout << "file = " << path << "\n";
    std::cout << "rows = " << rows << " (steps = " << rows - 1 << ")\n";
    std::snprintf(buf, sizeof buf, "%.6e", min_res);
    std::cout << "min_residual = " << buf << "\n";
    std::snprintf(buf, sizeof buf, "%.6e", final_res);
    std::cout << "final_residual = " << buf << "\n";
    std::cout << "phase_switch_indices =";
    for (long s : switches) std::cout << " " << s;
    std::cout << "\n";
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Adapted Zhang Neural Network (AZNN) solvers"};
  app.require_subcommand(1);

  RunFlags sqrt_flags, symm_flags;
  bool symm_complex = false;
  uint64_t symm_guess_seed = 7;
  StaticFlags static_flags;
  int dj = 2, ds = 3, dtrials = 200;
  uint64_t dseed = 1;
  std::string gname = "kahan", gout;
  long gn = 35;
  double galpha = 0.0;
  std::vector<std::string> report_paths;

  CLI::App* c_sqrt =
      app.add_subcommand("run-sqrt", "time-varying matrix square root run");
  add_run_options(c_sqrt, sqrt_flags);

  CLI::App* c_symm = app.add_subcommand("run-symmetrizer",
                                        "time-varying matrix symmetrizer run");
  add_run_options(c_symm, symm_flags);
  c_symm->add_flag("--complex", symm_complex, "complex trial flow");
  c_symm->add_option("--guess-seed", symm_guess_seed,
                     "seed of the symmetric initial guess");

  CLI::App* c_static = app.add_subcommand(
      "static-symmetrizer", "homotopy symmetrizer for a fixed matrix");
  c_static->add_option("--config", static_flags.config_path,
                       "key=value config file; flags override file values");
  c_static->add_option("--matrix", static_flags.matrix_path,
                       "input matrix file (plain-text format)");
  c_static->add_option("--gallery", static_flags.gallery_name,
                       "gallery matrix: kahan, frank, derog_ut, two_by_two");
  c_static->add_option("--n", static_flags.n, "gallery dimension");
  c_static->add_option("--alpha", static_flags.alpha,
                       "gallery parameter (two_by_two)");
  c_static->add_option("--preset", static_flags.preset, "small or large");
  c_static->add_option("--eta", static_flags.eta, "override decay constant");
  c_static->add_option("--approach-exponent", static_flags.approach_exponent,
                       "override homotopy approach exponent");
  c_static->add_option("--t0", static_flags.t0, "override homotopy start");
  c_static->add_option("--tau", static_flags.tau,
                       "override sampling gap (synchronized to the grid)");
  c_static->add_option("--bb-scale", static_flags.bb_scale,
                       "override perturbation scale");
  c_static->add_option("--polish-steps", static_flags.polish_steps,
                       "override extra steps at t = 1");
  c_static->add_option("--seed", static_flags.seed, "perturbation/guess seed");
  c_static->add_option("--out-matrix", static_flags.out_matrix,
                       "write S in the plain-text matrix format");
  c_static->add_option("--summary", static_flags.summary_path,
                       "certificate output path (default stdout)");

  CLI::App* c_derive = app.add_subcommand(
      "derive-formula", "derive a convergent look-ahead formula");
  c_derive->add_option("--j", dj, "past points j")->required();
  c_derive->add_option("--s", ds, "look-ahead span s")->required();
  c_derive->add_option("--seed", dseed, "search seed");
  c_derive->add_option("--trials", dtrials, "search trials");

  CLI::App* c_gallery =
      app.add_subcommand("gallery", "export a gallery matrix");
  c_gallery->add_option("--kind", gname, "kahan, frank, derog_ut, two_by_two")
      ->required();
  c_gallery->add_option("--n", gn, "dimension");
  c_gallery->add_option("--alpha", galpha, "two_by_two parameter");
  c_gallery->add_option("--out", gout, "output path (default stdout)");

  CLI::App* c_report =
      app.add_subcommand("report", "re-summarize stored trajectory CSVs");
  c_report->add_option("csv", report_paths, "CSV files")->required();

  // seed run-flag defaults from --config before parsing, so that explicit
  // flags override the file
  try {
    const std::string pre = find_config_arg(argc, argv);
    if (!pre.empty() && argc > 1) {
      const std::string sub = argv[1];
      if (sub == "run-sqrt") {
        sqrt_flags.config_path = pre;
        seed_run_flags_from_config(sqrt_flags);
      } else if (sub == "run-symmetrizer") {
        symm_flags.config_path = pre;
        seed_run_flags_from_config(symm_flags);
      }
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitError;
  }

  CLI11_PARSE(app, argc, argv);

  try {
    if (c_sqrt->parsed()) return cmd_run_sqrt(sqrt_flags);
    if (c_symm->parsed())
      return cmd_run_symmetrizer(symm_flags, symm_complex, symm_guess_seed);
    if (c_static->parsed()) return cmd_static(static_flags);
    if (c_derive->parsed()) return cmd_derive(dj, ds, dseed, dtrials);
    if (c_gallery->parsed()) return cmd_gallery(gname, gn, galpha, gout);
    if (c_report->parsed()) return cmd_report(report_paths);
  } catch (const aznn::DivergenceError& e) {
    std::cerr << "diverged: " << e.what() << "\n";
    return kExitDiverged;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitError;
  }
  return kExitError;
}
