#pragma once

// Phase-adapted discretized ZNN driver. A run is an Euler start-up phase
// with its own decay constant, a main iteration phase driven by a j_s
// look-ahead formula and a second decay constant, and an optional third
// phase with a final decay constant. Each step solves one Kronecker linear
// system and evaluates one short recursion; residuals, term norms and phase
// switches are logged per step.

#include <chrono>
#include <deque>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "aznn/findiff.hpp"
#include "aznn/flows.hpp"
#include "aznn/linalg.hpp"
#include "aznn/problems.hpp"

namespace aznn {

struct PhaseConfig {
  double eta_start = 1.0;
  int startup_steps = 0;
  double eta_iter = 1.0;
  std::optional<double> eta_final;
  std::optional<double> final_switch_time;

  void validate(const FDFormula& f) const {
    if (eta_start <= 0.0 || eta_iter <= 0.0 ||
        (eta_final && *eta_final <= 0.0))
      throw std::invalid_argument("phase config: decay constants must be > 0");
    if (startup_steps < f.points() - 1)
      throw std::invalid_argument(
          "phase config: startup_steps must be >= j+s-1 of the formula");
  }
};

// h = eta*tau per phase, the per-run ledger entry.
inline std::vector<std::pair<std::string, double>> h_report(
    const PhaseConfig& cfg, double tau) {
  std::vector<std::pair<std::string, double>> h;
  h.emplace_back("startup", cfg.eta_start * tau);
  h.emplace_back("iterations", cfg.eta_iter * tau);
  if (cfg.eta_final) h.emplace_back("final", *cfg.eta_final * tau);
  return h;
}

struct Trajectory {
  std::vector<double> times;
  std::vector<double> residuals;
  std::vector<double> solve_term_norms;
  std::vector<double> recursion_term_norms;
  std::vector<int> phases;      // per-row phase id: 0 startup, 1 iter, 2 final
  std::vector<int> phase_marks; // row indices where the phase switched
  std::vector<std::pair<double, DenseMatrix>> snapshots;
  std::vector<double> step_seconds;
  DenseMatrix final_state;
  double wall_time_per_step = 0.0;  // median seconds
  bool diverged = false;

  double final_residual() const { return residuals.back(); }
  double min_residual() const {
    return *std::min_element(residuals.begin(), residuals.end());
  }
  size_t steps() const { return times.size() - 1; }
};

constexpr double kDivergenceThreshold = 1e12;

struct DivergenceError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

namespace detail {

inline double median(std::vector<double> v) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  const size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

inline void log_row(Trajectory& traj, double t, double residual,
                    double solve_norm, double rec_norm, int phase) {
  traj.times.push_back(t);
  traj.residuals.push_back(residual);
  traj.solve_term_norms.push_back(solve_norm);
  traj.recursion_term_norms.push_back(rec_norm);
  traj.phases.push_back(phase);
}

inline void check_divergence(double residual, double t) {
  if (!std::isfinite(residual) || residual > kDivergenceThreshold)
    throw DivergenceError("residual " + std::to_string(residual) +
                          " at t = " + std::to_string(t));
}

}  // namespace detail

// Euler start-up: X_{k+1} = X_k + tau * unvec(P \ q) with eta_start.
// Returns the solution history newest-first and logs into traj.
inline std::vector<DenseMatrix> startup(const ProblemAdapter& adapter,
                                        const MatrixFlow& flow,
                                        const PhaseConfig& cfg, double tau,
                                        double t0, Trajectory& traj) {
  const Eigen::Index n = adapter.dim();
  DenseMatrix x = adapter.enforce_structure(adapter.initial_guess(flow.value(t0)));
  std::vector<DenseMatrix> history{x};
  detail::log_row(traj, t0, adapter.residual(flow.value(t0), x), 0.0, x.norm(),
                  0);

  DenseMatrix p;
  DenseVector q;
  for (int k = 0; k < cfg.startup_steps; ++k) {
    const auto tick = std::chrono::steady_clock::now();
    const double t = t0 + k * tau;
    adapter.build_system(x, t, cfg.eta_start, flow, p, q);
    const SolveReport rep = solve(p, q);
    const DenseMatrix xdot = unvec(rep.solution, n, n);
    x = adapter.enforce_structure(x + tau * xdot);
    const double t_next = t0 + (k + 1) * tau;
    const double res = adapter.residual(flow.value(t_next), x);
    detail::log_row(traj, t_next, res, tau * xdot.norm(), history.front().norm(),
                    0);
    detail::check_divergence(res, t_next);
    history.insert(history.begin(), x);
    traj.step_seconds.push_back(
        std::chrono::duration<double>(std::chrono::steady_clock::now() - tick)
            .count());
  }
  return history;
}

// Main j_s iteration phase (and optional final phase): per step, one linear
// solve plus the look-ahead recursion. History is newest-first and at least
// j+s-1 long.
inline void iterate(const ProblemAdapter& adapter, const MatrixFlow& flow,
                    const PhaseConfig& cfg, const FDFormula& formula,
                    double tau, double t_end, std::vector<DenseMatrix> history,
                    double t_current, Trajectory& traj,
                    const std::vector<double>& snapshot_times = {}) {
  if (static_cast<int>(history.size()) < formula.history_needed())
    throw std::invalid_argument("iterate: insufficient history");
  history.resize(formula.history_needed());
  std::deque<DenseMatrix> hist(history.begin(), history.end());

  const Eigen::Index n = adapter.dim();
  const double wf = formula.future_weight_d();
  const double tsc = formula.tau_scale_d();

  const long total = std::lround((t_end - t_current) / tau);
  size_t next_snapshot = 0;
  DenseMatrix p;
  DenseVector q;
  std::vector<DenseMatrix> hist_vec;
  for (long k = 0; k < total; ++k) {
    const auto tick = std::chrono::steady_clock::now();
    const double t = t_current + k * tau;
    const bool final_phase =
        cfg.eta_final && cfg.final_switch_time && t >= *cfg.final_switch_time;
    const double eta = final_phase ? *cfg.eta_final : cfg.eta_iter;
    const int phase = final_phase ? 2 : 1;
    if (traj.phases.back() != phase)
      traj.phase_marks.push_back(static_cast<int>(traj.times.size()) - 1);

    adapter.build_system(hist.front(), t, eta, flow, p, q);
    const SolveReport rep = solve(p, q);
    const DenseMatrix solve_term = (tsc * tau / wf) * unvec(rep.solution, n, n);

    hist_vec.assign(hist.begin(), hist.end());
    const DenseMatrix rec_term = recursion_term(formula, hist_vec);
    DenseMatrix x_next = adapter.enforce_structure(solve_term + rec_term);

    const double t_next = t_current + (k + 1) * tau;
    const double res = adapter.residual(flow.value(t_next), x_next);
    detail::log_row(traj, t_next, res, solve_term.norm(), rec_term.norm(),
                    phase);
    detail::check_divergence(res, t_next);

    while (next_snapshot < snapshot_times.size() &&
           t_next >= snapshot_times[next_snapshot] - 0.5 * tau) {
      traj.snapshots.emplace_back(t_next, x_next);
      ++next_snapshot;
    }

    hist.push_front(std::move(x_next));
    hist.pop_back();
    traj.step_seconds.push_back(
        std::chrono::duration<double>(std::chrono::steady_clock::now() - tick)
            .count());
  }
  traj.final_state = hist.front();
}

struct RunOptions {
  double t0 = 10.0;
  double t_end = 3610.0;
  double tau = 0.02;
  std::vector<double> snapshot_times;
};

// Full AZNN run: Euler start-up feeding the j_s iteration phase. The phase
// switch index in the trajectory equals cfg.startup_steps.
inline Trajectory run_aznn(const ProblemAdapter& adapter,
                           const MatrixFlow& flow, const PhaseConfig& cfg,
                           const FDFormula& formula, const RunOptions& opt) {
  cfg.validate(formula);
  Trajectory traj;
  try {
    auto history = startup(adapter, flow, cfg, opt.tau, opt.t0, traj);
    const double t_switch = opt.t0 + cfg.startup_steps * opt.tau;
    iterate(adapter, flow, cfg, formula, opt.tau, opt.t_end,
            std::move(history), t_switch, traj, opt.snapshot_times);
  } catch (const DivergenceError&) {
    traj.diverged = true;
    traj.final_state = DenseMatrix();
  }
  traj.wall_time_per_step = detail::median(traj.step_seconds);
  return traj;
}

// Basic non-adapted ZNN baseline: one shared eta and the minimal start-up.
inline PhaseConfig baseline_config(double eta, const FDFormula& formula) {
  PhaseConfig cfg;
  cfg.eta_start = eta;
  cfg.eta_iter = eta;
  cfg.startup_steps = formula.points() - 1;
  return cfg;
}

// --- Trajectory export ------------------------------------------------------

inline void write_csv(std::ostream& os, const Trajectory& traj) {
  os << "t,residual,solve_term_norm,recursion_term_norm,phase\n";
  char buf[160];
  for (size_t i = 0; i < traj.times.size(); ++i) {
    std::snprintf(buf, sizeof(buf), "%.17g,%.17g,%.17g,%.17g,%d\n",
                  traj.times[i], traj.residuals[i], traj.solve_term_norms[i],
                  traj.recursion_term_norms[i], traj.phases[i]);
    os << buf;
  }
}

}  // namespace aznn
