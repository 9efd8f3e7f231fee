#pragma once

// Euler-only AZNN along the homotopy flow A(t) = t*A + (1-t)^a*BB from t0 to
// exactly t = 1, producing a certified symmetrizer of a fixed matrix A. Time
// stepping is by integer index against an exact-decimal grid so the run
// lands on t = 1 with no accumulation error.

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "aznn/flows.hpp"
#include "aznn/linalg.hpp"
#include "aznn/problems.hpp"

namespace aznn {

struct StaticParams {
  double eta = 290.0;
  double approach_exponent = 1.1;
  double t0 = 0.985;
  double tau = 0.001;
  double bb_scale = 0.01;
  // extra decay steps at t = 1, where the flow is constant A; shrinks the
  // path-tracking floor by (1 - h) per step without moving the landing point
  long polish_steps = 2;
  uint64_t seed = 7;
  std::string preset_name = "custom";
};

struct SymmetrizerCertificate {
  DenseMatrix symmetrizer;
  double rel_error = 0.0;
  double cond2 = 0.0;
  Eigen::Index rank = 0;
  long steps_taken = 0;
  double h = 0.0;
  std::string preset;
  bool full_rank = false;
};

// Largest tau <= tau_hint such that (1 - t0)/tau is an exact integer, with
// tau restricted to the decimal grid of tau_hint (no more decimal digits).
inline double synchronize(double t0, double tau_hint) {
  if (t0 <= 0.0 || t0 >= 1.0 || tau_hint <= 0.0)
    throw std::invalid_argument("synchronize: need 0 < t0 < 1, tau_hint > 0");
  // finest decimal grid needed to represent both tau_hint and 1 - t0 exactly
  auto decimal_digits = [](double v) {
    int d = 0;
    for (; d <= 15; ++d) {
      const double scaled = v * std::pow(10.0, d);
      if (std::abs(scaled - std::round(scaled)) <
              1e-9 * std::max(1.0, scaled) &&
          std::round(scaled) >= 1.0)
        break;
    }
    return d;
  };
  const int digits = std::max(decimal_digits(tau_hint),
                              decimal_digits(1.0 - t0));
  const double scale = std::pow(10.0, digits);
  const long long hint_units = std::llround(tau_hint * scale);
  const long long r_units = std::llround((1.0 - t0) * scale);
  if (r_units < 1)
    throw std::invalid_argument("synchronize: 1 - t0 below the decimal grid");
  for (long long u = std::min(hint_units, r_units); u >= 1; --u)
    if (r_units % u == 0) return static_cast<double>(u) / scale;
  return 1.0 / scale;
}

// Seeded complex Gaussian perturbation matrix BB, scaled by bb_scale.
inline DenseMatrix make_perturbation(Eigen::Index n, uint64_t seed,
                                     double bb_scale) {
  std::mt19937_64 rng(seed * 0x9e3779b97f4a7c15ULL + 211);
  return bb_scale * detail::seeded_gaussian(n, n, rng, true);
}

// Euler AZNN from t0 to t = 1 with the symmetrizer adapter; returns the
// certificate on S(1). Singular output is returned but flagged.
inline SymmetrizerCertificate solve_static(const DenseMatrix& a,
                                           const StaticParams& p) {
  if (a.rows() != a.cols())
    throw std::invalid_argument("solve_static: A must be square");
  const Eigen::Index n = a.rows();
  const double tau = synchronize(p.t0, p.tau);
  if (std::abs(tau - p.tau) > 1e-15)
    throw std::invalid_argument(
        "solve_static: params not synchronized (use synchronize())");
  const long steps = std::lround((1.0 - p.t0) / tau);

  HomotopyParams hp;
  hp.target = a;
  hp.perturbation = make_perturbation(n, p.seed, p.bb_scale);
  hp.approach_exponent = p.approach_exponent;
  hp.t0 = p.t0;
  hp.tau = tau;
  const MatrixFlow flow = homotopy_flow(hp);

  // full-strength random symmetric start: a near-identity guess projects
  // onto a nearly singular member of the symmetrizer subspace for some A
  std::mt19937_64 guess_rng(p.seed * 0x9e3779b97f4a7c15ULL + 977);
  DenseMatrix x = symmetrize(detail::seeded_gaussian(n, n, guess_rng, true));
  DenseMatrix sys;
  DenseVector q;
  for (long k = 0; k < steps + p.polish_steps; ++k) {
    const double t = std::min(p.t0 + static_cast<double>(k) * tau, 1.0);
    symm_build_system(x, t, p.eta, flow, sys, q);
    const SolveReport rep = solve(sys, q);
    x = symmetrize(x + tau * unvec(rep.solution, n, n));
    if (!all_finite(x))
      throw std::runtime_error("solve_static: diverged at step " +
                               std::to_string(k));
  }

  SymmetrizerCertificate cert;
  cert.symmetrizer = x;
  cert.rel_error = symm_residual(a, x);
  const ConditionReport cr = condition_and_rank(x);
  cert.cond2 = cr.cond2;
  cert.rank = cr.rank;
  cert.steps_taken = steps;
  cert.h = p.eta * tau;
  cert.preset = p.preset_name;
  cert.full_rank = (cert.rank == n);
  return cert;
}

// Parameter presets. "small" uses the larger perturbation and sampling gap
// with t0 = 0.985; "large" is the countervalent rescaling (eta and approach
// exponent up ~10x, perturbation /100, tau /10, t0 = 0.9985). Defaults are
// shipped per gallery matrix and recorded in the certificate: the
// perturbation size trades the final residual against the numerical rank of
// the landed subspace member, and the 2x2 family takes the dead-beat decay
// h = 0.95 where the ill-conditioned 35x35 runs keep h = 0.84 so the final
// iterate retains full numerical rank.
inline StaticParams small_preset(uint64_t seed = 3) {
  StaticParams p;
  p.eta = 950.0;  // h = 0.95
  p.approach_exponent = 1.1;
  p.t0 = 0.985;
  p.tau = 0.001;
  p.bb_scale = 5e-6;
  p.polish_steps = 0;
  p.seed = seed;
  p.preset_name = "small";
  return p;
}

inline StaticParams large_preset(uint64_t seed = 3) {
  StaticParams p;
  p.eta = 8700.0;  // h = 0.87
  p.approach_exponent = 11.0;
  p.t0 = 0.9985;
  p.tau = 0.0001;
  p.bb_scale = 5e-8;
  p.polish_steps = 0;
  p.seed = seed;
  p.preset_name = "large";
  return p;
}

inline StaticParams small_preset(GalleryKind kind, uint64_t seed = 3) {
  StaticParams p = small_preset(seed);
  if (kind == GalleryKind::two_by_two) p.polish_steps = 3;
  return p;
}

inline StaticParams large_preset(GalleryKind kind, uint64_t seed = 3) {
  StaticParams p = large_preset(seed);
  if (kind == GalleryKind::two_by_two) {
    p.eta = 9500.0;  // h = 0.95, dead-beat: the 2x2 runs hit machine precision
    p.polish_steps = 3;
  }
  return p;
}

inline StaticParams preset_by_name(const std::string& name, uint64_t seed = 3) {
  if (name == "small") return small_preset(seed);
  if (name == "large") return large_preset(seed);
  throw std::invalid_argument("unknown preset '" + name + "'");
}

inline StaticParams preset_by_name(const std::string& name, GalleryKind kind,
                                   uint64_t seed = 3) {
  if (name == "small") return small_preset(kind, seed);
  if (name == "large") return large_preset(kind, seed);
  throw std::invalid_argument("unknown preset '" + name + "'");
}

// --- Small-n oracle -----------------------------------------------------------
//
// The intuitive static method: the homogeneous linear system in the packed
// entries of symmetric S with S*A = (S*A)^T. Returns an orthonormal basis
// (Frobenius geometry) of the symmetrizer subspace; dimension >= n.

inline std::vector<DenseMatrix> nullspace_oracle(const DenseMatrix& a,
                                                 double rank_tol = 1e-10) {
  const Eigen::Index n = a.rows();
  if (n != a.cols() || n > 8)
    throw std::invalid_argument("nullspace_oracle: square A with n <= 8");
  const Eigen::Index unknowns = n * (n + 1) / 2;
  const Eigen::Index equations = n * (n - 1) / 2;

  // unpack helper: unknown u -> symmetric basis matrix E_pq + E_qp
  auto unpack_unit = [&](Eigen::Index u) {
    DenseMatrix s = DenseMatrix::Zero(n, n);
    Eigen::Index idx = 0;
    for (Eigen::Index p = 0; p < n; ++p)
      for (Eigen::Index r = p; r < n; ++r, ++idx)
        if (idx == u) {
          s(p, r) = 1.0;
          s(r, p) = 1.0;
        }
    return s;
  };

  DenseMatrix m(std::max<Eigen::Index>(equations, 1), unknowns);
  m.setZero();
  for (Eigen::Index u = 0; u < unknowns; ++u) {
    const DenseMatrix s = unpack_unit(u);
    const DenseMatrix e = s * a - a.transpose() * s;  // antisymmetric
    Eigen::Index row = 0;
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index jj = i + 1; jj < n; ++jj, ++row) m(row, u) = e(i, jj);
  }

  Eigen::JacobiSVD<DenseMatrix> svd(m, Eigen::ComputeFullV);
  const auto& sv = svd.singularValues();
  const double cut = (sv.size() && sv(0) > 0.0) ? rank_tol * sv(0) : 0.0;
  Eigen::Index rank = 0;
  for (Eigen::Index i = 0; i < sv.size(); ++i)
    if (sv(i) > cut) ++rank;

  std::vector<DenseMatrix> raw;
  for (Eigen::Index c = rank; c < unknowns; ++c) {
    DenseMatrix s = DenseMatrix::Zero(n, n);
    Eigen::Index idx = 0;
    for (Eigen::Index p = 0; p < n; ++p)
      for (Eigen::Index r = p; r < n; ++r, ++idx) {
        s(p, r) = svd.matrixV()(idx, c);
        s(r, p) = svd.matrixV()(idx, c);
      }
    raw.push_back(s);
  }

  // Gram-Schmidt in the Frobenius inner product (the packed coordinates are
  // not isometric to matrix space, so re-orthonormalize)
  std::vector<DenseMatrix> basis;
  for (auto& s : raw) {
    for (const auto& b : basis) {
      const Complex coeff = (b.conjugate().cwiseProduct(s)).sum();
      s -= coeff * b;
    }
    const double nrm = s.norm();
    if (nrm > 1e-12) basis.push_back(s / nrm);
  }
  return basis;
}

// Fraction of ||S||_F retained when S is projected onto span(basis).
inline double projection_retained(const DenseMatrix& s,
                                  const std::vector<DenseMatrix>& basis) {
  double proj_sq = 0.0;
  for (const auto& b : basis) {
    const Complex coeff = (b.conjugate().cwiseProduct(s)).sum();
    proj_sq += std::norm(coeff);
  }
  const double total = s.squaredNorm();
  return total > 0.0 ? std::sqrt(proj_sq / total) : 0.0;
}

}  // namespace aznn
