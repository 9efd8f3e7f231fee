#pragma once

// Time-parameterized matrix flows A(t) with analytic derivatives: trial
// flows for the time-varying experiments, the static-matrix homotopy flow,
// the gallery of hard static matrices, and seeded unitary similarities.

#include <cmath>
#include <functional>
#include <random>
#include <stdexcept>
#include <string>
#include <utility>

#include "aznn/linalg.hpp"

namespace aznn {

struct MatrixFlow {
  Eigen::Index dim = 0;
  std::function<DenseMatrix(double)> value;
  std::function<DenseMatrix(double)> derivative;
  std::string descriptor;
};

namespace detail {

inline DenseMatrix seeded_gaussian(Eigen::Index rows, Eigen::Index cols,
                                   std::mt19937_64& rng, bool complex_entries) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  DenseMatrix m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j) {
      const double re = gauss(rng);
      const double im = complex_entries ? gauss(rng) : 0.0;
      m(i, j) = Complex(re, im);
    }
  return m;
}

}  // namespace detail

// --- Trial flows ------------------------------------------------------------

// Known square root W(t) = C0 + C1*sin(w1 t) + C2*cos(w2 t) + gamma*t*I of
// trial_flow_squared; exposed for oracle checks. The shipped coefficients
// are diagonal with gentle trigonometric parts, which keeps the entry-wise
// square root startup seed accurate enough to survive the large-eta Euler
// phase; off_scale > 0 adds a dense constant part for experiments that
// need a rougher startup seed. The linear drift gamma*t*I grows the flow
// norm over hour-long runs while contributing no curvature.
inline MatrixFlow trial_flow_squared_root(Eigen::Index n, uint64_t seed,
                                          double gamma = 0.3,
                                          double off_scale = 0.0) {
  if (n < 2) throw std::invalid_argument("trial_flow_squared: n >= 2");
  std::mt19937_64 rng(seed * 0x9e3779b97f4a7c15ULL + 17);
  std::uniform_real_distribution<double> unif(0.0, 1.0);

  DenseMatrix c0 = DenseMatrix::Zero(n, n);
  DenseMatrix c1 = DenseMatrix::Zero(n, n);
  DenseMatrix c2 = DenseMatrix::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    c0(i, i) = 1.5 + unif(rng);
    c1(i, i) = 0.02 * (2.0 * unif(rng) - 1.0);
    c2(i, i) = 0.02 * (2.0 * unif(rng) - 1.0);
  }
  if (off_scale > 0.0)
    c0 += off_scale * detail::seeded_gaussian(n, n, rng, false);
  const double w1 = 0.04 + 0.02 * unif(rng);
  const double w2 = 0.05 + 0.02 * unif(rng);

  MatrixFlow flow;
  flow.dim = n;
  flow.value = [=](double t) -> DenseMatrix {
    return c0 + std::sin(w1 * t) * c1 + std::cos(w2 * t) * c2 +
           gamma * t * DenseMatrix::Identity(n, n);
  };
  flow.derivative = [=](double t) -> DenseMatrix {
    return w1 * std::cos(w1 * t) * c1 - w2 * std::sin(w2 * t) * c2 +
           gamma * DenseMatrix::Identity(n, n);
  };
  flow.descriptor = "trial_flow_squared_root(n=" + std::to_string(n) +
                    ",seed=" + std::to_string(seed) + ")";
  return flow;
}

// A(t) = W(t)*W(t), so a square root exists at every t by construction.
inline MatrixFlow trial_flow_squared(Eigen::Index n, uint64_t seed,
                                     double gamma = 0.3,
                                     double off_scale = 0.0) {
  const MatrixFlow w = trial_flow_squared_root(n, seed, gamma, off_scale);
  MatrixFlow flow;
  flow.dim = n;
  flow.value = [w](double t) -> DenseMatrix {
    const DenseMatrix wt = w.value(t);
    return wt * wt;
  };
  flow.derivative = [w](double t) -> DenseMatrix {
    const DenseMatrix wt = w.value(t);
    const DenseMatrix wd = w.derivative(t);
    return wd * wt + wt * wd;
  };
  flow.descriptor = "trial_flow_squared(n=" + std::to_string(n) +
                    ",seed=" + std::to_string(seed) +
                    ",gamma=" + std::to_string(gamma) +
                    ",off=" + std::to_string(off_scale) + ")";
  return flow;
}

// Smooth bounded trigonometric flow for the symmetrizer experiments.
inline MatrixFlow trial_flow_general(Eigen::Index n, uint64_t seed,
                                     bool complex_flag = false) {
  if (n < 2) throw std::invalid_argument("trial_flow_general: n >= 2");
  std::mt19937_64 rng(seed * 0x9e3779b97f4a7c15ULL + 31);
  std::uniform_real_distribution<double> unif(0.0, 1.0);

  DenseMatrix b0 = detail::seeded_gaussian(n, n, rng, complex_flag);
  for (Eigen::Index i = 0; i < n; ++i) b0(i, i) += Complex(3.0 + unif(rng), 0);
  const DenseMatrix b1 =
      0.05 * detail::seeded_gaussian(n, n, rng, complex_flag);
  const DenseMatrix b2 =
      0.05 * detail::seeded_gaussian(n, n, rng, complex_flag);
  const double w1 = 0.01 + 0.01 * unif(rng);
  const double w2 = 0.015 + 0.01 * unif(rng);

  MatrixFlow flow;
  flow.dim = n;
  flow.value = [=](double t) -> DenseMatrix {
    return b0 + std::sin(w1 * t) * b1 + std::cos(w2 * t) * b2;
  };
  flow.derivative = [=](double t) -> DenseMatrix {
    return w1 * std::cos(w1 * t) * b1 - w2 * std::sin(w2 * t) * b2;
  };
  flow.descriptor = "trial_flow_general(n=" + std::to_string(n) +
                    ",seed=" + std::to_string(seed) +
                    (complex_flag ? ",complex)" : ",real)");
  return flow;
}

// --- Homotopy flow ----------------------------------------------------------

struct HomotopyParams {
  DenseMatrix target;        // A
  DenseMatrix perturbation;  // BB
  double approach_exponent = 1.1;
  double t0 = 0.985;
  double tau = 0.001;
};

inline void validate(const HomotopyParams& p) {
  if (p.t0 <= 0.0 || p.t0 >= 1.0)
    throw std::invalid_argument("homotopy: need 0 < t0 < 1");
  if (p.approach_exponent <= 0.0)
    throw std::invalid_argument("homotopy: approach exponent must be > 0");
  const double steps = (1.0 - p.t0) / p.tau;
  if (std::abs(steps - std::round(steps)) > 1e-9 * steps)
    throw std::invalid_argument("homotopy: (1 - t0)/tau must be an integer");
  if (p.perturbation.norm() == 0.0)
    throw std::invalid_argument("homotopy: BB must be nonzero");
}

// A(t) = t*A + (1-t)^a*BB; at t = 1 exactly, A(1) = A.
inline MatrixFlow homotopy_flow(const HomotopyParams& p) {
  validate(p);
  const DenseMatrix a = p.target;
  const DenseMatrix bb = p.perturbation;
  const double exp_a = p.approach_exponent;
  MatrixFlow flow;
  flow.dim = a.rows();
  flow.value = [a, bb, exp_a](double t) -> DenseMatrix {
    if (t > 1.0) throw std::invalid_argument("homotopy flow: t > 1");
    if (t == 1.0) return a;
    return t * a + std::pow(1.0 - t, exp_a) * bb;
  };
  flow.derivative = [a, bb, exp_a](double t) -> DenseMatrix {
    if (t > 1.0) throw std::invalid_argument("homotopy flow: t > 1");
    if (t == 1.0 && exp_a > 1.0) return a;
    return a - exp_a * std::pow(1.0 - t, exp_a - 1.0) * bb;
  };
  flow.descriptor = "homotopy(a=" + std::to_string(exp_a) +
                    ",t0=" + std::to_string(p.t0) + ")";
  return flow;
}

// --- Gallery ----------------------------------------------------------------

enum class GalleryKind { kahan, frank, derog_ut, two_by_two };

inline GalleryKind gallery_kind_by_name(const std::string& name) {
  if (name == "kahan") return GalleryKind::kahan;
  if (name == "frank") return GalleryKind::frank;
  if (name == "derog_ut") return GalleryKind::derog_ut;
  if (name == "two_by_two") return GalleryKind::two_by_two;
  throw std::invalid_argument("unknown gallery matrix '" + name + "'");
}

inline DenseMatrix gallery(GalleryKind kind, Eigen::Index n,
                           double alpha = 0.0) {
  switch (kind) {
    case GalleryKind::kahan: {
      if (n < 2) throw std::invalid_argument("kahan: n >= 2");
      const double theta = 1.2;
      const double sn = std::sin(theta), cs = std::cos(theta);
      DenseMatrix m = DenseMatrix::Zero(n, n);
      for (Eigen::Index i = 0; i < n; ++i) {
        const double si = std::pow(sn, static_cast<double>(i));
        m(i, i) = si;
        for (Eigen::Index j = i + 1; j < n; ++j) m(i, j) = -si * cs;
      }
      return m;
    }
    case GalleryKind::frank: {
      if (n < 2) throw std::invalid_argument("frank: n >= 2");
      DenseMatrix m = DenseMatrix::Zero(n, n);
      for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = (i > 0 ? i - 1 : 0); j < n; ++j)
          m(i, j) = static_cast<double>(n - std::max(i, j));
      return m;
    }
    case GalleryKind::derog_ut: {
      if (n < 6) throw std::invalid_argument("derog_ut: n >= 6");
      // repeated Jordan blocks with shared eigenvalues => derogatory
      DenseMatrix m = DenseMatrix::Zero(n, n);
      const double lambdas[3] = {2.0, 3.0, 1.0};
      Eigen::Index pos = 0;
      int block = 0;
      while (pos < n) {
        const Eigen::Index len = std::min<Eigen::Index>(
            n - pos, 2 + static_cast<Eigen::Index>(block % 3));
        const double lam = lambdas[(block / 2) % 3];
        for (Eigen::Index i = 0; i < len; ++i) {
          m(pos + i, pos + i) = lam;
          if (i + 1 < len) m(pos + i, pos + i + 1) = 1.0;
        }
        pos += len;
        ++block;
      }
      std::mt19937_64 rng(1234);
      std::normal_distribution<double> gauss(0.0, 1.0);
      for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = i + 2; j < n; ++j) m(i, j) += 0.5 * gauss(rng);
      return (281.0 / norm2(m)) * m;
    }
    case GalleryKind::two_by_two: {
      DenseMatrix m = DenseMatrix::Zero(2, 2);
      m(0, 1) = 1.0;
      m(1, 1) = alpha;
      return m;
    }
  }
  throw std::logic_error("gallery: unknown kind");
}

// Q^* A Q with a seeded Haar-like unitary Q (QR of complex Gaussians with
// positive R diagonal).
inline DenseMatrix random_unitary_similarity(const DenseMatrix& a,
                                             uint64_t seed) {
  if (a.rows() != a.cols())
    throw std::invalid_argument("random_unitary_similarity: square A");
  std::mt19937_64 rng(seed * 0x9e3779b97f4a7c15ULL + 53);
  const DenseMatrix g = detail::seeded_gaussian(a.rows(), a.rows(), rng, true);
  Eigen::HouseholderQR<DenseMatrix> qr(g);
  DenseMatrix q = qr.householderQ();
  const DenseMatrix r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    const Complex d = r(i, i);
    if (std::abs(d) > 0.0) q.col(i) *= d / std::abs(d);
  }
  return q.adjoint() * a * q;
}

// Validator: analytic derivative vs central difference on sampled points.
inline double max_derivative_mismatch(const MatrixFlow& flow, double t_lo,
                                      double t_hi, int samples = 20,
                                      double step = 1e-6) {
  double worst = 0.0;
  for (int i = 0; i < samples; ++i) {
    const double t =
        t_lo + (t_hi - t_lo) * (static_cast<double>(i) + 0.5) / samples;
    const DenseMatrix fd =
        (flow.value(t + step) - flow.value(t - step)) / (2.0 * step);
    const DenseMatrix an = flow.derivative(t);
    worst = std::max(worst, (fd - an).norm() / std::max(1.0, an.norm()));
  }
  return worst;
}

}  // namespace aznn
