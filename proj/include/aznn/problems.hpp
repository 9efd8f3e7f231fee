#pragma once

// ProblemAdapter implementations: time-varying matrix square root and
// time-varying matrix symmetrizer. Each supplies the error map, the
// Kronecker system P, q, the initial guess, the residual metric, and the
// optional structure enforcement the engine applies after every step.

#include <cmath>
#include <memory>
#include <random>
#include <stdexcept>

#include "aznn/flows.hpp"
#include "aznn/linalg.hpp"

namespace aznn {

class ProblemAdapter {
 public:
  virtual ~ProblemAdapter() = default;
  virtual Eigen::Index dim() const = 0;
  virtual std::string name() const = 0;
  virtual DenseMatrix initial_guess(const DenseMatrix& a0) const = 0;
  // P (n^2 x n^2) and q (n^2) of the discretized error dynamic at (X, t).
  virtual void build_system(const DenseMatrix& x, double t, double eta,
                            const MatrixFlow& flow, DenseMatrix& p,
                            DenseVector& q) const = 0;
  virtual double residual(const DenseMatrix& a, const DenseMatrix& x) const = 0;
  // Projection applied after each step; identity by default.
  virtual DenseMatrix enforce_structure(DenseMatrix x) const { return x; }
};

// --- Square root: E(t) = A(t) - X(t)*X(t) ------------------------------------
//
// P = X^T (x) I + I (x) X,  q = vec(Adot) + eta*vec(A) - eta*(X^T (x) I)vec(X)

inline void sqrt_build_system(const DenseMatrix& x, double t, double eta,
                              const MatrixFlow& flow, DenseMatrix& p,
                              DenseVector& q) {
  const Eigen::Index n = x.rows();
  if (x.cols() != n) throw std::invalid_argument("sqrt system: X must be square");
  const DenseMatrix eye = DenseMatrix::Identity(n, n);
  p = kron(x.transpose(), eye) + kron(eye, x);
  // eta*vec(A) - eta*(X^T (x) I)vec(X) == eta*vec(A - X*X)
  q = vec(flow.derivative(t)) + eta * vec((flow.value(t) - x * x).eval());
}

// Entry-wise principal square root of A0, the cheap startup seed.
inline DenseMatrix sqrt_initial_guess(const DenseMatrix& a0) {
  return a0.unaryExpr([](const Complex& z) { return std::sqrt(z); });
}

class SquareRootAdapter final : public ProblemAdapter {
 public:
  explicit SquareRootAdapter(Eigen::Index n) : n_(n) {}
  Eigen::Index dim() const override { return n_; }
  std::string name() const override { return "sqrt"; }
  DenseMatrix initial_guess(const DenseMatrix& a0) const override {
    return sqrt_initial_guess(a0);
  }
  void build_system(const DenseMatrix& x, double t, double eta,
                    const MatrixFlow& flow, DenseMatrix& p,
                    DenseVector& q) const override {
    sqrt_build_system(x, t, eta, flow, p, q);
  }
  double residual(const DenseMatrix& a, const DenseMatrix& x) const override {
    return sqrt_residual(a, x);
  }

 private:
  Eigen::Index n_;
};

// --- Symmetrizer: E(t) = X(t)*A(t) - A(t)^T*X(t) ------------------------------
//
// P = A^T (x) I - I (x) A^T,  q = vec(Adot^T X - X Adot) - eta*vec(X A - A^T X)
// P has nullity >= n (Frobenius), so solves report the minimum-norm
// least-squares solution.

inline void symm_build_system(const DenseMatrix& x, double t, double eta,
                              const MatrixFlow& flow, DenseMatrix& p,
                              DenseVector& q) {
  const Eigen::Index n = x.rows();
  if (x.cols() != n) throw std::invalid_argument("symm system: X must be square");
  const DenseMatrix a = flow.value(t);
  const DenseMatrix adot = flow.derivative(t);
  const DenseMatrix at = a.transpose();
  const DenseMatrix eye = DenseMatrix::Identity(n, n);
  p = kron(at, eye) - kron(eye, at);
  q = vec((adot.transpose() * x - x * adot).eval()) -
      eta * vec((x * a - at * x).eval());
}

// Symmetric, well-conditioned start: I + eps*(R + R^T)/2 with seeded R.
inline DenseMatrix symm_initial_guess(Eigen::Index n, uint64_t seed,
                                      double eps = 1e-2) {
  std::mt19937_64 rng(seed * 0x9e3779b97f4a7c15ULL + 97);
  const DenseMatrix r = detail::seeded_gaussian(n, n, rng, false);
  return DenseMatrix::Identity(n, n) + eps * symmetrize(r);
}

class SymmetrizerAdapter final : public ProblemAdapter {
 public:
  SymmetrizerAdapter(Eigen::Index n, uint64_t seed, bool enforce_symmetry = true)
      : n_(n), seed_(seed), enforce_(enforce_symmetry) {}
  Eigen::Index dim() const override { return n_; }
  std::string name() const override { return "symmetrizer"; }
  DenseMatrix initial_guess(const DenseMatrix& /*a0*/) const override {
    return symm_initial_guess(n_, seed_);
  }
  void build_system(const DenseMatrix& x, double t, double eta,
                    const MatrixFlow& flow, DenseMatrix& p,
                    DenseVector& q) const override {
    symm_build_system(x, t, eta, flow, p, q);
  }
  double residual(const DenseMatrix& a, const DenseMatrix& x) const override {
    return symm_residual(a, x);
  }
  DenseMatrix enforce_structure(DenseMatrix x) const override {
    return enforce_ ? symmetrize(x) : x;
  }

 private:
  Eigen::Index n_;
  uint64_t seed_;
  bool enforce_;
};

}  // namespace aznn
