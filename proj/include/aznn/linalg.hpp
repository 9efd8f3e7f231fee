#pragma once

// Dense complex matrix kernel: Kronecker/vec identities, rank-aware linear
// solves and the residual and conditioning metrics used by every other
// module. Everything here is a pure function over Eigen dense matrices.

#include <Eigen/Dense>

#include <cmath>
#include <complex>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace aznn {

using Complex = std::complex<double>;
using DenseMatrix = Eigen::MatrixXcd;
using DenseVector = Eigen::VectorXcd;

constexpr double kRankTolDefault = 1e-12;

inline bool all_finite(const DenseMatrix& m) {
  return m.allFinite();
}

inline bool is_symmetric(const DenseMatrix& m, double tol = 1e-13) {
  if (m.rows() != m.cols()) return false;
  const double scale = std::max(1.0, m.norm());
  return (m - m.transpose()).norm() <= tol * scale;  // plain transpose
}

inline DenseMatrix symmetrize(const DenseMatrix& m) {
  return 0.5 * (m + m.transpose().eval());
}

// --- Kronecker / vectorization ---------------------------------------------

inline DenseMatrix kron(const DenseMatrix& a, const DenseMatrix& b) {
  const Eigen::Index ra = a.rows(), ca = a.cols();
  const Eigen::Index rb = b.rows(), cb = b.cols();
  if (ra * rb <= 0 || ca * cb <= 0 ||
      ra > std::numeric_limits<Eigen::Index>::max() / rb)
    throw std::overflow_error("kron: dimension overflow");
  DenseMatrix out(ra * rb, ca * cb);
  for (Eigen::Index i = 0; i < ra; ++i)
    for (Eigen::Index j = 0; j < ca; ++j)
      out.block(i * rb, j * cb, rb, cb) = a(i, j) * b;
  return out;
}

// Column-stacking order, matching the X(:) convention.
inline DenseVector vec(const DenseMatrix& x) {
  return Eigen::Map<const DenseVector>(x.data(), x.size());
}

inline DenseMatrix unvec(const DenseVector& v, Eigen::Index rows,
                         Eigen::Index cols) {
  if (v.size() != rows * cols)
    throw std::invalid_argument("unvec: length mismatch");
  return Eigen::Map<const DenseMatrix>(v.data(), rows, cols);
}

// --- Linear solves ----------------------------------------------------------

enum class SolveMethod { direct, least_squares_pseudoinverse };

struct SolveReport {
  DenseVector solution;
  SolveMethod method = SolveMethod::direct;
  Eigen::Index rank_estimate = 0;
  double residual_norm = 0.0;
};

// Solves P x = q. Full-rank systems (column pivots above rank_tol relative
// to the largest) get the direct solution; rank-deficient ones fall back to
// the minimum-norm least-squares solution.
inline SolveReport solve(const DenseMatrix& p, const DenseVector& q,
                         double rank_tol = kRankTolDefault) {
  if (p.rows() != p.cols() || p.rows() != q.size())
    throw std::invalid_argument("solve: dimension mismatch");
  if (!all_finite(p) || !q.allFinite())
    throw std::invalid_argument("solve: non-finite input");

  Eigen::CompleteOrthogonalDecomposition<DenseMatrix> cod(p.rows(), p.cols());
  cod.setThreshold(rank_tol);
  cod.compute(p);

  SolveReport rep;
  rep.rank_estimate = cod.rank();
  rep.method = (rep.rank_estimate == p.rows())
                   ? SolveMethod::direct
                   : SolveMethod::least_squares_pseudoinverse;
  rep.solution = cod.solve(q);
  rep.residual_norm = (p * rep.solution - q).norm();
  return rep;
}

// --- Residual metrics -------------------------------------------------------

// ||A - X*X||_F / max(1, ||A||_F)
inline double sqrt_residual(const DenseMatrix& a, const DenseMatrix& x) {
  return (a - x * x).norm() / std::max(1.0, a.norm());
}

// ||S*A - A^T*S||_F / ||A||_F
inline double symm_residual(const DenseMatrix& a, const DenseMatrix& s) {
  const double na = a.norm();
  if (na == 0.0) throw std::invalid_argument("symm_residual: zero matrix A");
  return (s * a - a.transpose() * s).norm() / na;
}

struct ConditionReport {
  double cond2 = 0.0;  // infinity when rank-deficient
  Eigen::Index rank = 0;
};

// rank_tol <= 0 selects the standard numerical-rank threshold
// max(rows, cols) * machine epsilon, relative to the largest singular value.
inline ConditionReport condition_and_rank(const DenseMatrix& m,
                                          double rank_tol = 0.0) {
  Eigen::JacobiSVD<DenseMatrix> svd(m);
  const auto& sv = svd.singularValues();
  ConditionReport rep;
  if (sv.size() == 0 || sv(0) == 0.0) return rep;
  if (rank_tol <= 0.0)
    rank_tol = static_cast<double>(std::max(m.rows(), m.cols())) *
               std::numeric_limits<double>::epsilon();
  const double cut = rank_tol * sv(0);
  for (Eigen::Index i = 0; i < sv.size(); ++i)
    if (sv(i) > cut) ++rep.rank;
  rep.cond2 = (rep.rank == std::min(m.rows(), m.cols()))
                  ? sv(0) / sv(sv.size() - 1)
                  : std::numeric_limits<double>::infinity();
  return rep;
}

inline double norm2(const DenseMatrix& m) {
  Eigen::JacobiSVD<DenseMatrix> svd(m);
  return svd.singularValues()(0);
}

// --- Plain-text serialization -----------------------------------------------
//
// Format: first line "rows cols complex|real", then one row per line with
// entries as "a+bi" tokens, 17 significant digits.

namespace detail {

inline std::string format_scalar(double v) {
  std::ostringstream os;
  os << std::setprecision(17) << v;
  return os.str();
}

inline std::string format_entry(const Complex& z, bool complex_mode) {
  if (!complex_mode) return format_scalar(z.real());
  std::string s = format_scalar(z.real());
  s += (z.imag() < 0.0 || (z.imag() == 0.0 && std::signbit(z.imag()))) ? "-"
                                                                       : "+";
  s += format_scalar(std::abs(z.imag()));
  s += "i";
  return s;
}

inline Complex parse_entry(const std::string& tok, bool complex_mode) {
  if (!complex_mode) return Complex(std::stod(tok), 0.0);
  if (tok.empty() || tok.back() != 'i')
    throw std::invalid_argument("matrix parse: expected trailing 'i' in '" +
                                tok + "'");
  // split at the sign separating real and imaginary parts (skip position 0
  // and signs directly after an exponent marker)
  for (size_t k = tok.size() - 1; k > 0; --k) {
    const char c = tok[k];
    if ((c == '+' || c == '-') && tok[k - 1] != 'e' && tok[k - 1] != 'E') {
      const double re = std::stod(tok.substr(0, k));
      const double im = std::stod(tok.substr(k, tok.size() - 1 - k));
      return Complex(re, im);
    }
  }
  throw std::invalid_argument("matrix parse: malformed entry '" + tok + "'");
}

}  // namespace detail

inline void save_matrix(std::ostream& os, const DenseMatrix& m) {
  const bool complex_mode = (m.imag().norm() != 0.0);
  os << m.rows() << ' ' << m.cols() << ' '
     << (complex_mode ? "complex" : "real") << '\n';
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      if (j) os << ' ';
      os << detail::format_entry(m(i, j), complex_mode);
    }
    os << '\n';
  }
}

inline void save_matrix(const std::string& path, const DenseMatrix& m) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot open " + path);
  save_matrix(f, m);
}

inline DenseMatrix load_matrix(std::istream& is) {
  Eigen::Index rows = 0, cols = 0;
  std::string mode;
  if (!(is >> rows >> cols >> mode) || rows < 1 || cols < 1)
    throw std::runtime_error("matrix parse: bad header");
  const bool complex_mode = (mode == "complex");
  if (!complex_mode && mode != "real")
    throw std::runtime_error("matrix parse: unknown mode '" + mode + "'");
  DenseMatrix m(rows, cols);
  std::string tok;
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j) {
      if (!(is >> tok)) throw std::runtime_error("matrix parse: truncated");
      m(i, j) = detail::parse_entry(tok, complex_mode);
    }
  return m;
}

inline DenseMatrix load_matrix(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot open " + path);
  return load_matrix(f);
}

}  // namespace aznn
