#include <aznn/linalg.hpp>

#include <catch2/catch_amalgamated.hpp>
#include <cstdio>
#include <filesystem>
#include <random>

using namespace aznn;
using Catch::Approx;

namespace {

DenseMatrix random_complex(Eigen::Index r, Eigen::Index c, uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g;
  DenseMatrix m(r, c);
  for (Eigen::Index i = 0; i < r; ++i)
    for (Eigen::Index j = 0; j < c; ++j)
      m(i, j) = std::complex<double>(g(rng), g(rng));
  return m;
}

}  // namespace

TEST_CASE("kron identity and scalar cases") {
  const DenseMatrix i2 = DenseMatrix::Identity(2, 2);
  REQUIRE(kron(i2, i2).isApprox(DenseMatrix::Identity(4, 4)));

  DenseMatrix two(1, 1);
  two(0, 0) = 2.0;
  const DenseMatrix b = random_complex(3, 2, 5);
  REQUIRE(kron(two, b).isApprox((2.0 * b).eval()));
}

TEST_CASE("kron block placement") {
  DenseMatrix a(2, 2);
  a << 1.0, 2.0, 3.0, 4.0;
  const DenseMatrix b = random_complex(2, 3, 11);
  const DenseMatrix k = kron(a, b);
  REQUIRE(k.rows() == 4);
  REQUIRE(k.cols() == 6);
  REQUIRE(k.block(0, 3, 2, 3).isApprox((2.0 * b).eval()));
  REQUIRE(k.block(2, 0, 2, 3).isApprox((3.0 * b).eval()));
}

TEST_CASE("vec is column stacking") {
  DenseMatrix x(2, 2);
  x << 1.0, 3.0, 2.0, 4.0;
  const DenseVector v = vec(x);
  REQUIRE(v(0) == std::complex<double>(1.0));
  REQUIRE(v(1) == std::complex<double>(2.0));
  REQUIRE(v(2) == std::complex<double>(3.0));
  REQUIRE(v(3) == std::complex<double>(4.0));
}

TEST_CASE("unvec round trip is bit exact") {
  const DenseMatrix x = random_complex(4, 3, 17);
  const DenseMatrix y = unvec(vec(x), 4, 3);
  REQUIRE((x - y).cwiseAbs().maxCoeff() == 0.0);
  REQUIRE_THROWS_AS(unvec(vec(x), 5, 3), std::invalid_argument);
}

TEST_CASE("vec of transpose equals perfect shuffle of vec") {
  const Eigen::Index m = 3, n = 4;
  const DenseMatrix x = random_complex(m, n, 23);
  // shuffle P maps vec(X) (m x n) to vec(X^T): entry X(i,j) sits at j + i*n
  DenseVector shuffled(m * n);
  const DenseVector v = vec(x);
  for (Eigen::Index j = 0; j < n; ++j)
    for (Eigen::Index i = 0; i < m; ++i) shuffled(j + i * n) = v(i + j * m);
  REQUIRE((vec(x.transpose().eval()) - shuffled).norm() == 0.0);
}

TEST_CASE("kron-vec identity vec(AXB) = (B^T kron A) vec(X)") {
  for (Eigen::Index n = 2; n <= 6; ++n) {
    const DenseMatrix a = random_complex(n, n, 100 + n);
    const DenseMatrix x = random_complex(n, n, 200 + n);
    const DenseMatrix b = random_complex(n, n, 300 + n);
    const DenseVector lhs = vec((a * x * b).eval());
    const DenseVector rhs = kron(b.transpose(), a) * vec(x);
    REQUIRE((lhs - rhs).norm() / lhs.norm() <= 1e-12);
  }
}

TEST_CASE("solve scaled identity is direct") {
  const DenseMatrix p = 2.0 * DenseMatrix::Identity(4, 4);
  const DenseVector q = vec(random_complex(2, 2, 31));
  const SolveReport rep = solve(p, q);
  REQUIRE(rep.method == SolveMethod::direct);
  REQUIRE(rep.rank_estimate == 4);
  REQUIRE((rep.solution - q / 2.0).norm() <= 1e-14 * q.norm());
}

TEST_CASE("solve rank-deficient diagonal gives minimum-norm solution") {
  DenseMatrix p = DenseMatrix::Zero(3, 3);
  p(0, 0) = 1.0;
  p(1, 1) = 1.0;
  DenseVector q(3);
  q << 1.0, 1.0, 0.0;
  const SolveReport rep = solve(p, q);
  REQUIRE(rep.method == SolveMethod::least_squares_pseudoinverse);
  REQUIRE(rep.rank_estimate == 2);
  DenseVector want(3);
  want << 1.0, 1.0, 0.0;
  REQUIRE((rep.solution - want).norm() <= 1e-13);
}

TEST_CASE("symmetrizer operator matrix has nullity n for distinct eigenvalues") {
  DenseMatrix a = DenseMatrix::Zero(2, 2);
  a(0, 0) = 1.0;
  a(1, 1) = 2.0;
  const DenseMatrix i2 = DenseMatrix::Identity(2, 2);
  const DenseMatrix p =
      kron(a.transpose(), i2) - kron(i2, a.transpose());
  const SolveReport rep = solve(p, DenseVector::Zero(4));
  REQUIRE(rep.method == SolveMethod::least_squares_pseudoinverse);
  REQUIRE(rep.rank_estimate == 2);
}

TEST_CASE("solve direct residual bound") {
  for (int trial = 0; trial < 10; ++trial) {
    DenseMatrix p = random_complex(6, 6, 400 + trial);
    p += 6.0 * DenseMatrix::Identity(6, 6);  // keep well conditioned
    const DenseVector q = vec(random_complex(6, 1, 500 + trial));
    const SolveReport rep = solve(p, q);
    REQUIRE(rep.method == SolveMethod::direct);
    REQUIRE(rep.residual_norm <=
            1e-10 * (p.norm() * rep.solution.norm() + q.norm()));
  }
}

TEST_CASE("solve rejects non-finite input") {
  DenseMatrix p = DenseMatrix::Identity(2, 2);
  p(0, 1) = std::numeric_limits<double>::quiet_NaN();
  REQUIRE_THROWS(solve(p, DenseVector::Zero(2)));
}

TEST_CASE("sqrt_residual basics") {
  const DenseMatrix i2 = DenseMatrix::Identity(2, 2);
  REQUIRE(sqrt_residual(i2, i2) == 0.0);
  REQUIRE(sqrt_residual((4.0 * i2).eval(), (2.0 * i2).eval()) == 0.0);
}

TEST_CASE("sqrt_residual positive when no square root exists") {
  // A = [[0,t],[0,0]], t != 0 has no square root at all
  DenseMatrix a = DenseMatrix::Zero(2, 2);
  a(0, 1) = 0.7;
  for (int trial = 0; trial < 20; ++trial) {
    const DenseMatrix x = random_complex(2, 2, 600 + trial);
    REQUIRE(sqrt_residual(a, x) > 0.0);
  }
}

TEST_CASE("symm_residual closed forms") {
  DenseMatrix a = DenseMatrix::Zero(2, 2);
  const double alpha = 0.37;
  a(0, 1) = 1.0;
  a(1, 1) = alpha;
  REQUIRE(symm_residual(a, DenseMatrix::Zero(2, 2)) == 0.0);

  DenseMatrix s(2, 2);
  s << -alpha, 1.0, 1.0, 0.0;
  REQUIRE(symm_residual(a, s) <= 1e-15);

  const DenseMatrix r = random_complex(2, 2, 71);
  REQUIRE(symm_residual(r, DenseMatrix::Identity(2, 2)) ==
          Approx((r - r.transpose()).norm() / r.norm()));

  REQUIRE_THROWS(symm_residual(DenseMatrix::Zero(2, 2), s));
}

TEST_CASE("symm_residual scales linearly in S") {
  const DenseMatrix a = random_complex(3, 3, 81);
  const DenseMatrix s = random_complex(3, 3, 82);
  const double base = symm_residual(a, s);
  REQUIRE(symm_residual(a, (2.5 * s).eval()) == Approx(2.5 * base));
}

TEST_CASE("condition_and_rank") {
  const ConditionReport ci = condition_and_rank(DenseMatrix::Identity(5, 5));
  REQUIRE(ci.cond2 == Approx(1.0));
  REQUIRE(ci.rank == 5);

  DenseMatrix d = DenseMatrix::Zero(2, 2);
  d(0, 0) = 1.0;
  d(1, 1) = 1e-20;
  const ConditionReport cd = condition_and_rank(d);
  REQUIRE(cd.rank == 1);
  REQUIRE(std::isinf(cd.cond2));

  DenseMatrix s(2, 2);
  s << -1.0, 1.0, 1.0, 0.0;
  const ConditionReport cs = condition_and_rank(s);
  REQUIRE(cs.rank == 2);
  REQUIRE(cs.cond2 == Approx(2.618).margin(1e-3));
}

TEST_CASE("matrix serialization round trip") {
  namespace fs = std::filesystem;
  const fs::path path = fs::temp_directory_path() / "aznn_mat_roundtrip.txt";

  const DenseMatrix x = random_complex(4, 3, 91);
  save_matrix(path.string(), x);
  const DenseMatrix y = load_matrix(path.string());
  REQUIRE(y.rows() == 4);
  REQUIRE(y.cols() == 3);
  REQUIRE((x - y).cwiseAbs().maxCoeff() == 0.0);

  // real matrices round trip through the "real" tag
  DenseMatrix r = random_complex(3, 3, 92).real().cast<std::complex<double>>();
  save_matrix(path.string(), r);
  const DenseMatrix r2 = load_matrix(path.string());
  REQUIRE((r - r2).cwiseAbs().maxCoeff() == 0.0);
  fs::remove(path);
}

TEST_CASE("symmetrize uses the plain transpose") {
  const DenseMatrix x = random_complex(3, 3, 95);
  const DenseMatrix s = symmetrize(x);
  REQUIRE((s - s.transpose()).norm() <= 1e-15 * s.norm());
  REQUIRE(is_symmetric(s));
  // conjugate-transpose symmetrization would differ for complex input
  REQUIRE((s - 0.5 * (x + x.transpose())).norm() <= 1e-15 * s.norm());
}
