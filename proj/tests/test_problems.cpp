#include <aznn/problems.hpp>

#include <catch2/catch_amalgamated.hpp>
#include <random>

using namespace aznn;
using Catch::Approx;

namespace {

MatrixFlow constant_flow(const DenseMatrix& a) {
  MatrixFlow flow;
  flow.dim = a.rows();
  flow.value = [a](double) { return a; };
  flow.derivative = [a](double) { return DenseMatrix::Zero(a.rows(), a.cols()); };
  flow.descriptor = "constant";
  return flow;
}

}  // namespace

TEST_CASE("sqrt Kronecker operator acts as D -> X D + D X") {
  std::mt19937_64 rng(2024);
  for (int trial = 0; trial < 50; ++trial) {
    const Eigen::Index n = 2 + static_cast<Eigen::Index>(trial % 5);
    const DenseMatrix x = detail::seeded_gaussian(n, n, rng, true);
    const DenseMatrix d = detail::seeded_gaussian(n, n, rng, true);
    DenseMatrix p;
    DenseVector q;
    sqrt_build_system(x, 0.0, 1.0, constant_flow(x * x), p, q);
    const DenseMatrix lhs = unvec(p * vec(d), n, n);
    const DenseMatrix rhs = x * d + d * x;
    REQUIRE((lhs - rhs).norm() <= 1e-12 * rhs.norm());
  }
}

TEST_CASE("symmetrizer Kronecker operator acts as D -> D A - A^T D") {
  std::mt19937_64 rng(4048);
  for (int trial = 0; trial < 50; ++trial) {
    const Eigen::Index n = 2 + static_cast<Eigen::Index>(trial % 5);
    const DenseMatrix a = detail::seeded_gaussian(n, n, rng, true);
    const DenseMatrix d = detail::seeded_gaussian(n, n, rng, true);
    DenseMatrix p;
    DenseVector q;
    symm_build_system(DenseMatrix::Identity(n, n), 0.0, 1.0, constant_flow(a),
                      p, q);
    const DenseMatrix lhs = unvec(p * vec(d), n, n);
    const DenseMatrix rhs = d * a - a.transpose() * d;
    REQUIRE((lhs - rhs).norm() <= 1e-12 * std::max(1.0, rhs.norm()));
  }
}

TEST_CASE("sqrt system at X = I_2 gives P = 2 I_4") {
  DenseMatrix p;
  DenseVector q;
  const DenseMatrix eye = DenseMatrix::Identity(2, 2);
  sqrt_build_system(eye, 0.0, 1.0, constant_flow(eye), p, q);
  REQUIRE((p - 2.0 * DenseMatrix::Identity(4, 4)).norm() == Approx(0.0));
}

TEST_CASE("symmetrizer forcing vanishes at an exact solution") {
  // A constant and X a symmetrizer (X A = A^T X) kills both terms of q.
  const DenseMatrix eye = DenseMatrix::Identity(3, 3);
  DenseMatrix p;
  DenseVector q;
  symm_build_system(eye, 5.0, 7.0, constant_flow(eye), p, q);
  REQUIRE(q.norm() == Approx(0.0));
}

TEST_CASE("symmetrizer operator nullity for diag(1,2) is 2") {
  DenseMatrix a = DenseMatrix::Zero(2, 2);
  a(0, 0) = 1.0;
  a(1, 1) = 2.0;
  DenseMatrix p;
  DenseVector q;
  symm_build_system(DenseMatrix::Identity(2, 2), 0.0, 1.0, constant_flow(a), p,
                    q);
  Eigen::JacobiSVD<DenseMatrix> svd(p);
  const auto& sv = svd.singularValues();
  REQUIRE(sv(0) == Approx(1.0));
  REQUIRE(sv(1) == Approx(1.0));
  REQUIRE(sv(2) <= 1e-14);
  REQUIRE(sv(3) <= 1e-14);
}

TEST_CASE("entry-wise sqrt startup seed") {
  const DenseMatrix four = 4.0 * DenseMatrix::Identity(3, 3);
  REQUIRE((sqrt_initial_guess(four) - 2.0 * DenseMatrix::Identity(3, 3))
              .norm() == Approx(0.0));

  DenseMatrix neg(1, 1);
  neg(0, 0) = Complex(-1.0, 0.0);
  const Complex r = sqrt_initial_guess(neg)(0, 0);
  REQUIRE(r.real() == Approx(0.0).margin(1e-15));
  REQUIRE(r.imag() == Approx(1.0));
}

TEST_CASE("symmetrizer startup seed is symmetric and well conditioned") {
  for (uint64_t seed : {1ull, 7ull, 42ull}) {
    const DenseMatrix s = symm_initial_guess(6, seed);
    REQUIRE(is_symmetric(s));
    const ConditionReport rep = condition_and_rank(s);
    REQUIRE(rep.rank == 6);
    REQUIRE(rep.cond2 <= 1.5);
  }
}

TEST_CASE("adapters report the residual metrics of the library") {
  const MatrixFlow w = trial_flow_squared_root(3, 1);
  const MatrixFlow a = trial_flow_squared(3, 1);
  SquareRootAdapter sqrt_adapter(3);
  REQUIRE(sqrt_adapter.residual(a.value(10.0), w.value(10.0)) ==
          Approx(sqrt_residual(a.value(10.0), w.value(10.0))));

  SymmetrizerAdapter symm_adapter(3, 7);
  const DenseMatrix eye = DenseMatrix::Identity(3, 3);
  REQUIRE(symm_adapter.residual(eye, eye) == Approx(0.0));
  // enforce_structure projects onto symmetric matrices
  std::mt19937_64 rng(9);
  const DenseMatrix r = detail::seeded_gaussian(3, 3, rng, false);
  REQUIRE(is_symmetric(symm_adapter.enforce_structure(r)));
}
