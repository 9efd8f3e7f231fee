#include <aznn/static_symmetrizer.hpp>

#include <catch2/catch_amalgamated.hpp>

using namespace aznn;
using Catch::Approx;

TEST_CASE("synchronize snaps tau to an exact divisor of 1 - t0") {
  // already synchronized hints are returned unchanged
  REQUIRE(synchronize(0.985, 0.001) == Approx(0.001));
  REQUIRE(synchronize(0.9985, 0.0001) == Approx(0.0001));
  // 0.015 / 0.0007 is not an integer; largest grid divisor is 0.0006 (K = 25)
  const double tau = synchronize(0.985, 0.0007);
  REQUIRE(tau == Approx(0.0006));
  REQUIRE(std::lround((1.0 - 0.985) / tau) == 25);
  // a hint larger than the remaining interval collapses to it
  REQUIRE(synchronize(0.985, 0.02) == Approx(0.015));
  REQUIRE_THROWS_AS(synchronize(1.5, 0.001), std::invalid_argument);
}

TEST_CASE("presets are countervalent and land on the exact grid") {
  const StaticParams s = small_preset();
  const StaticParams l = large_preset();
  REQUIRE(s.preset_name == "small");
  REQUIRE(l.preset_name == "large");
  // large rescales: eta up ~10x, approach exponent x10, bb /100, tau /10
  REQUIRE(l.eta / s.eta >= 8.0);
  REQUIRE(l.approach_exponent == Approx(10.0 * s.approach_exponent));
  REQUIRE(s.bb_scale / l.bb_scale == Approx(100.0));
  REQUIRE(s.tau / l.tau == Approx(10.0));
  REQUIRE(l.t0 > s.t0);
  // Euler stability: h = eta*tau in (0, 1) for both
  REQUIRE(s.eta * s.tau > 0.0);
  REQUIRE(s.eta * s.tau < 1.0);
  REQUIRE(l.eta * l.tau < 1.0);
  // both presets already satisfy the exact-grid requirement
  REQUIRE(synchronize(s.t0, s.tau) == Approx(s.tau));
  REQUIRE(synchronize(l.t0, l.tau) == Approx(l.tau));
  REQUIRE(preset_by_name("small").preset_name == "small");
  REQUIRE_THROWS_AS(preset_by_name("medium"), std::invalid_argument);
}

TEST_CASE("nullspace oracle dimensions for known matrices") {
  // every S commuting requirement for A = I is vacuous: all symmetric
  // matrices symmetrize, dim = n(n+1)/2 = 3 for n = 2
  REQUIRE(nullspace_oracle(DenseMatrix::Identity(2, 2)).size() == 3);

  DenseMatrix d = DenseMatrix::Zero(2, 2);
  d(0, 0) = 1.0;
  d(1, 1) = 2.0;
  REQUIRE(nullspace_oracle(d).size() == 2);

  // two_by_two(alpha): S A = (S A)^T forces s11 + alpha*s12 = 0
  for (double alpha : {1e-3, 1.0}) {
    const DenseMatrix a = gallery(GalleryKind::two_by_two, 2, alpha);
    const auto basis = nullspace_oracle(a);
    REQUIRE(basis.size() == 2);
    for (const auto& b : basis) {
      REQUIRE(std::abs(b(0, 0) + alpha * b(0, 1)) <= 1e-12);
      REQUIRE((b * a - a.transpose() * b).norm() <= 1e-12);
    }
  }
}

TEST_CASE("oracle basis is orthonormal and symmetrizes") {
  const DenseMatrix a = gallery(GalleryKind::derog_ut, 6);
  const auto basis = nullspace_oracle(a);
  REQUIRE(basis.size() >= 6);
  for (size_t i = 0; i < basis.size(); ++i) {
    REQUIRE(is_symmetric(basis[i], 1e-10));
    REQUIRE((basis[i] * a - a.transpose() * basis[i]).norm() <=
            1e-8 * a.norm());
    for (size_t j = 0; j < i; ++j) {
      const Complex ip =
          (basis[j].conjugate().cwiseProduct(basis[i])).sum();
      REQUIRE(std::abs(ip) <= 1e-10);
    }
  }
}

TEST_CASE("solve_static on a small matrix lands in the oracle subspace") {
  const DenseMatrix a = gallery(GalleryKind::two_by_two, 2, 1e-3);
  const StaticParams p = large_preset(GalleryKind::two_by_two);
  const SymmetrizerCertificate cert = solve_static(a, p);
  REQUIRE(cert.steps_taken == std::lround((1.0 - p.t0) / p.tau));
  REQUIRE(cert.h == Approx(p.eta * p.tau));
  REQUIRE(cert.preset == "large");
  REQUIRE(cert.full_rank);
  REQUIRE(cert.rel_error <= 1e-15);
  REQUIRE(is_symmetric(cert.symmetrizer,
                       1e-12 * cert.symmetrizer.norm()));
  REQUIRE(projection_retained(cert.symmetrizer, nullspace_oracle(a)) >=
          0.999);
}

TEST_CASE("solve_static rejects unsynchronized parameters") {
  const DenseMatrix a = gallery(GalleryKind::two_by_two, 2, 1.0);
  StaticParams p = small_preset();
  p.tau = 0.0007;  // (1 - 0.985)/0.0007 is not an integer
  REQUIRE_THROWS_AS(solve_static(a, p), std::invalid_argument);
}

TEST_CASE("perturbation and run are seed-deterministic") {
  const DenseMatrix b1 = make_perturbation(4, 11, 1e-3);
  const DenseMatrix b2 = make_perturbation(4, 11, 1e-3);
  REQUIRE((b1 - b2).norm() == 0.0);
  REQUIRE((b1 - make_perturbation(4, 12, 1e-3)).norm() > 0.0);

  const DenseMatrix a = gallery(GalleryKind::two_by_two, 2, 1.0);
  const StaticParams p = small_preset(GalleryKind::two_by_two);
  const SymmetrizerCertificate c1 = solve_static(a, p);
  const SymmetrizerCertificate c2 = solve_static(a, p);
  REQUIRE((c1.symmetrizer - c2.symmetrizer).norm() == 0.0);
  REQUIRE(c1.rel_error == c2.rel_error);
}
