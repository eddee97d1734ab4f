#include "doctest.h"

#include <random>

#include "orifeat/so3.hpp"
#include "support.hpp"

using namespace orifeat;
using namespace orifeat::testing;
using so3::Rotation;

TEST_CASE("hat and vee are inverse and hat is the cross product") {
  std::mt19937_64 rng(1);
  for (int i = 0; i < 100; ++i) {
    const Vec3 v = 3.0 * random_unit(rng), w = random_unit(rng);
    CHECK((so3::vee(so3::hat(v)) - v).norm() == 0.0);
    CHECK((so3::hat(v) * w - v.cross(w)).norm() < 1e-14);
    CHECK((so3::hat(v) + so3::hat(v).transpose()).norm() == 0.0);
  }
}

TEST_CASE("exp of log is the identity away from the cut locus") {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> angle(0.0, kPi - 1e-6);
  double worst = 0.0;
  for (int i = 0; i < 10000; ++i) {
    const Rotation r = rotation_with_angle(rng, angle(rng));
    worst = std::max(worst, (so3::exp_map(so3::log_map(r)).matrix() - r.matrix()).norm());
  }
  CHECK(worst < 1e-8);
}

TEST_CASE("log of exp recovers the tangent vector inside the injectivity radius") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> angle(1e-6, kPi - 1e-3);
  for (int i = 0; i < 2000; ++i) {
    const Vec3 w = random_unit(rng) * angle(rng);
    CHECK((so3::log_map(so3::exp_map(w)) - w).norm() < 1e-9);
  }
}

TEST_CASE("log matches the quaternion oracle") {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> regular(1e-5, kPi - 1e-3);
  std::uniform_real_distribution<double> near_pi(kPi - 1e-3, kPi);
  for (int i = 0; i < 1000; ++i) {
    const Rotation r = rotation_with_angle(rng, regular(rng));
    CHECK((so3::log_map(r) - quaternion_log(r.matrix())).norm() < 1e-9);
  }
  double worst = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const Rotation r = rotation_with_angle(rng, near_pi(rng));
    worst = std::max(worst, (so3::log_map(r) - quaternion_log(r.matrix())).norm());
  }
  CHECK(worst < 1e-6);
}

TEST_CASE("log at exactly pi returns a valid preimage") {
  for (const Vec3& axis : {Vec3(1, 0, 0), Vec3(0, -1, 0), Vec3(1, 1, 1).normalized(), Vec3(-1, 2, -3).normalized()}) {
    const Mat3 r = Eigen::AngleAxisd(kPi, axis).toRotationMatrix();
    const Vec3 w = so3::log_map(Rotation::unchecked(r));
    CHECK(w.norm() == doctest::Approx(kPi).epsilon(1e-12));
    CHECK((so3::exp_map(w).matrix() - r).norm() < 1e-9);
    Eigen::Index big = 0;
    w.cwiseAbs().maxCoeff(&big);
    CHECK(w[big] > 0.0);
  }
}

TEST_CASE("small angles: zero below eps, accurate above") {
  const Vec3 axis = Vec3(0.3, -0.4, 0.5).normalized();
  CHECK(so3::log_map(so3::exp_map(axis * 1e-9)).norm() == 0.0);
  const Vec3 w = axis * 1e-6;
  CHECK((so3::log_map(so3::exp_map(w)) - w).norm() < 1e-15);
  CHECK(so3::log_map(Rotation::identity()).norm() == 0.0);
}

TEST_CASE("geodesic distance is the rotation angle and bi-invariant") {
  std::mt19937_64 rng(5);
  for (int i = 0; i < 200; ++i) {
    const Rotation a = random_rotation(rng), b = random_rotation(rng), q = random_rotation(rng);
    const double d = so3::geodesic_distance(a, b);
    CHECK(d >= 0.0);
    CHECK(d <= kPi + 1e-12);
    CHECK(d == doctest::Approx(so3::geodesic_distance(b, a)).epsilon(1e-12));
    CHECK(d == doctest::Approx(so3::geodesic_distance(q * a, q * b)).epsilon(1e-9));
    CHECK(d == doctest::Approx(so3::geodesic_distance(a * q, b * q)).epsilon(1e-9));
    CHECK(d == doctest::Approx(quaternion_log((a.inverse() * b).matrix()).norm()).epsilon(1e-9));
  }
}

TEST_CASE("from_matrix validates and repairs") {
  Mat3 reflect = Mat3::Identity();
  reflect(2, 2) = -1.0;
  CHECK_THROWS_AS(Rotation::from_matrix(reflect), DomainError);
  CHECK_THROWS_AS(Rotation::from_matrix(2.0 * Mat3::Identity()), DomainError);
  Mat3 bad = Mat3::Identity();
  bad(0, 1) = std::nan("");
  CHECK_THROWS_AS(Rotation::from_matrix(bad), DomainError);

  Mat3 near = Eigen::AngleAxisd(0.7, Vec3::UnitZ()).toRotationMatrix();
  near(0, 0) += 1e-6;
  ScopedWarningCapture cap;
  const Rotation fixed = Rotation::from_matrix(near);
  CHECK(cap.contains("re-orthonormalized"));
  CHECK(fixed.orthonormality_error() < 1e-12);
  CHECK_THROWS_AS(Rotation::about_axis(Vec3::Zero(), 1.0), DomainError);
}

TEST_CASE("intrinsic mean of two rotations is the geodesic midpoint") {
  std::mt19937_64 rng(6);
  const so3::MeanSettings tight{2000, 0.5, 1e-12};
  for (int trial = 0; trial < 20; ++trial) {
    const Rotation a = random_rotation(rng);
    const Rotation b = a * rotation_with_angle(rng, 0.2 + 2.5 * trial / 20.0);
    const std::vector<Rotation> rs{a, b};
    const auto res = so3::intrinsic_mean(rs, tight);
    REQUIRE(res.converged);
    // 1-D brute force along the geodesic a·exp(s·log(aᵀb)).
    const Vec3 w = so3::log_map(a.inverse() * b);
    auto cost = [&](double s) {
      const Rotation m = a * so3::exp_map(s * w);
      return std::pow(so3::geodesic_distance(m, a), 2) + std::pow(so3::geodesic_distance(m, b), 2);
    };
    double lo = 0.0, hi = 1.0;
    for (int it = 0; it < 200; ++it) {
      const double m1 = lo + (hi - lo) / 3.0, m2 = hi - (hi - lo) / 3.0;
      (cost(m1) < cost(m2) ? hi : lo) = (cost(m1) < cost(m2) ? m2 : m1);
    }
    const Rotation best = a * so3::exp_map(0.5 * (lo + hi) * w);
    CHECK(so3::geodesic_distance(res.mean, best) < 1e-6);
  }
}

TEST_CASE("intrinsic mean is left- and right-equivariant") {
  std::mt19937_64 rng(7);
  const Rotation center = random_rotation(rng);
  std::vector<Rotation> rs, left, right;
  for (int i = 0; i < 50; ++i) rs.push_back(center * so3::exp_map(0.3 * random_unit(rng)));
  const Rotation q = random_rotation(rng);
  for (const auto& r : rs) {
    left.push_back(q * r);
    right.push_back(r * q);
  }
  const so3::MeanSettings s{2000, 0.5, 1e-12};
  const auto m = so3::intrinsic_mean(rs, s).mean;
  CHECK(so3::geodesic_distance(so3::intrinsic_mean(left, s).mean, q * m) < 1e-9);
  CHECK(so3::geodesic_distance(so3::intrinsic_mean(right, s).mean, m * q) < 1e-9);
}

TEST_CASE("intrinsic mean edge cases") {
  std::mt19937_64 rng(8);
  const Rotation r = random_rotation(rng);
  const std::vector<Rotation> one{r};
  const auto res = so3::intrinsic_mean(one);
  CHECK(res.converged);
  CHECK(res.iters == 0);
  CHECK(so3::geodesic_distance(res.mean, r) == 0.0);
  CHECK_THROWS_AS(so3::intrinsic_mean(std::span<const Rotation>{}), DomainError);
  CHECK_THROWS_AS(so3::intrinsic_mean(one, so3::MeanSettings{0, 0.1, 1e-3}), DomainError);

  std::vector<Rotation> spread;
  for (int i = 0; i < 20; ++i) spread.push_back(r * so3::exp_map(1.0 * random_unit(rng)));
  const auto capped = so3::intrinsic_mean(spread, so3::MeanSettings{1, 0.1, 1e-12});
  CHECK_FALSE(capped.converged);
  CHECK(capped.iters == 1);
}

TEST_CASE("batch log equals elementwise log") {
  std::mt19937_64 rng(9);
  std::vector<Rotation> rs;
  for (int i = 0; i < 500; ++i) rs.push_back(random_rotation(rng));
  const auto batch = so3::log_map_batch(rs);
  for (std::size_t i = 0; i < rs.size(); ++i) CHECK((batch[i] - so3::log_map(rs[i])).norm() == 0.0);
}
