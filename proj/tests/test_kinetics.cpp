#include "doctest.h"

#include <random>

#include "orifeat/kinetics.hpp"
#include "support.hpp"

using namespace orifeat;
using namespace orifeat::testing;
using namespace orifeat::kinetics;

namespace {

Matrix gaussian(Eigen::Index n, Eigen::Index d, std::mt19937_64& rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  Matrix x(n, d);
  for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = g(rng);
  return x;
}

Matrix sample_cov(const Matrix& y) {
  const Matrix c = y.rowwise() - y.colwise().mean();
  return c.transpose() * c / static_cast<double>(y.rows() - 1);
}

}  // namespace

TEST_CASE("PCA: rank-1 data, isotropic data, whitening, reconstruction") {
  std::mt19937_64 rng(60);
  const Vector line = ar1(500, 0.5, rng);
  Matrix x(500, 3);
  x.col(0) = 2.0 * line;
  x.col(1) = -line;
  x.col(2) = 0.5 * line;
  const auto m1 = pca_fit(x, 0.95);
  CHECK(m1.n_components() == 1);
  CHECK(m1.explained_variance_ratio[0] == doctest::Approx(1.0).epsilon(1e-12));

  const Matrix iso = gaussian(100000, 2, rng);
  const auto m2 = pca_fit(iso, 0.95);
  CHECK(m2.n_components() == 2);
  CHECK(m2.explained_variance_ratio.sum() <= 1.0 + 1e-9);
  CHECK(m2.explained_variance_ratio[0] >= m2.explained_variance_ratio[1]);

  // Correlated 4-D input: whitened output has identity covariance.
  Matrix mix(4, 4);
  mix << 2, 0.3, 0, 0, 0.1, 1, 0.4, 0, 0, 0, 0.5, 0.2, 0.3, 0, 0, 3;
  const Matrix y = gaussian(10000, 4, rng) * mix;
  const auto m3 = pca_fit(y, 1.0);
  CHECK(m3.n_components() == 4);
  CHECK((sample_cov(m3.transform(y)) - Matrix::Identity(4, 4)).cwiseAbs().maxCoeff() < 5e-2);
  CHECK((m3.components * m3.components.transpose() - Matrix::Identity(4, 4)).cwiseAbs().maxCoeff() < 1e-10);
  CHECK((m3.inverse_transform(m3.transform(y)) - y).cwiseAbs().maxCoeff() < 1e-8);
  // Component signs: largest-magnitude loading positive.
  for (Eigen::Index i = 0; i < 4; ++i) {
    Eigen::Index j = 0;
    m3.components.row(i).cwiseAbs().maxCoeff(&j);
    CHECK(m3.components(i, j) > 0.0);
  }
}

TEST_CASE("PCA errors and degenerate input") {
  std::mt19937_64 rng(61);
  CHECK_THROWS_AS(pca_fit(gaussian(1, 3, rng), 0.9), DomainError);
  CHECK_THROWS_AS(pca_fit(gaussian(10, 3, rng), 0.0), DomainError);
  CHECK_THROWS_AS(pca_fit(gaussian(10, 3, rng), 1.5), DomainError);
  ScopedWarningCapture cap;
  const auto m = pca_fit(Matrix::Constant(20, 3, 4.0), 0.95);
  CHECK(m.degenerate);
  CHECK(cap.contains("zero-variance"));
  CHECK(m.transform(Matrix::Constant(20, 3, 4.0)).cwiseAbs().maxCoeff() == 0.0);
  CHECK_THROWS_AS(pca_fit_components(Matrix::Constant(20, 3, 4.0), 2), DomainError);

  Matrix rank1(50, 3);
  rank1.col(0) = ar1(50, 0.1, rng);
  rank1.col(1) = 2.0 * rank1.col(0);
  rank1.col(2) = -rank1.col(0);
  CHECK_THROWS_AS(pca_fit_components(rank1, 2), DomainError);
  CHECK(pca_fit_components(rank1, 1).n_components() == 1);
}

TEST_CASE("implied timescales") {
  CHECK(implied_timescale(std::exp(-1.0), 5).value() == doctest::Approx(5.0).epsilon(1e-14));
  CHECK(implied_timescale(1.0, 5).kind == Timescale::Kind::Infinite);
  CHECK(std::isinf(implied_timescale(1.2, 5).value()));
  CHECK(implied_timescale(0.0, 5).kind == Timescale::Kind::Undefined);
  CHECK(std::isnan(implied_timescale(-0.3, 5).value()));
  CHECK(implied_timescale(0.904, 10).value() == doctest::Approx(-10.0 / std::log(0.904)).epsilon(1e-14));
  CHECK(implied_timescale(0.904, 10).value() == doctest::Approx(99.0).epsilon(0.01));
  double prev = 0.0;
  for (double l = 0.05; l < 1.0; l += 0.05) {
    const double t = implied_timescale(l, 3).value();
    CHECK(t > prev);
    prev = t;
  }
  CHECK_THROWS_AS(implied_timescale(0.5, 0), DomainError);
}

TEST_CASE("TICA on AR(1) recovers rho^tau") {
  std::mt19937_64 rng(62);
  const double rho = 0.99;
  const Matrix x = ar1(1000000, rho, rng);
  const auto m = tica_fit(x, 10);
  const double want = std::pow(rho, 10);
  CHECK(std::abs(m.eigenvalues[0] - want) < 0.1 * want);
  CHECK(std::abs(m.timescales[0].value() - (-10.0 / std::log(want))) < 0.1 * (-10.0 / std::log(want)));
  CHECK(std::abs(vamp2_score(x, 10, 1) - want * want) < 0.1 * want * want);
}

TEST_CASE("TICA and VAMP-2 on white noise") {
  std::mt19937_64 rng(63);
  const Matrix x = gaussian(100000, 3, rng);
  const auto m = tica_fit(x, 5);
  CHECK(m.eigenvalues.cwiseAbs().maxCoeff() < 0.1);
  CHECK(vamp2_score(x, 5, 2) < 0.05);
  // VAMP-2 is nondecreasing in k.
  CHECK(vamp2_score(x, 5, 1) <= vamp2_score(x, 5, 2));
  CHECK(vamp2_score(x, 5, 2) <= vamp2_score(x, 5, 3));
}

TEST_CASE("alternating signal gives a negative leading eigenvalue and undefined timescale") {
  std::mt19937_64 rng(64);
  std::normal_distribution<double> g(0.0, 0.3);
  Matrix x(20000, 2);
  for (Eigen::Index t = 0; t < x.rows(); ++t) {
    x(t, 0) = (t % 2 ? 1.0 : -1.0) + g(rng);
    x(t, 1) = g(rng);
  }
  const auto m = tica_fit(x, 1);
  CHECK(m.eigenvalues[0] < -0.5);
  CHECK(m.timescales[0].kind == Timescale::Kind::Undefined);
}

TEST_CASE("TICA invariants: |lambda| <= 1, C(0)-orthonormal vectors, symmetric flag") {
  std::mt19937_64 rng(65);
  Matrix x(5000, 3);
  x.col(0) = ar1(5000, 0.95, rng);
  x.col(1) = ar1(5000, 0.5, rng);
  x.col(2) = ar1(5000, -0.3, rng);
  const auto m = tica_fit(x, 2);
  CHECK(m.symmetrized);
  CHECK(m.eigenvalues.cwiseAbs().maxCoeff() <= 1.0 + 1e-6);
  for (Eigen::Index i = 1; i < 3; ++i) CHECK(std::abs(m.eigenvalues[i - 1]) >= std::abs(m.eigenvalues[i]));
  const Matrix xc = x.rowwise() - x.colwise().mean();
  const Matrix x0 = xc.topRows(4998), xt = xc.bottomRows(4998);
  const Matrix c0 = (x0.transpose() * x0 + xt.transpose() * xt) / (2.0 * 4998);
  CHECK((m.eigenvectors.transpose() * c0 * m.eigenvectors - Matrix::Identity(3, 3)).cwiseAbs().maxCoeff() < 1e-6);

  TicaOptions raw;
  raw.symmetrize = false;
  const auto n = tica_fit(x, 2, raw);
  CHECK_FALSE(n.symmetrized);
  CHECK(n.eigenvalues[0] == doctest::Approx(m.eigenvalues[0]).epsilon(0.02));

  CHECK_THROWS_AS(tica_fit(x, 5000), DomainError);
  CHECK_THROWS_AS(tica_fit(x, 0), DomainError);
  CHECK_THROWS_AS(tica_fit(Matrix::Zero(10, 2), 1), DomainError);
}

TEST_CASE("TICA eigenvalues are invariant under invertible linear maps") {
  std::mt19937_64 rng(66);
  Matrix x(4000, 3);
  x.col(0) = ar1(4000, 0.9, rng);
  x.col(1) = ar1(4000, 0.6, rng);
  x.col(2) = ar1(4000, 0.2, rng);
  Matrix a(3, 3);
  a << 1, 2, 0, 0.5, -1, 0.3, 0, 0.7, 2;
  const auto m1 = tica_fit(x, 3);
  const auto m2 = tica_fit(x * a, 3);
  CHECK((m1.eigenvalues - m2.eigenvalues).cwiseAbs().maxCoeff() < 1e-8);
}

TEST_CASE("VAMP-2 of a perfectly lag-correlated copy equals k") {
  std::mt19937_64 rng(67);
  const Eigen::Index tau = 4;
  const Matrix base = gaussian(600, 2, rng);
  Matrix x(600, 2);
  // Period-τ repetition: x(t + τ) = x(t).
  for (Eigen::Index t = 0; t < 600; ++t) x.row(t) = base.row(t % tau + 10 * (t % tau));
  CHECK(vamp2_score(x, tau, 1) == doctest::Approx(1.0).epsilon(1e-8));
  CHECK(vamp2_score(x, tau, 2) == doctest::Approx(2.0).epsilon(1e-8));
}

TEST_CASE("lag grid") {
  const auto g = lag_grid(1000);
  CHECK(g == std::vector<std::size_t>{10, 20, 30, 40, 50, 60, 70, 80, 90, 100});
  const auto small = lag_grid(150);
  CHECK(small.front() == 2);
  for (std::size_t i = 1; i < small.size(); ++i) CHECK(small[i] > small[i - 1]);
  const auto dup = lag_grid(200, LagGrid{0.01, 0.02, 10});  // 2 .. 4 frames, rounded duplicates dropped
  CHECK(dup == std::vector<std::size_t>{2, 3, 4});
  CHECK_THROWS_AS(lag_grid(50), DomainError);
  CHECK_THROWS_AS(lag_grid(1000, LagGrid{0.2, 0.1, 10}), DomainError);
  CHECK_THROWS_AS(lag_grid(1000, LagGrid{0.01, 0.1, 0}), DomainError);
}

TEST_CASE("plateau rule") {
  CHECK(find_plateau({10, 10.5, 10.2, 10.4}) == 0u);
  CHECK(find_plateau({1, 5, 10, 10.5, 10.2, 10.4}) == 2u);
  CHECK_FALSE(find_plateau({1, 2, 4, 8, 16}));
  CHECK_FALSE(find_plateau({10, 10.5, 10.2}));
  CHECK(find_plateau({1, 3, 3.1, std::nan(""), 3.2, 3.2, 3.2, 3.2}) == 4u);
  CHECK_FALSE(find_plateau({10, 10.5, 11.6, 10.4, 20}));
}

TEST_CASE("lag search on AR(1) plateaus at the first lag") {
  std::mt19937_64 rng(68);
  const double rho = 0.99;
  const Matrix x = ar1(200000, rho, rng);
  // Fractions chosen so lags stay well inside the correlation time.
  const auto res = lag_search(x, LagGrid{0.00005, 0.0005, 10});
  REQUIRE(res.lags.size() == 10);
  CHECK(res.lags.front() == 10);
  const double t_true = -1.0 / std::log(rho);
  for (double t : res.slowest_timescales) CHECK(std::abs(t - t_true) < 0.2 * t_true);
  REQUIRE(res.plateau_lag.has_value());
  CHECK(*res.plateau_lag == res.lags.front());
  CHECK_THROWS_AS(lag_search(ar1(80, rho, rng)), DomainError);
}

TEST_CASE("AMUSE: sinusoid recovery, permutation invariance, degenerate path") {
  std::mt19937_64 rng(69);
  std::normal_distribution<double> g(0.0, 0.05);
  const Eigen::Index n = 4000;
  Vector s(n);
  for (Eigen::Index t = 0; t < n; ++t) s[t] = std::sin(2.0 * kPi * static_cast<double>(t) / 500.0);
  Matrix x(n, 3);
  for (Eigen::Index t = 0; t < n; ++t) {
    x(t, 0) = 1.5 * s[t] + g(rng);
    x(t, 1) = -0.7 * s[t] + g(rng);
    x(t, 2) = 0.2 * s[t] + g(rng);
  }
  const auto r = amuse(x, AmuseOptions{0.95, 10, {}, std::nullopt});
  const Vector tic = r.projections.col(0);
  const double corr = (tic.array() - tic.mean()).matrix().dot(s) /
                      ((tic.array() - tic.mean()).matrix().norm() * s.norm());
  CHECK(std::abs(corr) > 0.99);

  Matrix xr(n, 4);
  xr.col(0) = s + 0.3 * gaussian(n, 1, rng);
  xr.col(1) = ar1(static_cast<std::size_t>(n), 0.8, rng);
  xr.col(2) = ar1(static_cast<std::size_t>(n), 0.3, rng) + 0.5 * s;
  xr.col(3) = gaussian(n, 1, rng);
  Matrix perm(n, 4);
  perm << xr.col(2), xr.col(0), xr.col(3), xr.col(1);
  const AmuseOptions opts{0.95, 5, {}, std::nullopt};
  const auto a = amuse(xr, opts), b = amuse(perm, opts);
  REQUIRE(a.tica.eigenvalues.size() == b.tica.eigenvalues.size());
  CHECK((a.tica.eigenvalues - b.tica.eigenvalues).cwiseAbs().maxCoeff() < 1e-9);
  CHECK(a.vamp2 == doctest::Approx(b.vamp2).epsilon(1e-9));
  CHECK(a.projections.cols() == 2);

  ScopedWarningCapture cap;
  const auto d = amuse(Matrix::Constant(50, 3, 1.0), opts);
  CHECK(cap.contains("degenerate"));
  CHECK(d.pca.degenerate);
  CHECK(d.tica.timescales[0].kind == Timescale::Kind::Undefined);
  CHECK_THROWS_AS(amuse(xr, AmuseOptions{0.95, static_cast<std::size_t>(n), {}, std::nullopt}), DomainError);
}
