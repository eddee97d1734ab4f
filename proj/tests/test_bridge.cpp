#include "doctest.h"

#include <random>

#include "orifeat/bridge.hpp"
#include "orifeat/kinetics.hpp"
#include "support.hpp"

using namespace orifeat;
using namespace orifeat::testing;
using namespace orifeat::bridge;

namespace {

ArrayRef coords_of(const trajio::BackboneTrajectory& traj) {
  return ArrayRef{traj.coords().data(), "float64", {traj.frames(), traj.residues(), 3, 3}};
}

}  // namespace

TEST_CASE("featurize through the bridge is bit-identical to the core") {
  std::mt19937_64 rng(120);
  const auto traj = make_trajectory(8, 6, rng, 0.3, true);
  for (const char* kind : {"orientation", "orientation_mean", "ca", "torsion", "pointcloud"}) {
    INFO(kind);
    const auto out = featurize(coords_of(traj), kind);
    const auto core = pipeline::featurize(traj, *features::parse_kind(kind)).data();
    REQUIRE(out.shape == std::vector<std::size_t>{8, static_cast<std::size_t>(core.cols())});
    bool same = true;
    for (Eigen::Index t = 0; t < core.rows(); ++t)
      for (Eigen::Index j = 0; j < core.cols(); ++j)
        same = same && out.data[static_cast<std::size_t>(t * core.cols() + j)] == core(t, j);
    CHECK(same);
  }
}

TEST_CASE("reference array and chain ids") {
  std::mt19937_64 rng(121);
  const auto traj = make_trajectory(5, 4, rng);
  const auto ref = traj.frame(2);
  const ArrayRef r{ref.coords().data(), "<f8", {4, 3, 3}};
  FeaturizeArgs args;
  args.reference = &r;
  args.chain_ids = "AABB";
  const auto out = featurize(coords_of(traj), "orientation", args);
  for (std::size_t j = 0; j < 12; ++j) CHECK(out.data[2 * 12 + j] == 0.0);
  // Identity reference: frame 0 features are all zero.
  const auto self = featurize(coords_of(traj), "orientation");
  for (std::size_t j = 0; j < 12; ++j) CHECK(self.data[j] == 0.0);

  args.chain_ids = "AB";
  CHECK_THROWS_AS(featurize(coords_of(traj), "orientation", args), BoundaryError);
  const ArrayRef bad_ref{ref.coords().data(), "float64", {3, 3, 3}};
  args.chain_ids.clear();
  args.reference = &bad_ref;
  CHECK_THROWS_WITH_AS(featurize(coords_of(traj), "orientation", args), doctest::Contains("(4, 3, 3)"), BoundaryError);
}

TEST_CASE("shape and dtype errors") {
  std::mt19937_64 rng(122);
  const auto traj = make_trajectory(3, 3, rng);
  ArrayRef a = coords_of(traj);
  a.dtype = "float32";
  CHECK_THROWS_WITH_AS(featurize(a, "ca"), doctest::Contains("float64"), BoundaryError);
  a = coords_of(traj);
  a.shape = {3, 3, 9};
  CHECK_THROWS_WITH_AS(featurize(a, "ca"), doctest::Contains("(T, R, 3, 3)"), BoundaryError);
  a.shape = {3, 3, 3, 2};
  CHECK_THROWS_AS(featurize(a, "ca"), BoundaryError);
  a.shape = {0, 3, 3, 3};
  CHECK_THROWS_AS(featurize(a, "ca"), BoundaryError);
  a = coords_of(traj);
  a.data = nullptr;
  CHECK_THROWS_AS(featurize(a, "ca"), BoundaryError);
  CHECK_THROWS_WITH_AS(featurize(coords_of(traj), "bogus"), doctest::Contains("bogus"), BoundaryError);

  const std::vector<double> f(12, 1.0);
  CHECK_THROWS_AS(amuse(ArrayRef{f.data(), "float64", {12}}, 0.95, 1), BoundaryError);
  CHECK_THROWS_AS(amuse(ArrayRef{f.data(), "int64", {6, 2}}, 0.95, 1), BoundaryError);
  CHECK(shape_string({5}) == "(5,)");
  CHECK(shape_string({2, 3}) == "(2, 3)");
  // Boundary errors are domain errors for callers that only catch those.
  CHECK_THROWS_AS(featurize(a, "ca"), DomainError);
}

TEST_CASE("amuse and vamp2 through the bridge match the core on row-major input") {
  std::mt19937_64 rng(123);
  const Eigen::Index t = 5000;
  const Vector s = ar1(static_cast<std::size_t>(t), 0.9, rng);
  std::normal_distribution<double> g(0.0, 1.0);
  Matrix x(t, 3);
  for (Eigen::Index i = 0; i < t; ++i) x.row(i) << s[i], g(rng), s[i] + 0.5 * g(rng);
  std::vector<double> row_major(static_cast<std::size_t>(x.size()));
  for (Eigen::Index i = 0; i < t; ++i)
    for (Eigen::Index j = 0; j < 3; ++j) row_major[static_cast<std::size_t>(i * 3 + j)] = x(i, j);
  const ArrayRef a{row_major.data(), "float64", {static_cast<std::size_t>(t), 3}};

  kinetics::AmuseOptions opts;
  opts.evr_threshold = 0.95;
  opts.lag = 2;
  const auto core = kinetics::amuse(x, opts);
  const auto out = amuse(a, 0.95, 2);
  REQUIRE(out.eigenvalues.size() == static_cast<std::size_t>(core.tica.eigenvalues.size()));
  for (std::size_t i = 0; i < out.eigenvalues.size(); ++i)
    CHECK(out.eigenvalues[i] == core.tica.eigenvalues[static_cast<Eigen::Index>(i)]);
  CHECK(out.vamp2 == core.vamp2);
  CHECK(out.projections.shape == std::vector<std::size_t>{static_cast<std::size_t>(t), static_cast<std::size_t>(core.projections.cols())});
  CHECK(out.projections.data[7] == core.projections(7 / core.projections.cols(), 7 % core.projections.cols()));
  CHECK(out.timescales.size() == out.eigenvalues.size());
  CHECK(out.eigenvalues[0] == doctest::Approx(0.81).epsilon(0.1));

  CHECK(vamp2_score(a, 2, 1) == kinetics::vamp2_score(x, 2, 1));
}
