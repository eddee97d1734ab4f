#include "orifeat/synth.hpp"

#include <cmath>
#include <numbers>
#include <random>

#include "orifeat/so3.hpp"

namespace orifeat::synth {

namespace {

Vec3 unit_vector(std::mt19937_64& rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  Vec3 v;
  do {
    v = Vec3(g(rng), g(rng), g(rng));
  } while (v.norm() < 1e-9);
  return v.normalized();
}

trajio::Structure moved(const trajio::Structure& s, std::size_t first, std::size_t last, const Mat3& r,
                        const Vec3& pivot, const Vec3& shift) {
  trajio::Structure out = s;
  for (std::size_t i = first; i < last; ++i)
    for (auto a : {trajio::Atom::N, trajio::Atom::CA, trajio::Atom::C})
      out.set_atom(i, a, r * (s.atom(i, a) - pivot) + pivot + shift);
  return out;
}

trajio::Structure jittered(const trajio::Structure& s, double sigma, std::mt19937_64& rng) {
  std::normal_distribution<double> g(0.0, sigma);
  std::vector<double> c(s.coords().begin(), s.coords().end());
  for (double& x : c) x += g(rng);
  return trajio::Structure(std::move(c), s.chain_ids());
}

}  // namespace

trajio::Structure helix(std::size_t residues, std::uint64_t seed, std::vector<char> chain_ids) {
  if (residues == 0) throw DomainError("helix needs at least one residue");
  if (chain_ids.empty()) chain_ids.assign(residues, 'A');
  if (chain_ids.size() != residues) throw DomainError("chain id count differs from residue count");
  std::mt19937_64 rng(seed);
  const double bend = 111.0 * std::numbers::pi / 180.0;
  std::vector<double> coords;
  coords.reserve(residues * 9);
  for (std::size_t i = 0; i < residues; ++i) {
    const double phase = 100.0 * std::numbers::pi / 180.0 * static_cast<double>(i);
    const Vec3 ca(2.3 * std::cos(phase), 2.3 * std::sin(phase), 1.5 * static_cast<double>(i));
    const Vec3 a = unit_vector(rng);
    const Vec3 b = (unit_vector(rng).cross(a)).normalized();
    const Vec3 n = ca + 1.46 * a;
    const Vec3 c = ca + 1.52 * (std::cos(bend) * a + std::sin(bend) * b);
    for (const Vec3& p : {n, ca, c}) coords.insert(coords.end(), {p.x(), p.y(), p.z()});
  }
  return trajio::Structure(std::move(coords), std::move(chain_ids));
}

trajio::BackboneTrajectory jittered_helix(std::size_t frames, std::size_t residues, double sigma, std::uint64_t seed) {
  if (frames == 0) throw DomainError("need at least one frame");
  if (!(sigma >= 0.0)) throw DomainError("jitter sigma must be non-negative");
  const auto base = helix(residues, seed);
  std::mt19937_64 rng(seed ^ 0x5DEECE66DULL);
  std::vector<trajio::Structure> out;
  out.reserve(frames);
  for (std::size_t t = 0; t < frames; ++t) out.push_back(sigma > 0.0 ? jittered(base, sigma, rng) : base);
  return trajio::BackboneTrajectory::from_frames(out);
}

Matrix ar1_features(std::size_t frames, std::size_t dims, double rho, std::uint64_t seed) {
  if (frames < 2 || dims < 1) throw DomainError("AR(1) features need at least 2 frames and 1 column");
  if (!(std::abs(rho) < 1.0)) throw DomainError("AR(1) coefficient must satisfy |rho| < 1");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, 1.0);
  Matrix x(static_cast<Eigen::Index>(frames), static_cast<Eigen::Index>(dims));
  const double s = std::sqrt(1.0 - rho * rho);
  for (Eigen::Index t = 0; t < x.rows(); ++t) {
    x(t, 0) = t == 0 ? g(rng) : rho * x(t - 1, 0) + s * g(rng);
    for (Eigen::Index j = 1; j < x.cols(); ++j) x(t, j) = g(rng);
  }
  return x;
}

TwoStateComplex two_state_complex(std::size_t frames, std::size_t residues_a, std::size_t residues_b,
                                  double bound_fraction, std::uint64_t seed, double sigma, double separation) {
  if (residues_a < 3 || residues_b < 3) throw DomainError("each chain needs at least 3 residues");
  if (!(bound_fraction >= 0.0 && bound_fraction <= 1.0)) throw DomainError("bound fraction must lie in [0, 1]");
  std::vector<char> chains(residues_a, 'A');
  chains.insert(chains.end(), residues_b, 'B');
  const std::size_t total = residues_a + residues_b;

  // Chain B starts as a copy of a helix laid beside chain A, 9 Å away along x.
  trajio::Structure crystal = helix(total, seed, chains);
  const auto second = helix(residues_b, seed + 1);
  for (std::size_t i = 0; i < residues_b; ++i)
    for (auto a : {trajio::Atom::N, trajio::Atom::CA, trajio::Atom::C})
      crystal.set_atom(residues_a + i, a, second.atom(i, a) + Vec3(9.0, 0.0, 0.0));

  // Snap to the 0.001 Å grid so a PDB copy of the crystal is exact.
  {
    std::vector<double> c(crystal.coords().begin(), crystal.coords().end());
    for (double& x : c) x = std::round(x * 1000.0) / 1000.0;
    crystal = trajio::Structure(std::move(c), chains);
  }

  Vec3 pivot = Vec3::Zero();
  for (std::size_t i = residues_a; i < total; ++i) pivot += crystal.atom(i, trajio::Atom::CA);
  pivot /= static_cast<double>(residues_b);
  const Mat3 turn = so3::Rotation::about_axis(Vec3::UnitX(), std::numbers::pi / 3.0).matrix();
  trajio::Structure apart = moved(crystal, residues_a, total, turn, pivot, Vec3(separation, 0.0, 0.0));
  // Chain A relaxes when released: every N and C turns 40° about its own Cα.
  const Mat3 relax = so3::Rotation::about_axis(Vec3::UnitZ(), 2.0 * std::numbers::pi / 9.0).matrix();
  for (std::size_t i = 0; i < residues_a; ++i) {
    const Vec3 ca = crystal.atom(i, trajio::Atom::CA);
    for (auto a : {trajio::Atom::N, trajio::Atom::C}) apart.set_atom(i, a, relax * (crystal.atom(i, a) - ca) + ca);
  }

  std::mt19937_64 rng(seed ^ 0x9E3779B97F4A7C15ULL);
  std::bernoulli_distribution coin(bound_fraction);
  TwoStateComplex out;
  out.crystal = crystal;
  std::vector<trajio::Structure> traj;
  traj.reserve(frames);
  for (std::size_t t = 0; t < frames; ++t) {
    const int b = coin(rng) ? 1 : 0;
    out.bound.push_back(b);
    traj.push_back(jittered(b ? crystal : apart, sigma, rng));
  }
  out.trajectory = trajio::BackboneTrajectory::from_frames(traj);
  return out;
}

}  // namespace orifeat::synth
