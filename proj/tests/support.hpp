#pragma once

// Shared fixtures and independent oracles for the test binaries.

#include <cmath>
#include <filesystem>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "orifeat/so3.hpp"
#include "orifeat/trajio.hpp"

namespace orifeat::testing {

inline constexpr double kPi = std::numbers::pi;

inline Vec3 random_unit(std::mt19937_64& rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  Vec3 v;
  do {
    v = Vec3(g(rng), g(rng), g(rng));
  } while (v.norm() < 1e-9);
  return v.normalized();
}

// Haar-uniform via a normalized Gaussian quaternion.
inline so3::Rotation random_rotation(std::mt19937_64& rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  Eigen::Quaterniond q(g(rng), g(rng), g(rng), g(rng));
  q.normalize();
  return so3::Rotation::unchecked(q.toRotationMatrix());
}

// Rotation by exactly `theta` about a random axis, built from a quaternion
// so it does not go through exp_map.
inline so3::Rotation rotation_with_angle(std::mt19937_64& rng, double theta) {
  const Vec3 n = random_unit(rng);
  Eigen::Quaterniond q(Eigen::AngleAxisd(theta, n));
  return so3::Rotation::unchecked(q.toRotationMatrix());
}

// Log map computed from the unit quaternion: θ = 2 atan2(‖q_v‖, q_w).
inline Vec3 quaternion_log(const Mat3& r) {
  Eigen::Quaterniond q(r);
  q.normalize();
  if (q.w() < 0.0) q.coeffs() *= -1.0;
  const double s = q.vec().norm();
  if (s == 0.0) return Vec3::Zero();
  return q.vec() / s * (2.0 * std::atan2(s, q.w()));
}

inline double angle_between(const Vec3& a, const Vec3& b) {
  return std::atan2(a.cross(b).norm(), a.dot(b));
}

// Horn's closed-form quaternion superposition; returns the optimal rotation
// mapping centered `moving` onto centered `target` and the RMSD.
struct HornFit {
  Mat3 rotation;
  double rmsd;
};

inline HornFit horn_fit(const trajio::Points& moving, const trajio::Points& target) {
  const Eigen::RowVector3d ca = moving.colwise().mean();
  const Eigen::RowVector3d cb = target.colwise().mean();
  const trajio::Points a = moving.rowwise() - ca;
  const trajio::Points b = target.rowwise() - cb;
  const Mat3 s = a.transpose() * b;
  const double sxx = s(0, 0), sxy = s(0, 1), sxz = s(0, 2);
  const double syx = s(1, 0), syy = s(1, 1), syz = s(1, 2);
  const double szx = s(2, 0), szy = s(2, 1), szz = s(2, 2);
  Eigen::Matrix4d n;
  n << sxx + syy + szz, syz - szy, szx - sxz, sxy - syx,
       syz - szy, sxx - syy - szz, sxy + syx, szx + sxz,
       szx - sxz, sxy + syx, -sxx + syy - szz, syz + szy,
       sxy - syx, szx + sxz, syz + szy, -sxx - syy + szz;
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix4d> es(n);
  const Eigen::Vector4d v = es.eigenvectors().col(3);
  Eigen::Quaterniond q(v[0], v[1], v[2], v[3]);
  const double e = a.squaredNorm() + b.squaredNorm() - 2.0 * es.eigenvalues()[3];
  return {q.normalized().toRotationMatrix(), std::sqrt(std::max(e, 0.0) / static_cast<double>(a.rows()))};
}

inline double rmsd_after(const Mat3& r, const trajio::Points& moving, const trajio::Points& target) {
  const trajio::Points a = moving.rowwise() - moving.colwise().mean();
  const trajio::Points b = target.rowwise() - target.colwise().mean();
  return std::sqrt(((a * r.transpose()) - b).squaredNorm() / static_cast<double>(a.rows()));
}

// Brute-force RMSD minimum: ZYZ Euler grid, then repeated local grids with
// shrinking step down to ~1e-6 rad around the best few candidates.
inline double grid_search_rmsd(const trajio::Points& moving, const trajio::Points& target, double step_deg = 10.0) {
  auto euler = [](double a, double b, double c) {
    return Mat3((Eigen::AngleAxisd(a, Vec3::UnitZ()) * Eigen::AngleAxisd(b, Vec3::UnitY()) *
                 Eigen::AngleAxisd(c, Vec3::UnitZ()))
                    .toRotationMatrix());
  };
  const double step = step_deg * kPi / 180.0;
  std::vector<std::pair<double, Mat3>> cands;
  for (double a = 0.0; a < 2.0 * kPi; a += step)
    for (double b = 0.0; b <= kPi + 1e-12; b += step)
      for (double c = 0.0; c < 2.0 * kPi; c += step) {
        const Mat3 r = euler(a, b, c);
        cands.emplace_back(rmsd_after(r, moving, target), r);
      }
  std::partial_sort(cands.begin(), cands.begin() + 8, cands.end(),
                    [](const auto& x, const auto& y) { return x.first < y.first; });
  double best = cands.front().first;
  for (int c = 0; c < 8; ++c) {
    Mat3 r = cands[c].second;
    double cur = cands[c].first;
    for (double h = step; h > 1e-7; h *= 0.5) {
      bool improved = true;
      while (improved) {
        improved = false;
        for (int i = -2; i <= 2; ++i)
          for (int j = -2; j <= 2; ++j)
            for (int k = -2; k <= 2; ++k) {
              if (i == 0 && j == 0 && k == 0) continue;
              const Mat3 trial = so3::exp_map(Vec3(i, j, k) * (h / 2.0)).matrix() * r;
              const double val = rmsd_after(trial, moving, target);
              if (val < cur - 1e-15) {
                cur = val;
                r = trial;
                improved = true;
              }
            }
      }
    }
    best = std::min(best, cur);
  }
  return best;
}

// Backbone with realistic bond lengths and N–Cα–C angle, Cα on a helix.
inline trajio::Structure make_structure(std::size_t residues, std::mt19937_64& rng,
                                        std::vector<char> chains = {}) {
  if (chains.empty()) chains.assign(residues, 'A');
  std::vector<double> coords;
  coords.reserve(residues * 9);
  const double bend = 111.0 * kPi / 180.0;
  for (std::size_t i = 0; i < residues; ++i) {
    const double phase = 100.0 * kPi / 180.0 * static_cast<double>(i);
    const Vec3 ca(2.3 * std::cos(phase), 2.3 * std::sin(phase), 1.5 * static_cast<double>(i));
    const Vec3 a = random_unit(rng);
    Vec3 b = random_unit(rng);
    b = (b - b.dot(a) * a).normalized();
    const Vec3 n = ca + 1.46 * a;
    const Vec3 c = ca + 1.52 * (std::cos(bend) * a + std::sin(bend) * b);
    for (const Vec3& p : {n, ca, c}) coords.insert(coords.end(), {p.x(), p.y(), p.z()});
  }
  return trajio::Structure(std::move(coords), std::move(chains));
}

inline trajio::Structure transform(const trajio::Structure& s, const Mat3& r, const Vec3& t) {
  std::vector<double> coords(s.coords().begin(), s.coords().end());
  for (std::size_t i = 0; i + 2 < coords.size(); i += 3) {
    const Vec3 p = r * Vec3(coords[i], coords[i + 1], coords[i + 2]) + t;
    coords[i] = p.x();
    coords[i + 1] = p.y();
    coords[i + 2] = p.z();
  }
  return trajio::Structure(std::move(coords), s.chain_ids());
}

inline trajio::Structure jitter(const trajio::Structure& s, std::mt19937_64& rng, double sigma) {
  std::normal_distribution<double> g(0.0, sigma);
  std::vector<double> coords(s.coords().begin(), s.coords().end());
  for (double& x : coords) x += g(rng);
  return trajio::Structure(std::move(coords), s.chain_ids());
}

// Thermal noise around one base structure; `tumble` adds a random rigid
// motion per frame.
inline trajio::BackboneTrajectory make_trajectory(std::size_t frames, std::size_t residues, std::mt19937_64& rng,
                                                  double sigma = 0.3, bool tumble = false,
                                                  std::vector<char> chains = {}) {
  const auto base = make_structure(residues, rng, std::move(chains));
  std::vector<trajio::Structure> out;
  out.reserve(frames);
  for (std::size_t t = 0; t < frames; ++t) {
    auto s = jitter(base, rng, sigma);
    if (tumble) s = transform(s, random_rotation(rng).matrix(), 10.0 * random_unit(rng));
    out.push_back(std::move(s));
  }
  return trajio::BackboneTrajectory::from_frames(out);
}

inline trajio::BackboneTrajectory transform(const trajio::BackboneTrajectory& traj, const Mat3& r, const Vec3& t) {
  std::vector<trajio::Structure> out;
  for (std::size_t f = 0; f < traj.frames(); ++f) out.push_back(transform(traj.frame(f), r, t));
  return trajio::BackboneTrajectory::from_frames(out, traj.dt_hint());
}

// Scratch directory removed on scope exit.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() / ("orifeat_" + tag + "_" + std::to_string(rd()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

// AR(1) series x_t = ρ x_{t−1} + sqrt(1 − ρ²) ε_t (stationary, unit variance).
inline Vector ar1(std::size_t n, double rho, std::mt19937_64& rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  Vector x(static_cast<Eigen::Index>(n));
  const double s = std::sqrt(1.0 - rho * rho);
  x[0] = g(rng);
  for (Eigen::Index t = 1; t < x.size(); ++t) x[t] = rho * x[t - 1] + s * g(rng);
  return x;
}

}  // namespace orifeat::testing
