#include "orifeat/correlation.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <limits>
#include <numeric>

namespace orifeat::correlation {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
// Averages below this are treated as numerically zero for atan2(0, 0).
constexpr double kZeroAverage = 1e-12;

std::vector<std::size_t> resolve_frames(std::span<const std::size_t> frames, std::size_t total) {
  std::vector<std::size_t> out(frames.begin(), frames.end());
  if (out.empty()) {
    out.resize(total);
    std::iota(out.begin(), out.end(), std::size_t{0});
  }
  for (std::size_t t : out)
    if (t >= total) throw DomainError("frame index " + std::to_string(t) + " out of range");
  return out;
}

}  // namespace

std::vector<std::size_t> frames_in_cluster(const clustering::Labels& labels, int cluster) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < labels.size(); ++i)
    if (labels[i] == cluster) out.push_back(i);
  return out;
}

CorrelationMap dccm(const trajio::BackboneTrajectory& traj, std::span<const std::size_t> frames) {
  const auto sel = resolve_frames(frames, traj.frames());
  if (sel.size() < 2) throw DomainError("DCCM needs at least 2 frames");
  const auto t = static_cast<Eigen::Index>(sel.size());
  const auto r = static_cast<Eigen::Index>(traj.residues());

  // One T × R block per Cartesian component, demeaned over the subset.
  std::array<Matrix, 3> x;
  for (auto& m : x) m.resize(t, r);
  for (Eigen::Index k = 0; k < t; ++k)
    for (Eigen::Index i = 0; i < r; ++i) {
      const Vec3 p = traj.atom(sel[static_cast<std::size_t>(k)], static_cast<std::size_t>(i), trajio::Atom::CA);
      for (int c = 0; c < 3; ++c) x[c](k, i) = p[c];
    }
  Matrix cov = Matrix::Zero(r, r);
  for (auto& m : x) {
    m.rowwise() -= m.colwise().mean();
    cov += m.transpose() * m;
  }
  cov /= static_cast<double>(t);

  CorrelationMap out;
  out.kind = MapKind::Dccm;
  out.values.resize(r, r);
  std::size_t flat = 0;
  for (Eigen::Index i = 0; i < r; ++i) flat += cov(i, i) > 0.0 ? 0 : 1;
  if (flat > 0) warn(std::to_string(flat) + " residue(s) without displacement variance; DCCM entries undefined");
  for (Eigen::Index i = 0; i < r; ++i)
    for (Eigen::Index j = 0; j < r; ++j) {
      const double denom = std::sqrt(cov(i, i) * cov(j, j));
      out.values(i, j) = denom > 0.0 ? std::clamp(cov(i, j) / denom, -1.0, 1.0) : kNaN;
    }
  for (Eigen::Index i = 0; i < r; ++i)
    if (cov(i, i) > 0.0) out.values(i, i) = 1.0;
  return out;
}

CorrelationMap dcom(const features::LcsStack& lcs, std::span<const std::size_t> frames, const Vec3& e_axis) {
  const auto sel = resolve_frames(frames, lcs.frames());
  if (sel.empty()) throw DomainError("DCOM needs at least 1 frame");
  const double e_norm = e_axis.norm();
  if (!(e_norm > 0.0) || !e_axis.allFinite()) throw DomainError("DCOM reference axis must be a nonzero vector");
  const Vec3 e = e_axis / e_norm;
  const auto t = static_cast<Eigen::Index>(sel.size());
  const auto r = static_cast<Eigen::Index>(lcs.residues());

  std::array<Matrix, 3> n;
  for (auto& m : n) m.resize(t, r);
  for (Eigen::Index k = 0; k < t; ++k)
    for (Eigen::Index i = 0; i < r; ++i) {
      const Vec3 v = lcs.normal(sel[static_cast<std::size_t>(k)], static_cast<std::size_t>(i));
      for (int c = 0; c < 3; ++c) n[c](k, i) = v[c];
    }
  const double inv_t = 1.0 / static_cast<double>(t);
  auto prod = [&](int a, int b) -> Matrix { return n[a].transpose() * n[b] * inv_t; };
  const Matrix xy = prod(0, 1), yz = prod(1, 2), zx = prod(2, 0);
  const Matrix dot = (prod(0, 0) + prod(1, 1) + prod(2, 2)).eval();
  // (n_i × n_j)·e expanded per component of e.
  const Matrix cross = e.x() * (yz - yz.transpose()) + e.y() * (zx - zx.transpose()) + e.z() * (xy - xy.transpose());

  CorrelationMap out;
  out.kind = MapKind::Dcom;
  out.e_axis = e;
  out.values.resize(r, r);
  for (Eigen::Index i = 0; i < r; ++i)
    for (Eigen::Index j = 0; j < r; ++j) {
      const double s = cross(i, j), c = dot(i, j);
      out.values(i, j) = (std::abs(s) < kZeroAverage && std::abs(c) < kZeroAverage)
                             ? kNaN
                             : std::atan2(s, c) * 180.0 / std::numbers::pi;
    }
  return out;
}

double wrap_degrees(double delta) {
  if (std::isnan(delta)) return delta;
  const double shifted = delta + 180.0;
  const double wrapped = shifted - 360.0 * std::floor(shifted / 360.0) - 180.0;
  return wrapped <= -180.0 ? 180.0 : wrapped;
}

CorrelationMap dcom_diff(const CorrelationMap& a, const CorrelationMap& b) {
  if (a.kind != MapKind::Dcom || b.kind != MapKind::Dcom) throw DomainError("dcom_diff expects two DCOM maps");
  if (a.n() != b.n()) throw DomainError("dcom_diff: maps differ in size");
  if ((a.e_axis - b.e_axis).norm() > 1e-12) throw DomainError("dcom_diff: maps use different reference axes");
  CorrelationMap out;
  out.kind = MapKind::Dcom;
  out.e_axis = a.e_axis;
  out.values = (b.values - a.values).unaryExpr([](double d) { return wrap_degrees(d); });
  return out;
}

}  // namespace orifeat::correlation
