#include "orifeat/so3.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

namespace orifeat::so3 {

namespace {

constexpr double kPi = std::numbers::pi;

// Below this magnitude nᵀ·vee(R − Rᵀ) carries no sign information.
constexpr double kAxisSignFloor = 1e-12;

Mat3 project_to_so3(const Mat3& m) {
  Eigen::JacobiSVD<Mat3> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Mat3 u = svd.matrixU();
  const Mat3& v = svd.matrixV();
  if ((u * v.transpose()).determinant() < 0.0) u.col(2) *= -1.0;
  return u * v.transpose();
}

double orthonormality_error_of(const Mat3& m) {
  const double ortho = (m.transpose() * m - Mat3::Identity()).cwiseAbs().maxCoeff();
  return std::max(ortho, std::abs(m.determinant() - 1.0));
}

}  // namespace

Rotation Rotation::from_matrix(const Mat3& m) {
  if (!m.allFinite()) throw DomainError("rotation matrix has non-finite entries");
  const double err = orthonormality_error_of(m);
  if (err <= kOrthonormalTol) return Rotation(m);
  if (err <= kRepairTol) {
    std::ostringstream msg;
    msg << "rotation off SO(3) by " << err << ", re-orthonormalized";
    warn(msg.str());
    return Rotation(project_to_so3(m));
  }
  std::ostringstream msg;
  msg << "matrix is not a proper rotation (orthonormality error " << err << ")";
  throw DomainError(msg.str());
}

Rotation Rotation::about_axis(const Vec3& axis, double angle) {
  const double n = axis.norm();
  if (!(n > 0.0)) throw DomainError("rotation axis must be non-zero");
  return exp_map(axis / n * angle);
}

double Rotation::orthonormality_error() const { return orthonormality_error_of(m_); }

void MeanSettings::validate() const {
  if (max_iters < 1) throw DomainError("MeanSettings.max_iters must be >= 1");
  if (!(learning_rate > 0.0)) throw DomainError("MeanSettings.learning_rate must be > 0");
  if (!(tol > 0.0)) throw DomainError("MeanSettings.tol must be > 0");
}

Mat3 hat(const Vec3& v) {
  Mat3 m;
  m << 0.0, -v.z(), v.y(),
       v.z(), 0.0, -v.x(),
       -v.y(), v.x(), 0.0;
  return m;
}

Vec3 vee(const Mat3& m) { return Vec3(m(2, 1), m(0, 2), m(1, 0)); }

double rotation_angle(const Mat3& r) {
  const double cos_t = std::clamp(0.5 * (r.trace() - 1.0), -1.0, 1.0);
  // ½‖vee(R − Rᵀ)‖ equals the trace-based sine exactly but keeps full
  // relative precision near θ = π, where 1 + tr R underflows.
  const double sin_t = 0.5 * vee(r - r.transpose()).norm();
  return std::atan2(sin_t, cos_t);
}

TangentVector log_map(const Rotation& rot, double eps) {
  const Mat3& r = rot.matrix();
  const Vec3 skew = vee(r - r.transpose());  // 2 sin θ · n
  const double tr = r.trace();
  const double cos_t = std::clamp(0.5 * (tr - 1.0), -1.0, 1.0);
  const double sin_t = 0.5 * skew.norm();
  const double theta = std::atan2(sin_t, cos_t);

  if (theta < eps) return Vec3::Zero();
  if (theta <= kPi - eps) return (theta / (2.0 * sin_t)) * skew;

  // Near the cut locus: S = R + Rᵀ + (1 − tr R) I = (3 − tr R) n nᵀ.
  const Mat3 s = r + r.transpose() + (1.0 - tr) * Mat3::Identity();
  const Mat3 nn = s / (3.0 - tr);
  Eigen::Index k = 0;
  nn.diagonal().maxCoeff(&k);
  Vec3 n;
  const double nk = std::sqrt(std::max(nn(k, k), 0.0));
  for (int j = 0; j < 3; ++j) n[j] = (j == k) ? nk : nn(k, j) / nk;
  n.normalize();

  const double consistency = n.dot(skew);
  if (std::abs(consistency) > kAxisSignFloor) {
    if (consistency < 0.0) n = -n;
  } else {
    // θ = π: axis sign is ambiguous; make the largest-magnitude component positive.
    Eigen::Index big = 0;
    n.cwiseAbs().maxCoeff(&big);
    if (n[big] < 0.0) n = -n;
  }
  return theta * n;
}

Rotation exp_map(const TangentVector& w) {
  const double theta = w.norm();
  const Mat3 k = hat(w);
  double a, b;
  if (theta < 1e-4) {
    const double t2 = theta * theta;
    a = 1.0 - t2 / 6.0 + t2 * t2 / 120.0;
    b = 0.5 - t2 / 24.0 + t2 * t2 / 720.0;
  } else {
    a = std::sin(theta) / theta;
    b = (1.0 - std::cos(theta)) / (theta * theta);
  }
  return Rotation::unchecked(Mat3::Identity() + a * k + b * k * k);
}

double geodesic_distance(const Rotation& a, const Rotation& b) {
  return rotation_angle(a.matrix().transpose() * b.matrix());
}

MeanResult intrinsic_mean(std::span<const Rotation> rs, const MeanSettings& settings,
                          const Rotation* init) {
  if (rs.empty()) throw DomainError("intrinsic_mean of an empty sequence");
  settings.validate();

  MeanResult out;
  Rotation mean = init ? *init : rs.front();
  const double inv_n = 1.0 / static_cast<double>(rs.size());
  for (int step = 0;; ++step) {
    Vec3 g = Vec3::Zero();
    const Rotation mean_inv = mean.inverse();
    for (const auto& r : rs) g += log_map(mean_inv * r, settings.log_eps);
    g *= inv_n;
    out.gradient_norm = g.norm();
    out.iters = step;
    if (out.gradient_norm < settings.tol) {
      out.converged = true;
      break;
    }
    if (step == settings.max_iters) break;
    mean = mean * exp_map(settings.learning_rate * g);
  }
  out.mean = mean;
  return out;
}

std::vector<TangentVector> log_map_batch(std::span<const Rotation> rs, double eps) {
  std::vector<TangentVector> out(rs.size());
  const auto n = static_cast<std::ptrdiff_t>(rs.size());
#pragma omp parallel for schedule(static) num_threads(thread_count())
  for (std::ptrdiff_t i = 0; i < n; ++i) out[i] = log_map(rs[i], eps);
  return out;
}

}  // namespace orifeat::so3
