#pragma once

#include <span>
#include <vector>

#include "orifeat/common.hpp"

// Lie-group numerics on SO(3): hat/vee, piecewise-stabilized logarithm,
// Rodrigues exponential, geodesic distance and the intrinsic (Karcher) mean.
namespace orifeat::so3 {

inline constexpr double kOrthonormalTol = 1e-8;
inline constexpr double kRepairTol = 1e-4;
inline constexpr double kDefaultLogEps = 1e-7;

/// Proper rotation matrix. Construction through from_matrix() validates
/// orthonormality; unchecked() is for values that are rotations by construction.
class Rotation {
 public:
  Rotation() : m_(Mat3::Identity()) {}

  /// Validates mᵀm = I and det m = +1 within 1e-8. Matrices off by less than
  /// 1e-4 are projected onto SO(3) (polar decomposition) with a warning;
  /// anything worse throws DomainError.
  static Rotation from_matrix(const Mat3& m);
  static Rotation unchecked(const Mat3& m) { return Rotation(m); }
  static Rotation identity() { return Rotation(); }
  /// Rotation by `angle` radians about `axis` (normalized internally).
  static Rotation about_axis(const Vec3& axis, double angle);

  const Mat3& matrix() const { return m_; }
  Rotation inverse() const { return Rotation(m_.transpose()); }
  Rotation operator*(const Rotation& other) const { return Rotation(m_ * other.m_); }
  Vec3 operator*(const Vec3& v) const { return m_ * v; }

  /// Max of |mᵀm − I| and |det m − 1|.
  double orthonormality_error() const;

 private:
  explicit Rotation(const Mat3& m) : m_(m) {}
  Mat3 m_;
};

/// Axis-angle element of so(3): direction is the axis, norm the angle (radians).
using TangentVector = Vec3;

struct MeanSettings {
  int max_iters = 256;
  double learning_rate = 0.1;
  double tol = 1e-3;
  double log_eps = kDefaultLogEps;

  void validate() const;
};

struct MeanResult {
  Rotation mean;
  bool converged = false;
  int iters = 0;
  double gradient_norm = 0.0;
};

Mat3 hat(const Vec3& v);
Vec3 vee(const Mat3& m);

/// Rotation angle in [0, π], via atan2 of the sine and cosine of the angle.
double rotation_angle(const Mat3& r);

/// Piecewise logarithm: zero below eps, θ/(2 sin θ)·vee(R − Rᵀ) in the regular
/// range, θ·n with the axis recovered from the symmetric part near π.
TangentVector log_map(const Rotation& r, double eps = kDefaultLogEps);

/// Rodrigues exponential at the identity.
Rotation exp_map(const TangentVector& w);

/// ‖log(aᵀ b)‖ in radians, in [0, π].
double geodesic_distance(const Rotation& a, const Rotation& b);

/// Riemannian gradient descent on Σ d_geo(R̄, R_t)², started from `init` or,
/// when absent, from the first sample. Non-convergence is reported via the flag.
MeanResult intrinsic_mean(std::span<const Rotation> rs, const MeanSettings& settings = {},
                          const Rotation* init = nullptr);

/// Batch logarithm of many rotations (frame-parallel).
std::vector<TangentVector> log_map_batch(std::span<const Rotation> rs, double eps = kDefaultLogEps);

}  // namespace orifeat::so3
