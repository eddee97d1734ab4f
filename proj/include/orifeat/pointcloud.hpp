#pragma once

#include <variant>

#include "orifeat/common.hpp"
#include "orifeat/features.hpp"
#include "orifeat/so3.hpp"
#include "orifeat/trajio.hpp"

// Cα point clouds as a manifold modulo rigid motion. The metric at a base
// configuration is the pull-back of the pairwise-distance map,
//   M = Σ_{i<j} ∇d_ij ∇d_ijᵀ,  d_ij = ‖x_i − x_j‖,
// i.e. blocks M_ii = Σ_j e_ij e_ijᵀ and M_ij = −e_ij e_ijᵀ with unit bond
// directions e_ij. Its null space holds the rigid motions. The log map at the
// base p is the Gauss–Newton step that reproduces the distance changes:
//   log_p(x) = M⁺ Jᵀ (d(x) − d(p)),
// where M⁺ keeps only eigenvalues ≥ δ·λ_max. Both the assembly and the log
// cost O(R²) per configuration.
namespace orifeat::pointcloud {

using trajio::Points;

struct PointcloudSettings {
  double delta = 0.1;
  so3::MeanSettings mean_settings{256, 1.0, 1.0};

  void validate() const;
};

/// 3R × 3R metric tensor at `cloud` (R × 3).
Matrix metric_tensor(const Points& cloud);

struct PseudoInverse {
  Matrix pinv;
  Eigen::Index rank = 0;
  double lambda_max = 0.0;
};

/// Eigendecomposition-based pseudo-inverse keeping eigenvalues ≥ rel_cutoff·λ_max.
PseudoInverse metric_pseudo_inverse(const Matrix& metric, double rel_cutoff);

/// Base configuration with its cached metric pseudo-inverse.
class TangentSpace {
 public:
  TangentSpace(Points base, double delta);

  const Points& base() const { return base_; }
  const Matrix& metric_pinv() const { return pinv_.pinv; }
  Eigen::Index rank() const { return pinv_.rank; }

  /// 3R tangent vector (residue-major xyz) pointing from the base to `cloud`.
  Vector log(const Points& cloud) const;
  /// First-order retraction: base + v.
  Points exp(const Vector& v) const;

 private:
  Points base_;
  PseudoInverse pinv_;
};

struct MeanResult {
  Points mean;
  bool converged = false;
  int iters = 0;
  double gradient_norm = 0.0;
};

/// Gradient descent on the point-cloud manifold, started from the first cloud.
MeanResult intrinsic_mean(std::span<const Points> clouds, const PointcloudSettings& settings);

struct IntrinsicMeanReference {};
using PointcloudReference = std::variant<Points, IntrinsicMeanReference>;

/// Per-frame tangent vectors of the Cα clouds. Kind Pointcloud for a fixed
/// reference configuration, PointcloudMean for the intrinsic mean.
features::FeatureMatrix pointcloud_features(const trajio::BackboneTrajectory& traj, const PointcloudReference& ref,
                                            const PointcloudSettings& settings = {});

}  // namespace orifeat::pointcloud
