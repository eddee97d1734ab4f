#include "orifeat/pointcloud.hpp"

#include <cmath>

namespace orifeat::pointcloud {

namespace {

// Pairs closer than this carry no usable direction and are left out of the metric.
constexpr double kMinPairDistance = 1e-9;

// Jᵀ·(d(x) − d(p)) with J the Jacobian of the pair distances at p.
Vector pulled_back_distance_change(const Points& base, const Points& cloud) {
  const Eigen::Index r = base.rows();
  Vector out = Vector::Zero(3 * r);
  for (Eigen::Index i = 0; i < r; ++i) {
    for (Eigen::Index j = i + 1; j < r; ++j) {
      const Vec3 diff = (base.row(i) - base.row(j)).transpose();
      const double d0 = diff.norm();
      if (d0 < kMinPairDistance) continue;
      // Same expression as d0 so an unchanged pair gives exactly zero.
      const Vec3 moved = (cloud.row(i) - cloud.row(j)).transpose();
      const double d1 = moved.norm();
      const Vec3 g = diff * ((d1 - d0) / d0);
      out.segment<3>(3 * i) += g;
      out.segment<3>(3 * j) -= g;
    }
  }
  return out;
}

}  // namespace

void PointcloudSettings::validate() const {
  if (!(delta > 0.0 && delta < 1.0)) throw DomainError("pointcloud delta must lie in (0, 1)");
  mean_settings.validate();
}

Matrix metric_tensor(const Points& cloud) {
  const Eigen::Index r = cloud.rows();
  Matrix m = Matrix::Zero(3 * r, 3 * r);
  for (Eigen::Index i = 0; i < r; ++i) {
    for (Eigen::Index j = i + 1; j < r; ++j) {
      Vec3 e = (cloud.row(i) - cloud.row(j)).transpose();
      const double d = e.norm();
      if (d < kMinPairDistance) continue;
      e /= d;
      const Mat3 outer = e * e.transpose();
      m.block<3, 3>(3 * i, 3 * i) += outer;
      m.block<3, 3>(3 * j, 3 * j) += outer;
      m.block<3, 3>(3 * i, 3 * j) -= outer;
      m.block<3, 3>(3 * j, 3 * i) -= outer;
    }
  }
  return m;
}

PseudoInverse metric_pseudo_inverse(const Matrix& metric, double rel_cutoff) {
  if (metric.rows() != metric.cols()) throw DomainError("metric tensor must be square");
  Eigen::SelfAdjointEigenSolver<Matrix> eig(metric);
  if (eig.info() != Eigen::Success) throw NumericalError("metric eigendecomposition did not converge");

  PseudoInverse out;
  const Vector& lambda = eig.eigenvalues();
  out.lambda_max = lambda.size() > 0 ? lambda.maxCoeff() : 0.0;
  out.pinv = Matrix::Zero(metric.rows(), metric.cols());
  if (!(out.lambda_max > 0.0)) return out;

  const double cutoff = rel_cutoff * out.lambda_max;
  Vector inv = Vector::Zero(lambda.size());
  for (Eigen::Index k = 0; k < lambda.size(); ++k) {
    if (lambda[k] >= cutoff) {
      inv[k] = 1.0 / lambda[k];
      ++out.rank;
    }
  }
  const Matrix& q = eig.eigenvectors();
  out.pinv = q * inv.asDiagonal() * q.transpose();
  return out;
}

TangentSpace::TangentSpace(Points base, double delta) : base_(std::move(base)) {
  if (base_.rows() < 2) throw DomainError("point cloud needs at least 2 points");
  if (!base_.allFinite()) throw DomainError("point cloud has non-finite coordinates");
  pinv_ = metric_pseudo_inverse(metric_tensor(base_), delta);
}

Vector TangentSpace::log(const Points& cloud) const {
  if (cloud.rows() != base_.rows()) throw StructuralError("point cloud size differs from its base");
  return pinv_.pinv * pulled_back_distance_change(base_, cloud);
}

Points TangentSpace::exp(const Vector& v) const {
  if (v.size() != 3 * base_.rows()) throw StructuralError("tangent vector size differs from its base");
  Points out = base_;
  for (Eigen::Index i = 0; i < base_.rows(); ++i) out.row(i) += v.segment<3>(3 * i).transpose();
  return out;
}

MeanResult intrinsic_mean(std::span<const Points> clouds, const PointcloudSettings& settings) {
  settings.validate();
  if (clouds.empty()) throw DomainError("intrinsic mean of an empty point-cloud sequence");
  const auto& ms = settings.mean_settings;

  MeanResult out;
  out.mean = clouds.front();
  const Eigen::Index dim = 3 * out.mean.rows();
  for (;;) {
    const TangentSpace ts(out.mean, settings.delta);
    std::vector<Vector> logs(clouds.size());
    parallel_for(clouds.size(), [&](std::size_t t) { logs[t] = ts.log(clouds[t]); });
    Vector g = Vector::Zero(dim);
    for (const auto& l : logs) g += l;
    g /= static_cast<double>(clouds.size());
    out.gradient_norm = g.norm();
    if (out.gradient_norm < ms.tol) {
      out.converged = true;
      break;
    }
    if (out.iters == ms.max_iters) break;
    out.mean = ts.exp(ms.learning_rate * g);
    ++out.iters;
  }
  return out;
}

features::FeatureMatrix pointcloud_features(const trajio::BackboneTrajectory& traj, const PointcloudReference& ref,
                                            const PointcloudSettings& settings) {
  settings.validate();
  const std::size_t frames = traj.frames();
  std::vector<Points> clouds(frames);
  for (std::size_t t = 0; t < frames; ++t) clouds[t] = traj.frame(t).ca();

  Points base;
  features::FeatureKind kind;
  if (const auto* fixed = std::get_if<Points>(&ref)) {
    if (static_cast<std::size_t>(fixed->rows()) != traj.residues())
      throw StructuralError("point-cloud reference has " + std::to_string(fixed->rows()) + " points, trajectory has " +
                            std::to_string(traj.residues()) + " residues");
    base = *fixed;
    kind = features::FeatureKind::Pointcloud;
  } else {
    const MeanResult mean = intrinsic_mean(clouds, settings);
    if (!mean.converged)
      warn("point-cloud intrinsic mean did not converge in " + std::to_string(settings.mean_settings.max_iters) +
           " iterations");
    base = mean.mean;
    kind = features::FeatureKind::PointcloudMean;
  }

  const TangentSpace ts(std::move(base), settings.delta);
  Matrix data(static_cast<Eigen::Index>(frames), static_cast<Eigen::Index>(3 * traj.residues()));
  parallel_for(frames, [&](std::size_t t) { data.row(static_cast<Eigen::Index>(t)) = ts.log(clouds[t]).transpose(); });
  return features::FeatureMatrix(std::move(data), kind);
}

}  // namespace orifeat::pointcloud
