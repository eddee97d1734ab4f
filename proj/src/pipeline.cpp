#include "orifeat/pipeline.hpp"

namespace orifeat::pipeline {

using features::FeatureKind;

namespace {

trajio::Structure reference_of(const trajio::BackboneTrajectory& traj, const FeaturizeOptions& opts) {
  if (opts.reference) {
    trajio::require_same_topology(traj.chain_ids(), opts.reference->chain_ids(), "reference");
    return *opts.reference;
  }
  if (traj.frames() == 0) throw DomainError("empty trajectory");
  return traj.frame(0);
}

}  // namespace

features::FeatureMatrix featurize(const trajio::BackboneTrajectory& traj, FeatureKind kind,
                                  const FeaturizeOptions& opts) {
  switch (kind) {
    case FeatureKind::Orientation: {
      const features::LcsStack ref = features::build_lcs(reference_of(traj, opts));
      const auto frame0 = ref.frame(0);
      return features::orientation_features(features::build_lcs(traj),
                                            std::vector<so3::Rotation>(frame0.begin(), frame0.end()));
    }
    case FeatureKind::OrientationMean:
      return features::orientation_features(features::build_lcs(traj),
                                            features::IntrinsicMeanReference{opts.orientation_mean});
    case FeatureKind::OrientationAxis:
    case FeatureKind::OrientationAngle: {
      const auto [axis, angle] = features::axis_angle_split(
          featurize(traj, FeatureKind::OrientationMean, opts));
      return kind == FeatureKind::OrientationAxis ? axis : angle;
    }
    case FeatureKind::CA:
      return features::ca_features(traj);
    case FeatureKind::Torsion:
      return features::torsion_features(traj, opts.demean_torsion);
    case FeatureKind::Pointcloud:
      return pointcloud::pointcloud_features(traj, reference_of(traj, opts).ca(), opts.pointcloud);
    case FeatureKind::PointcloudMean:
      return pointcloud::pointcloud_features(traj, pointcloud::IntrinsicMeanReference{}, opts.pointcloud);
  }
  throw DomainError("unknown feature kind");
}

}  // namespace orifeat::pipeline
