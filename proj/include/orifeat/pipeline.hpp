#pragma once

#include <optional>

#include "orifeat/features.hpp"
#include "orifeat/pointcloud.hpp"
#include "orifeat/so3.hpp"
#include "orifeat/trajio.hpp"

// One entry point per feature kind, shared by the CLI and the array bridge so
// both produce identical numbers.
namespace orifeat::pipeline {

struct FeaturizeOptions {
  /// Fixed reference for Orientation and Pointcloud; frame 0 when absent.
  std::optional<trajio::Structure> reference;
  so3::MeanSettings orientation_mean{256, 0.1, 1e-3};
  pointcloud::PointcloudSettings pointcloud;
  bool demean_torsion = true;
};

features::FeatureMatrix featurize(const trajio::BackboneTrajectory& traj, features::FeatureKind kind,
                                  const FeaturizeOptions& opts = {});

}  // namespace orifeat::pipeline
