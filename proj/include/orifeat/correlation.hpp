#pragma once

#include <optional>
#include <span>
#include <vector>

#include "orifeat/clustering.hpp"
#include "orifeat/common.hpp"
#include "orifeat/features.hpp"
#include "orifeat/trajio.hpp"

// Residue-pair correlation maps: displacement cross-correlation (DCCM) and
// peptide-plane orientation maps (DCOM). Undefined entries are NaN.
namespace orifeat::correlation {

enum class MapKind { Dccm, Dcom };

struct CorrelationMap {
  Matrix values;
  MapKind kind = MapKind::Dccm;
  std::optional<int> cluster_id;
  Vec3 e_axis = Vec3::UnitX();  // DCOM reference axis

  Eigen::Index n() const { return values.rows(); }
};

/// Frames carrying the given cluster label.
std::vector<std::size_t> frames_in_cluster(const clustering::Labels& labels, int cluster);

/// Normalized Cα displacement covariance over `frames` (all frames when empty);
/// displacements are taken from the subset mean.
CorrelationMap dccm(const trajio::BackboneTrajectory& traj, std::span<const std::size_t> frames = {});

/// atan2(⟨(n_i × n_j)·e⟩, ⟨n_i·n_j⟩) in degrees over `frames` (all when empty),
/// with n the second LCS column.
CorrelationMap dcom(const features::LcsStack& lcs, std::span<const std::size_t> frames = {},
                    const Vec3& e_axis = Vec3::UnitX());

/// ((b − a + 180) mod 360) − 180 with a floored modulo, reported in (−180, 180].
double wrap_degrees(double delta);
CorrelationMap dcom_diff(const CorrelationMap& a, const CorrelationMap& b);

}  // namespace orifeat::correlation
