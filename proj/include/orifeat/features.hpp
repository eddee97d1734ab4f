#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "orifeat/common.hpp"
#include "orifeat/so3.hpp"
#include "orifeat/trajio.hpp"

namespace orifeat::features {

enum class FeatureKind : std::uint8_t {
  Orientation = 0,
  OrientationMean = 1,
  OrientationAxis = 2,
  OrientationAngle = 3,
  CA = 4,
  Torsion = 5,
  Pointcloud = 6,
  PointcloudMean = 7,
};

std::string_view kind_name(FeatureKind kind);
std::optional<FeatureKind> parse_kind(std::string_view name);
int columns_per_residue(FeatureKind kind);

struct Column {
  std::uint32_t residue = 0;
  std::uint8_t component = 0;
  /// Torsion columns of undefined terminal angles (encoded as angle 0).
  bool placeholder = false;
};

/// T × d feature matrix; rows are frames.
class FeatureMatrix {
 public:
  FeatureMatrix() = default;
  FeatureMatrix(Matrix data, FeatureKind kind, std::vector<Column> columns);
  /// Column map derived from the kind's per-residue width.
  FeatureMatrix(Matrix data, FeatureKind kind);

  const Matrix& data() const { return data_; }
  FeatureKind kind() const { return kind_; }
  Eigen::Index frames() const { return data_.rows(); }
  Eigen::Index dims() const { return data_.cols(); }
  std::size_t residues() const;
  const std::vector<Column>& columns() const { return columns_; }
  std::vector<Eigen::Index> residue_columns(std::size_t residue) const;
  std::string column_name(Eigen::Index j) const;

 private:
  Matrix data_;
  FeatureKind kind_ = FeatureKind::Orientation;
  std::vector<Column> columns_;
};

/// Per-residue local coordinate systems, T × R rotations, frame-major.
class LcsStack {
 public:
  LcsStack() = default;
  LcsStack(std::size_t frames, std::size_t residues, std::vector<so3::Rotation> data);

  std::size_t frames() const { return frames_; }
  std::size_t residues() const { return residues_; }
  const so3::Rotation& at(std::size_t t, std::size_t r) const { return data_[t * residues_ + r]; }
  /// Peptide-plane normal (second LCS column).
  Vec3 normal(std::size_t t, std::size_t r) const { return at(t, r).matrix().col(1); }
  /// All frames of one residue.
  std::vector<so3::Rotation> residue_series(std::size_t r) const;
  std::span<const so3::Rotation> frame(std::size_t t) const {
    return std::span<const so3::Rotation>(data_).subspan(t * residues_, residues_);
  }
  std::span<const so3::Rotation> data() const { return data_; }

 private:
  std::size_t frames_ = 0;
  std::size_t residues_ = 0;
  std::vector<so3::Rotation> data_;
};

/// Columns (u, n, v) with u = unit(N − Cα), n = unit(u × unit(C − Cα)), v = u × n.
so3::Rotation residue_frame(const Vec3& n, const Vec3& ca, const Vec3& c);

LcsStack build_lcs(const trajio::BackboneTrajectory& traj);
LcsStack build_lcs(const trajio::Structure& s);

struct IntrinsicMeanReference {
  so3::MeanSettings settings{256, 0.1, 1e-3};
};

/// Either one reference rotation per residue, or per-residue intrinsic means.
using OrientationReference = std::variant<std::vector<so3::Rotation>, IntrinsicMeanReference>;

/// Per-residue intrinsic means over all frames (residue-parallel).
std::vector<so3::MeanResult> residue_means(const LcsStack& lcs, const so3::MeanSettings& settings);

/// Block r of row t is log(R_ref,r⁻¹ · LCS(r,t)); no demeaning or scaling.
/// Kind is Orientation for a fixed reference and OrientationMean for intrinsic means.
FeatureMatrix orientation_features(const LcsStack& lcs, const OrientationReference& ref);

/// Splits OrientationMean blocks into unit axes (zero for zero blocks) and angles.
std::pair<FeatureMatrix, FeatureMatrix> axis_angle_split(const FeatureMatrix& f);

/// Concatenated Cα positions, column means over frames subtracted.
FeatureMatrix ca_features(const trajio::BackboneTrajectory& traj);

/// Signed dihedral angle (radians) of four points.
double dihedral(const Vec3& p0, const Vec3& p1, const Vec3& p2, const Vec3& p3);

struct TorsionAngles {
  Matrix phi;  // T × R, radians; 0 where undefined
  Matrix psi;
  std::vector<bool> phi_defined;  // per residue
  std::vector<bool> psi_defined;
};

/// φ needs the previous residue's C and ψ the next residue's N within the same chain.
TorsionAngles torsion_angles(const trajio::BackboneTrajectory& traj);

/// (sin φ, cos φ, sin ψ, cos ψ) per residue; demeaned per column when `demean`.
FeatureMatrix torsion_features(const trajio::BackboneTrajectory& traj, bool demean = true);

}  // namespace orifeat::features
