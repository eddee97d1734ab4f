#include "orifeat/features.hpp"

#include <array>
#include <cmath>

namespace orifeat::features {

using trajio::Atom;

namespace {

// Minimum N–Cα–C angle (radians) for a well-defined residue frame.
constexpr double kMinBondAngle = 1e-6;

constexpr std::array<std::string_view, 8> kKindNames = {
    "orientation", "orientation_mean", "orientation_axis", "orientation_angle",
    "ca",          "torsion",          "pointcloud",       "pointcloud_mean"};

std::string_view component_name(FeatureKind kind, int c) {
  static constexpr std::array<std::string_view, 3> w = {"wx", "wy", "wz"};
  static constexpr std::array<std::string_view, 3> u = {"ux", "uy", "uz"};
  static constexpr std::array<std::string_view, 3> xyz = {"x", "y", "z"};
  static constexpr std::array<std::string_view, 3> v = {"vx", "vy", "vz"};
  static constexpr std::array<std::string_view, 4> tor = {"sin_phi", "cos_phi", "sin_psi", "cos_psi"};
  switch (kind) {
    case FeatureKind::Orientation:
    case FeatureKind::OrientationMean: return w[c];
    case FeatureKind::OrientationAxis: return u[c];
    case FeatureKind::OrientationAngle: return "theta";
    case FeatureKind::CA: return xyz[c];
    case FeatureKind::Torsion: return tor[c];
    case FeatureKind::Pointcloud:
    case FeatureKind::PointcloudMean: return v[c];
  }
  return "?";
}

std::vector<Column> default_columns(FeatureKind kind, Eigen::Index cols) {
  const int width = columns_per_residue(kind);
  if (cols % width != 0)
    throw StructuralError("feature width " + std::to_string(cols) + " is not a multiple of " + std::to_string(width));
  std::vector<Column> out(static_cast<std::size_t>(cols));
  for (Eigen::Index j = 0; j < cols; ++j)
    out[j] = Column{static_cast<std::uint32_t>(j / width), static_cast<std::uint8_t>(j % width), false};
  return out;
}

void demean_columns(Matrix& m) {
  if (m.rows() == 0) return;
  m.rowwise() -= m.colwise().mean();
}

}  // namespace

std::string_view kind_name(FeatureKind kind) { return kKindNames.at(static_cast<std::size_t>(kind)); }

std::optional<FeatureKind> parse_kind(std::string_view name) {
  for (std::size_t i = 0; i < kKindNames.size(); ++i)
    if (kKindNames[i] == name) return static_cast<FeatureKind>(i);
  return std::nullopt;
}

int columns_per_residue(FeatureKind kind) {
  switch (kind) {
    case FeatureKind::OrientationAngle: return 1;
    case FeatureKind::Torsion: return 4;
    default: return 3;
  }
}

FeatureMatrix::FeatureMatrix(Matrix data, FeatureKind kind, std::vector<Column> columns)
    : data_(std::move(data)), kind_(kind), columns_(std::move(columns)) {
  if (static_cast<Eigen::Index>(columns_.size()) != data_.cols())
    throw StructuralError("feature column map does not match matrix width");
  if (data_.cols() % columns_per_residue(kind_) != 0)
    throw StructuralError("feature width inconsistent with kind " + std::string(kind_name(kind_)));
}

FeatureMatrix::FeatureMatrix(Matrix data, FeatureKind kind)
    : FeatureMatrix(std::move(data), kind, default_columns(kind, data.cols())) {}

std::size_t FeatureMatrix::residues() const {
  return static_cast<std::size_t>(data_.cols() / columns_per_residue(kind_));
}

std::vector<Eigen::Index> FeatureMatrix::residue_columns(std::size_t residue) const {
  std::vector<Eigen::Index> out;
  for (std::size_t j = 0; j < columns_.size(); ++j)
    if (columns_[j].residue == residue) out.push_back(static_cast<Eigen::Index>(j));
  return out;
}

std::string FeatureMatrix::column_name(Eigen::Index j) const {
  const Column& c = columns_.at(static_cast<std::size_t>(j));
  return "r" + std::to_string(c.residue) + "_" + std::string(component_name(kind_, c.component));
}

// ---------------------------------------------------------------------------

LcsStack::LcsStack(std::size_t frames, std::size_t residues, std::vector<so3::Rotation> data)
    : frames_(frames), residues_(residues), data_(std::move(data)) {
  if (data_.size() != frames_ * residues_) throw StructuralError("LCS stack size mismatch");
}

std::vector<so3::Rotation> LcsStack::residue_series(std::size_t r) const {
  std::vector<so3::Rotation> out(frames_);
  for (std::size_t t = 0; t < frames_; ++t) out[t] = at(t, r);
  return out;
}

so3::Rotation residue_frame(const Vec3& n_atom, const Vec3& ca, const Vec3& c_atom) {
  const Vec3 u = (n_atom - ca).normalized();
  const Vec3 w = (c_atom - ca).normalized();
  const Vec3 cross = u.cross(w);
  const double s = cross.norm();
  if (!(s > std::sin(kMinBondAngle))) throw DegenerateGeometryError("collinear N-CA-C backbone");
  const Vec3 n = cross / s;
  const Vec3 v = u.cross(n);
  Mat3 m;
  m.col(0) = u;
  m.col(1) = n;
  m.col(2) = v;
  return so3::Rotation::unchecked(m);
}

LcsStack build_lcs(const trajio::BackboneTrajectory& traj) {
  const std::size_t frames = traj.frames(), residues = traj.residues();
  std::vector<so3::Rotation> data(frames * residues);
  parallel_for(frames, [&](std::size_t t) {
    for (std::size_t r = 0; r < residues; ++r) {
      try {
        data[t * residues + r] =
            residue_frame(traj.atom(t, r, Atom::N), traj.atom(t, r, Atom::CA), traj.atom(t, r, Atom::C));
      } catch (const DegenerateGeometryError& e) {
        throw DegenerateGeometryError(std::string(e.what()) + " at frame " + std::to_string(t) + ", residue " +
                                      std::to_string(r));
      }
    }
  });
  return LcsStack(frames, residues, std::move(data));
}

LcsStack build_lcs(const trajio::Structure& s) {
  const auto one = std::vector<trajio::Structure>{s};
  return build_lcs(trajio::BackboneTrajectory::from_frames(one));
}

std::vector<so3::MeanResult> residue_means(const LcsStack& lcs, const so3::MeanSettings& settings) {
  if (lcs.frames() == 0) throw DomainError("intrinsic-mean reference needs at least one frame");
  std::vector<so3::MeanResult> out(lcs.residues());
  parallel_for(lcs.residues(), [&](std::size_t r) {
    const auto series = lcs.residue_series(r);
    out[r] = so3::intrinsic_mean(series, settings);
  });
  std::size_t unconverged = 0;
  for (const auto& m : out) unconverged += m.converged ? 0 : 1;
  if (unconverged > 0)
    warn(std::to_string(unconverged) + " residue intrinsic mean(s) did not converge in " +
         std::to_string(settings.max_iters) + " iterations");
  return out;
}

FeatureMatrix orientation_features(const LcsStack& lcs, const OrientationReference& ref) {
  std::vector<so3::Rotation> reference;
  FeatureKind kind;
  double eps = so3::kDefaultLogEps;
  if (const auto* fixed = std::get_if<std::vector<so3::Rotation>>(&ref)) {
    if (fixed->size() != lcs.residues())
      throw StructuralError("orientation reference has " + std::to_string(fixed->size()) + " residues, trajectory has " +
                            std::to_string(lcs.residues()));
    reference = *fixed;
    kind = FeatureKind::Orientation;
  } else {
    const auto& settings = std::get<IntrinsicMeanReference>(ref).settings;
    for (const auto& m : residue_means(lcs, settings)) reference.push_back(m.mean);
    kind = FeatureKind::OrientationMean;
    eps = settings.log_eps;
  }

  std::vector<so3::Rotation> ref_inv(reference.size());
  for (std::size_t r = 0; r < reference.size(); ++r) ref_inv[r] = reference[r].inverse();

  Matrix data(static_cast<Eigen::Index>(lcs.frames()), static_cast<Eigen::Index>(3 * lcs.residues()));
  parallel_for(lcs.frames(), [&](std::size_t t) {
    for (std::size_t r = 0; r < lcs.residues(); ++r) {
      const Vec3 w = so3::log_map(ref_inv[r] * lcs.at(t, r), eps);
      data.block<1, 3>(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(3 * r)) = w.transpose();
    }
  });
  return FeatureMatrix(std::move(data), kind);
}

std::pair<FeatureMatrix, FeatureMatrix> axis_angle_split(const FeatureMatrix& f) {
  if (f.kind() != FeatureKind::OrientationMean)
    throw DomainError("axis_angle_split expects OrientationMean features, got " + std::string(kind_name(f.kind())));
  const Eigen::Index rows = f.frames();
  const Eigen::Index residues = static_cast<Eigen::Index>(f.residues());
  Matrix axis(rows, 3 * residues);
  Matrix angle(rows, residues);
  for (Eigen::Index t = 0; t < rows; ++t) {
    for (Eigen::Index r = 0; r < residues; ++r) {
      const Vec3 w = f.data().block<1, 3>(t, 3 * r).transpose();
      const double theta = w.norm();
      angle(t, r) = theta;
      axis.block<1, 3>(t, 3 * r) = theta > 0.0 ? Eigen::RowVector3d((w / theta).transpose()) : Eigen::RowVector3d::Zero();
    }
  }
  return {FeatureMatrix(std::move(axis), FeatureKind::OrientationAxis),
          FeatureMatrix(std::move(angle), FeatureKind::OrientationAngle)};
}

FeatureMatrix ca_features(const trajio::BackboneTrajectory& traj) {
  Matrix data(static_cast<Eigen::Index>(traj.frames()), static_cast<Eigen::Index>(3 * traj.residues()));
  for (std::size_t t = 0; t < traj.frames(); ++t)
    for (std::size_t r = 0; r < traj.residues(); ++r)
      data.block<1, 3>(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(3 * r)) =
          traj.atom(t, r, Atom::CA).transpose();
  demean_columns(data);
  return FeatureMatrix(std::move(data), FeatureKind::CA);
}

double dihedral(const Vec3& p0, const Vec3& p1, const Vec3& p2, const Vec3& p3) {
  const Vec3 b1 = p1 - p0;
  const Vec3 b2 = p2 - p1;
  const Vec3 b3 = p3 - p2;
  const Vec3 n2 = b2.cross(b3);
  return std::atan2(b2.norm() * b1.dot(n2), b1.cross(b2).dot(n2));
}

TorsionAngles torsion_angles(const trajio::BackboneTrajectory& traj) {
  const std::size_t residues = traj.residues();
  if (residues < 2) throw DomainError("torsion features need at least 2 residues");
  const auto& chain = traj.chain_ids();
  TorsionAngles out;
  out.phi = Matrix::Zero(static_cast<Eigen::Index>(traj.frames()), static_cast<Eigen::Index>(residues));
  out.psi = out.phi;
  out.phi_defined.assign(residues, false);
  out.psi_defined.assign(residues, false);
  for (std::size_t r = 0; r < residues; ++r) {
    out.phi_defined[r] = r > 0 && chain[r - 1] == chain[r];
    out.psi_defined[r] = r + 1 < residues && chain[r + 1] == chain[r];
  }
  parallel_for(traj.frames(), [&](std::size_t t) {
    const auto ti = static_cast<Eigen::Index>(t);
    for (std::size_t r = 0; r < residues; ++r) {
      const auto ri = static_cast<Eigen::Index>(r);
      if (out.phi_defined[r])
        out.phi(ti, ri) = dihedral(traj.atom(t, r - 1, Atom::C), traj.atom(t, r, Atom::N), traj.atom(t, r, Atom::CA),
                                   traj.atom(t, r, Atom::C));
      if (out.psi_defined[r])
        out.psi(ti, ri) = dihedral(traj.atom(t, r, Atom::N), traj.atom(t, r, Atom::CA), traj.atom(t, r, Atom::C),
                                   traj.atom(t, r + 1, Atom::N));
    }
  });
  return out;
}

FeatureMatrix torsion_features(const trajio::BackboneTrajectory& traj, bool demean) {
  const TorsionAngles angles = torsion_angles(traj);
  const auto residues = static_cast<Eigen::Index>(traj.residues());
  Matrix data(angles.phi.rows(), 4 * residues);
  for (Eigen::Index r = 0; r < residues; ++r) {
    data.col(4 * r + 0) = angles.phi.col(r).array().sin();
    data.col(4 * r + 1) = angles.phi.col(r).array().cos();
    data.col(4 * r + 2) = angles.psi.col(r).array().sin();
    data.col(4 * r + 3) = angles.psi.col(r).array().cos();
  }
  if (demean) demean_columns(data);
  std::vector<Column> columns;
  for (Eigen::Index r = 0; r < residues; ++r) {
    const auto res = static_cast<std::uint32_t>(r);
    const bool phi_missing = !angles.phi_defined[r];
    const bool psi_missing = !angles.psi_defined[r];
    columns.push_back({res, 0, phi_missing});
    columns.push_back({res, 1, phi_missing});
    columns.push_back({res, 2, psi_missing});
    columns.push_back({res, 3, psi_missing});
  }
  return FeatureMatrix(std::move(data), FeatureKind::Torsion, std::move(columns));
}

}  // namespace orifeat::features
