#include <cmath>

#include "orifeat/trajio.hpp"

namespace orifeat::trajio {

namespace {

// Relative size of the second singular value of the covariance below which
// the fit is not unique (collinear or coincident points).
constexpr double kRankTol = 1e-10;

}  // namespace

Points Superposition::apply(const Points& x) const {
  Points out = x * rotation.matrix().transpose();
  out.rowwise() += translation.transpose();
  return out;
}

Superposition kabsch(const Points& moving, const Points& target) {
  if (moving.rows() != target.rows()) throw DomainError("kabsch: point sets differ in size");
  if (moving.rows() < 3) throw DomainError("kabsch: need at least 3 points");
  if (!moving.allFinite() || !target.allFinite()) throw DomainError("kabsch: non-finite coordinates");

  const Eigen::RowVector3d cm = moving.colwise().mean();
  const Eigen::RowVector3d ct = target.colwise().mean();
  const Points p = moving.rowwise() - cm;
  const Points q = target.rowwise() - ct;
  const Mat3 h = p.transpose() * q;

  Eigen::JacobiSVD<Mat3> svd(h, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Vec3 sv = svd.singularValues();
  if (!(sv[0] > 0.0) || sv[1] <= kRankTol * sv[0])
    throw DegenerateGeometryError("kabsch: rank-deficient covariance (collinear or coincident points)");

  Mat3 v = svd.matrixV();
  const Mat3& u = svd.matrixU();
  if ((v * u.transpose()).determinant() < 0.0) v.col(2) *= -1.0;
  const Mat3 r = v * u.transpose();

  Superposition out;
  out.rotation = so3::Rotation::unchecked(r);
  out.translation = ct.transpose() - r * cm.transpose();
  const Points fitted = out.apply(moving);
  out.rmsd = std::sqrt((fitted - target).rowwise().squaredNorm().mean());
  return out;
}

Structure align_structure(const Structure& s, const ReferenceStructure& ref, const AlignOptions& opts) {
  require_same_topology(s.chain_ids(), ref.chain_ids(), "align");
  Structure out = s;

  auto fit_and_apply = [&](std::span<const std::size_t> residues) {
    const Structure mov = s.subset(residues);
    const Structure tgt = ref.subset(residues);
    const Superposition sup = kabsch(mov.select(opts.selection), tgt.select(opts.selection));
    for (std::size_t r : residues)
      for (int a = 0; a < kAtomsPerResidue; ++a)
        out.set_atom(r, static_cast<Atom>(a), sup.apply(s.atom(r, static_cast<Atom>(a))));
  };

  if (opts.per_chain) {
    for (const auto& [chain, residues] : s.chains()) {
      try {
        fit_and_apply(residues);
      } catch (const DegenerateGeometryError& e) {
        throw DegenerateGeometryError("chain " + std::string(1, chain) + ": " + e.what());
      }
    }
  } else {
    std::vector<std::size_t> all(s.residues());
    for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
    fit_and_apply(all);
  }
  return out;
}

BackboneTrajectory align_trajectory(const BackboneTrajectory& traj, const ReferenceStructure& ref,
                                    const AlignOptions& opts) {
  require_same_topology(traj.chain_ids(), ref.chain_ids(), "align_trajectory");
  BackboneTrajectory out = traj;
  parallel_for(traj.frames(), [&](std::size_t t) {
    try {
      out.set_frame(t, align_structure(traj.frame(t), ref, opts));
    } catch (const DegenerateGeometryError& e) {
      throw DegenerateGeometryError("frame " + std::to_string(t) + ": " + e.what());
    }
  });
  return out;
}

}  // namespace orifeat::trajio
