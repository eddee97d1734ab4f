#pragma once

#include <array>
#include <optional>
#include <span>
#include <vector>

#include "orifeat/common.hpp"
#include "orifeat/features.hpp"
#include "orifeat/trajio.hpp"

// Structural ground truth (pairwise RMSD, lDDT) and feature-space Gram analysis.
namespace orifeat::similarity {

enum class PairwiseKind { Rmsd, Lddt, Gram, Rank1 };

struct PairwiseMatrix {
  Matrix values;
  PairwiseKind kind = PairwiseKind::Gram;
  /// lDDT only: the two directions were averaged.
  bool symmetrized = false;

  Eigen::Index n() const { return values.rows(); }
};

/// Cα RMSD after optimal superposition.
double ca_rmsd(const trajio::Points& a, const trajio::Points& b);

PairwiseMatrix pairwise_rmsd(const trajio::BackboneTrajectory& traj);

struct LddtOptions {
  double r0 = 15.0;
  std::array<double, 4> thresholds{0.5, 1.0, 2.0, 4.0};
};

/// Superposition-free lDDT of `target` against `reference` on Cα atoms. The
/// contact set comes from the reference; nullopt when it is empty.
std::optional<double> lddt(const trajio::Points& reference, const trajio::Points& target, const LddtOptions& opts = {});

/// T × T lDDT, entry (i, j) scoring frame j against reference frame i; averaged
/// with its transpose when `symmetrize`. Undefined entries are NaN.
PairwiseMatrix pairwise_lddt(const trajio::BackboneTrajectory& traj, const LddtOptions& opts = {},
                             bool symmetrize = true);

/// G = F Fᵀ on raw feature rows.
PairwiseMatrix gram(const Matrix& f);
inline PairwiseMatrix gram(const features::FeatureMatrix& f) { return gram(f.data()); }

/// Top-k eigenpairs of a symmetric matrix; components λ q qᵀ built on demand.
class Rank1Decomposition {
 public:
  Rank1Decomposition() = default;
  Rank1Decomposition(Vector eigenvalues, Matrix eigenvectors)
      : eigenvalues_(std::move(eigenvalues)), eigenvectors_(std::move(eigenvectors)) {}

  const Vector& eigenvalues() const { return eigenvalues_; }
  const Matrix& eigenvectors() const { return eigenvectors_; }
  Eigen::Index size() const { return eigenvalues_.size(); }
  Matrix component(Eigen::Index k) const;
  /// Sum of the first k components.
  Matrix reconstruction(Eigen::Index k) const;

 private:
  Vector eigenvalues_;
  Matrix eigenvectors_;
};

Rank1Decomposition rank1(const PairwiseMatrix& g, Eigen::Index k);
Rank1Decomposition rank1(const Matrix& g, Eigen::Index k);

/// Average ranks (1-based), ties share the mean rank.
Vector average_ranks(std::span<const double> x);

/// Spearman ρ with average ranks; nullopt if either side is constant.
std::optional<double> spearman(std::span<const double> a, std::span<const double> b);

/// Strictly-lower-triangle entries, row-major order.
std::vector<double> lower_triangle(const Matrix& m);

struct CorrelationReport {
  std::optional<double> rho;
  std::size_t n_pairs = 0;
};

/// Spearman ρ between the strict lower triangles. Pairs where either entry is
/// NaN are dropped.
CorrelationReport spearman_lower_triangle(const Matrix& a, const Matrix& b);
inline CorrelationReport spearman_lower_triangle(const PairwiseMatrix& a, const PairwiseMatrix& b) {
  return spearman_lower_triangle(a.values, b.values);
}

const char* kind_name(PairwiseKind kind);

}  // namespace orifeat::similarity
