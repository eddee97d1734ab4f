#pragma once

#include <optional>
#include <span>
#include <vector>

#include "orifeat/common.hpp"
#include "orifeat/features.hpp"
#include "orifeat/kinetics.hpp"
#include "orifeat/trajio.hpp"

// Protein–protein association: interface RMSD, centroid distance, a KDE-based
// bound/unbound threshold, two-step PCA with residue contributions and a
// k-nearest-neighbour mutual information estimate.
namespace orifeat::association {

struct InterfaceDefinition {
  char chain_a = 'A';
  char chain_b = 'B';
  std::vector<std::size_t> residues_a;  // structure residue indices
  std::vector<std::size_t> residues_b;
  double cutoff = 10.0;

  bool empty() const { return residues_a.empty() && residues_b.empty(); }
  /// residues_a followed by residues_b.
  std::vector<std::size_t> joint() const;
};

/// Cα atoms of either chain within `cutoff` Å of any Cα of the other chain.
/// Uses the first two chains of the structure.
InterfaceDefinition detect_interface(const trajio::Structure& crystal, double cutoff = 10.0);

/// RMSD of the interface Cα after one joint superposition onto the crystal.
double irmsd(const trajio::Structure& frame, const trajio::Structure& crystal, const InterfaceDefinition& iface);
Vector irmsd_series(const trajio::BackboneTrajectory& traj, const trajio::Structure& crystal,
                    const InterfaceDefinition& iface);

/// Distance between the unweighted Cα centroids of two chains.
double cog_distance(const trajio::Structure& frame, char chain_a, char chain_b);
/// Uses the first two chains.
Vector cog_series(const trajio::BackboneTrajectory& traj);

struct KdeOptions {
  int grid_points = 512;
  /// Kernel standard deviation in metric units; Scott's rule when absent.
  std::optional<double> bandwidth;
  std::size_t min_samples = 100;
};

struct KdeResult {
  /// Grid point of steepest PDF descent, strictly inside the sample range.
  std::optional<double> threshold;
  double bandwidth = 0.0;
  Vector grid;
  Vector pdf;
  Vector derivative;
};

/// Gaussian KDE on an evenly spaced grid over [min, max]; nullopt threshold for
/// (near-)constant input.
KdeResult kde_threshold(std::span<const double> metric, const KdeOptions& opts = {});

/// 1 where metric < threshold (bound), else 0.
std::vector<int> bound_labels(std::span<const double> metric, double threshold);

struct TwoStepPca {
  kinetics::PcaModel stage1_a;
  kinetics::PcaModel stage1_b;
  kinetics::PcaModel stage2;
  Matrix projections;    // T × 2, whitened
  Matrix contributions;  // (R_a + R_b) × 2; monomer A residues first
  std::size_t residues_a = 0;
};

/// Whitened 2-component PCA per monomer, then on the T × 4 concatenation.
/// Residue contributions propagate the unit component loadings through both stages.
TwoStepPca two_step_pca(const features::FeatureMatrix& fa, const features::FeatureMatrix& fb);

/// Residue indices sorted by decreasing contribution to component `i`.
std::vector<std::size_t> top_residues(const TwoStepPca& model, int component, std::size_t count);

/// Continuous–discrete kNN mutual information (nats, clamped at 0). Columns of
/// `x` are scaled to unit variance; Euclidean distances.
double knn_mi(const Matrix& x, std::span<const int> labels, int k = 3);
inline double knn_mi(std::span<const double> x, std::span<const int> labels, int k = 3) {
  return knn_mi(Matrix(Eigen::Map<const Vector>(x.data(), static_cast<Eigen::Index>(x.size()))), labels, k);
}

}  // namespace orifeat::association
