#pragma once

#include <filesystem>
#include <optional>
#include <set>
#include <vector>

#include "orifeat/common.hpp"

// Cluster post-processing and agreement scores. Label −1 marks outliers.
namespace orifeat::clustering {

using Labels = std::vector<int>;
inline constexpr int kOutlier = -1;

/// Renumbers clusters so that 0 is the largest; equal sizes keep the order of
/// their original ids. Outliers stay −1.
Labels sort_by_size(const Labels& labels);

/// Number of clusters (max label + 1) after validating labels ≥ −1.
int cluster_count(const Labels& labels);

struct GaussianCluster {
  Vector mean;
  Matrix covariance;  // maximum-likelihood estimate
  double log_ref_density = 0.0;  // log of the 95th-percentile member density

  double log_pdf(const Vector& x) const;
};

struct GmmOptions {
  double eps = 0.01;
  double percentile = 95.0;
};

struct GmmExpansion {
  Labels labels;  // cluster ids unchanged, outliers possibly assigned
  std::vector<GaussianCluster> clusters;
  /// Best p_k(x)/p_k^ref per former outlier frame; NaN for frames labeled on input.
  std::vector<double> best_ratio;
};

/// Fits one Gaussian per cluster and assigns each outlier to the cluster with
/// the highest density relative to its reference density, if that ratio ≥ eps.
GmmExpansion gmm_expand(const Matrix& embedding, const Labels& labels, const GmmOptions& opts = {});

/// Linear-interpolation percentile (q in [0, 100]).
double percentile(std::vector<double> values, double q);

struct Merge {
  int a = 0;  // node ids: < n are points, n + i is the cluster made by merge i
  int b = 0;
  double height = 0.0;
  int size = 0;
};

struct Dendrogram {
  std::size_t n = 0;
  std::vector<Merge> merges;  // nondecreasing height

  /// Flat clusters joining every merge with height ≤ distance; size-sorted.
  Labels cut(double distance) const;
};

/// Ward linkage on Euclidean rows (nearest-neighbour chain). Heights follow the
/// usual convention sqrt(2 n_a n_b / (n_a + n_b)) · ‖c_a − c_b‖.
Dendrogram ward_linkage(const Matrix& x);

inline Labels ward_cluster(const Matrix& x, double cut_distance) { return ward_linkage(x).cut(cut_distance); }

/// Mean silhouette over labeled frames with a precomputed distance matrix.
/// Singletons contribute 0. nullopt with fewer than 2 clusters.
std::optional<double> silhouette_precomputed(const Matrix& dist, const Labels& labels);

struct Concordance {
  std::optional<double> ami;
  std::optional<double> ari;
  std::size_t n_coassigned = 0;
};

/// AMI (arithmetic normalization, hypergeometric expected MI) on frames labeled in both.
std::optional<double> ami(const Labels& a, const Labels& b);
std::optional<double> ari(const Labels& a, const Labels& b);
Concordance concordance(const Labels& a, const Labels& b);

/// Dropped clusters become outliers; the rest are re-sorted by size.
Labels curate(const Labels& labels, const std::set<int>& drop);

/// CSV "frame,label"; frames must cover 0..T−1 exactly once.
Labels read_labels(const std::filesystem::path& path);
void write_labels(const Labels& labels, const std::filesystem::path& path);

}  // namespace orifeat::clustering
