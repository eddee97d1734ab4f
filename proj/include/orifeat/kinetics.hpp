#pragma once

#include <optional>
#include <vector>

#include "orifeat/common.hpp"
#include "orifeat/features.hpp"

// AMUSE: whitened PCA followed by TICA, implied timescales, lag search, VAMP-2.
namespace orifeat::kinetics {

struct PcaModel {
  Vector mean;
  Matrix components;  // k × d, orthonormal rows
  Vector explained_variance;
  Vector explained_variance_ratio;
  bool whiten = true;
  /// Zero-variance input: one placeholder component, projections are zero.
  bool degenerate = false;

  Eigen::Index n_components() const { return components.rows(); }
  Matrix transform(const Matrix& x) const;
  /// Maps (unwhitened-equivalent) projections back to feature space.
  Matrix inverse_transform(const Matrix& y) const;
};

/// Keeps the minimal k whose cumulative explained variance ratio reaches the threshold.
PcaModel pca_fit(const Matrix& x, double evr_threshold, bool whiten = true);
/// Keeps exactly `k` components.
PcaModel pca_fit_components(const Matrix& x, Eigen::Index k, bool whiten = true);

struct Timescale {
  enum class Kind { Finite, Infinite, Undefined };
  Kind kind = Kind::Undefined;
  double frames = 0.0;  // meaningful only when finite

  bool finite() const { return kind == Kind::Finite; }
  /// +inf / NaN encoding for tables.
  double value() const;
};

/// −τ / ln λ for λ ∈ (0,1); +∞ for λ ≥ 1; undefined for λ ≤ 0.
Timescale implied_timescale(double lambda, double lag);

struct TicaOptions {
  /// Reversible estimate: C(τ) symmetrized and C(0) averaged over both windows.
  bool symmetrize = true;
  /// Added to the C(0) diagonal as reg·trace(C(0))/d.
  double regularization = 1e-10;
};

struct TicaModel {
  std::size_t lag = 0;
  Vector mean;
  Vector eigenvalues;  // sorted by |λ| descending
  Matrix eigenvectors; // d × d, columns; vᵀ C(0) v = 1
  std::vector<Timescale> timescales;
  double vamp2 = 0.0;  // over all d components
  bool symmetrized = true;

  Matrix transform(const Matrix& x, Eigen::Index k) const;
};

TicaModel tica_fit(const Matrix& x, std::size_t lag, const TicaOptions& opts = {});

/// Sum of the k largest squared singular values of C00^{-1/2} C0τ Cττ^{-1/2}.
double vamp2_score(const Matrix& x, std::size_t lag, Eigen::Index k);

struct LagGrid {
  double first_frac = 0.01;
  double last_frac = 0.10;
  int count = 10;
};

/// Evenly spaced fractions of T, rounded, at least 1 frame, deduplicated.
std::vector<std::size_t> lag_grid(std::size_t frames, const LagGrid& grid = {});

struct LagSearchResult {
  std::vector<std::size_t> lags;
  /// Slowest finite implied timescale per lag (NaN if none is finite).
  std::vector<double> slowest_timescales;
  std::vector<Vector> eigenvalues;
  std::optional<std::size_t> plateau_lag;
};

/// Index of the first point whose next `run` relative changes are all below `rel_tol`.
std::optional<std::size_t> find_plateau(const std::vector<double>& curve, double rel_tol = 0.1, int run = 3);

LagSearchResult lag_search(const Matrix& x, const LagGrid& grid = {}, const TicaOptions& opts = {});

struct AmuseOptions {
  double evr_threshold = 0.95;
  std::size_t lag = 1;
  TicaOptions tica;
  /// Defaults to the number of PCA components.
  std::optional<Eigen::Index> vamp_k;
};

struct AmuseResult {
  PcaModel pca;
  TicaModel tica;
  Matrix projections;  // T × min(2, k)
  double vamp2 = 0.0;
};

AmuseResult amuse(const Matrix& features, const AmuseOptions& opts);
inline AmuseResult amuse(const features::FeatureMatrix& f, const AmuseOptions& opts) { return amuse(f.data(), opts); }

}  // namespace orifeat::kinetics
