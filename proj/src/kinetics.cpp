#include "orifeat/kinetics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace orifeat::kinetics {

namespace {

// Eigenvalues below this fraction of the largest count as zero (rank decisions,
// inverse square roots).
constexpr double kRankTol = 1e-12;
constexpr double kInvSqrtTol = 1e-10;

// Deterministic sign: the entry of largest magnitude is made positive.
template <class V>
void fix_sign(V&& v) {
  Eigen::Index imax = 0;
  v.cwiseAbs().maxCoeff(&imax);
  if (v[imax] < 0.0) v = -v;
}

struct Spectrum {
  Vector values;   // descending, clamped at 0
  Matrix vectors;  // columns
};

Spectrum descending_spectrum(const Matrix& sym) {
  Eigen::SelfAdjointEigenSolver<Matrix> eig(sym);
  if (eig.info() != Eigen::Success) throw NumericalError("covariance eigendecomposition did not converge");
  Spectrum s;
  s.values = eig.eigenvalues().reverse().cwiseMax(0.0);
  s.vectors = eig.eigenvectors().rowwise().reverse();
  return s;
}

Matrix inverse_sqrt(const Matrix& sym) {
  const Spectrum s = descending_spectrum(sym);
  const double cutoff = kInvSqrtTol * (s.values.size() > 0 ? s.values[0] : 0.0);
  Vector inv = Vector::Zero(s.values.size());
  for (Eigen::Index i = 0; i < s.values.size(); ++i)
    if (s.values[i] > cutoff && s.values[i] > 0.0) inv[i] = 1.0 / std::sqrt(s.values[i]);
  return s.vectors * inv.asDiagonal() * s.vectors.transpose();
}

PcaModel fit_spectrum(const Matrix& x, bool whiten, std::optional<Eigen::Index> fixed_k, double threshold) {
  if (x.rows() < 2) throw DomainError("PCA needs at least 2 frames");
  if (x.cols() < 1) throw DomainError("PCA needs at least 1 feature column");
  if (!x.allFinite()) throw DomainError("PCA input contains non-finite values");

  PcaModel m;
  m.whiten = whiten;
  m.mean = x.colwise().mean().transpose();
  const Matrix xc = x.rowwise() - m.mean.transpose();
  const Matrix cov = (xc.transpose() * xc) / static_cast<double>(x.rows() - 1);
  Spectrum s = descending_spectrum(cov);
  const double total = s.values.sum();

  if (!(total > 0.0)) {
    if (fixed_k) throw DomainError("feature matrix has zero variance; cannot keep " + std::to_string(*fixed_k) + " components");
    warn("zero-variance features; PCA falls back to a single degenerate component");
    m.degenerate = true;
    m.components = Matrix::Zero(1, x.cols());
    m.components(0, 0) = 1.0;
    m.explained_variance = Vector::Zero(1);
    m.explained_variance_ratio = Vector::Zero(1);
    return m;
  }

  Eigen::Index rank = 0;
  while (rank < s.values.size() && s.values[rank] > kRankTol * s.values[0]) ++rank;

  Eigen::Index k = 0;
  if (fixed_k) {
    k = *fixed_k;
    if (k < 1 || k > x.cols()) throw DomainError("requested component count out of range");
    if (k > rank)
      throw DomainError("feature rank " + std::to_string(rank) + " is below the requested " + std::to_string(k) +
                        " components");
  } else {
    double cum = 0.0;
    while (k < rank) {
      cum += s.values[k] / total;
      ++k;
      if (cum >= threshold * (1.0 - 1e-12)) break;
    }
  }

  m.components.resize(k, x.cols());
  for (Eigen::Index i = 0; i < k; ++i) {
    Vector c = s.vectors.col(i);
    fix_sign(c);
    m.components.row(i) = c.transpose();
  }
  m.explained_variance = s.values.head(k);
  m.explained_variance_ratio = m.explained_variance / total;
  return m;
}

}  // namespace

Matrix PcaModel::transform(const Matrix& x) const {
  if (x.cols() != mean.size()) throw DomainError("PCA transform: feature width mismatch");
  Matrix y = (x.rowwise() - mean.transpose()) * components.transpose();
  if (whiten && !degenerate)
    for (Eigen::Index j = 0; j < y.cols(); ++j) y.col(j) /= std::sqrt(explained_variance[j]);
  return y;
}

Matrix PcaModel::inverse_transform(const Matrix& y) const {
  Matrix z = y;
  if (whiten && !degenerate)
    for (Eigen::Index j = 0; j < z.cols(); ++j) z.col(j) *= std::sqrt(explained_variance[j]);
  Matrix x = z * components;
  x.rowwise() += mean.transpose();
  return x;
}

PcaModel pca_fit(const Matrix& x, double evr_threshold, bool whiten) {
  if (!(evr_threshold > 0.0 && evr_threshold <= 1.0)) throw DomainError("EVR threshold must lie in (0, 1]");
  return fit_spectrum(x, whiten, std::nullopt, evr_threshold);
}

PcaModel pca_fit_components(const Matrix& x, Eigen::Index k, bool whiten) {
  return fit_spectrum(x, whiten, k, 1.0);
}

// ---------------------------------------------------------------------------

double Timescale::value() const {
  switch (kind) {
    case Kind::Finite: return frames;
    case Kind::Infinite: return std::numeric_limits<double>::infinity();
    case Kind::Undefined: break;
  }
  return std::numeric_limits<double>::quiet_NaN();
}

Timescale implied_timescale(double lambda, double lag) {
  if (!(lag >= 1.0)) throw DomainError("lag must be at least 1 frame");
  if (std::isnan(lambda) || lambda <= 0.0) return {Timescale::Kind::Undefined, 0.0};
  if (lambda >= 1.0) return {Timescale::Kind::Infinite, 0.0};
  return {Timescale::Kind::Finite, -lag / std::log(lambda)};
}

Matrix TicaModel::transform(const Matrix& x, Eigen::Index k) const {
  if (x.cols() != mean.size()) throw DomainError("TICA transform: feature width mismatch");
  k = std::min(k, eigenvectors.cols());
  return (x.rowwise() - mean.transpose()) * eigenvectors.leftCols(k);
}

TicaModel tica_fit(const Matrix& x, std::size_t lag, const TicaOptions& opts) {
  const auto frames = static_cast<std::size_t>(x.rows());
  if (lag < 1 || lag >= frames) throw DomainError("TICA lag must satisfy 1 <= lag < T (lag " + std::to_string(lag) +
                                                  ", T " + std::to_string(frames) + ")");
  if (!x.allFinite()) throw DomainError("TICA input contains non-finite values");
  const Eigen::Index d = x.cols();
  const auto n = static_cast<Eigen::Index>(frames - lag);
  const auto tau = static_cast<Eigen::Index>(lag);

  TicaModel m;
  m.lag = lag;
  m.symmetrized = opts.symmetrize;
  m.mean = x.colwise().mean().transpose();
  const Matrix xc = x.rowwise() - m.mean.transpose();
  const auto x0 = xc.topRows(n);
  const auto xt = xc.middleRows(tau, n);

  Matrix c0, ct;
  if (opts.symmetrize) {
    c0 = (x0.transpose() * x0 + xt.transpose() * xt) / (2.0 * static_cast<double>(n));
    const Matrix c0t = x0.transpose() * xt;
    ct = (c0t + c0t.transpose()) / (2.0 * static_cast<double>(n));
  } else {
    c0 = x0.transpose() * x0 / static_cast<double>(n);
    ct = x0.transpose() * xt / static_cast<double>(n);
  }
  const double trace = c0.trace();
  if (!(trace > 0.0)) throw DomainError("TICA input has zero variance");
  c0.diagonal().array() += opts.regularization * trace / static_cast<double>(d);

  Vector lambda(d);
  Matrix vectors(d, d);
  if (opts.symmetrize) {
    Eigen::GeneralizedSelfAdjointEigenSolver<Matrix> eig(ct, c0);
    if (eig.info() != Eigen::Success) throw NumericalError("TICA generalized eigenproblem did not converge");
    lambda = eig.eigenvalues();
    vectors = eig.eigenvectors();
  } else {
    Eigen::LLT<Matrix> llt(c0);
    if (llt.info() != Eigen::Success) throw NumericalError("C(0) is not positive definite");
    const Matrix l_inv = llt.matrixL().solve(Matrix::Identity(d, d));
    const Matrix a = l_inv * ct * l_inv.transpose();
    Eigen::EigenSolver<Matrix> eig(a);
    if (eig.info() != Eigen::Success) throw NumericalError("TICA eigenproblem did not converge");
    if (eig.eigenvalues().imag().cwiseAbs().maxCoeff() > 1e-8)
      warn("nonsymmetric TICA produced complex eigenvalues; keeping real parts");
    lambda = eig.eigenvalues().real();
    vectors = l_inv.transpose() * eig.eigenvectors().real();
    for (Eigen::Index i = 0; i < d; ++i) {
      const double norm = std::sqrt(vectors.col(i).dot(c0 * vectors.col(i)));
      if (norm > 0.0) vectors.col(i) /= norm;
    }
  }

  std::vector<Eigen::Index> order(static_cast<std::size_t>(d));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](Eigen::Index a, Eigen::Index b) { return std::abs(lambda[a]) > std::abs(lambda[b]); });
  m.eigenvalues.resize(d);
  m.eigenvectors.resize(d, d);
  for (Eigen::Index i = 0; i < d; ++i) {
    m.eigenvalues[i] = lambda[order[i]];
    m.eigenvectors.col(i) = vectors.col(order[i]);
    fix_sign(m.eigenvectors.col(i));
    m.timescales.push_back(implied_timescale(m.eigenvalues[i], static_cast<double>(lag)));
  }
  m.vamp2 = vamp2_score(x, lag, d);
  return m;
}

double vamp2_score(const Matrix& x, std::size_t lag, Eigen::Index k) {
  const auto frames = static_cast<std::size_t>(x.rows());
  if (lag < 1 || lag >= frames) throw DomainError("VAMP-2 lag must satisfy 1 <= lag < T");
  if (k < 1) throw DomainError("VAMP-2 needs k >= 1");
  const auto n = static_cast<Eigen::Index>(frames - lag);
  Matrix x0 = x.topRows(n);
  Matrix xt = x.middleRows(static_cast<Eigen::Index>(lag), n);
  x0.rowwise() -= x0.colwise().mean();
  xt.rowwise() -= xt.colwise().mean();
  const double scale = 1.0 / static_cast<double>(n);
  const Matrix c00 = scale * x0.transpose() * x0;
  const Matrix ctt = scale * xt.transpose() * xt;
  const Matrix c0t = scale * x0.transpose() * xt;
  const Matrix koopman = inverse_sqrt(c00) * c0t * inverse_sqrt(ctt);
  const Vector sv = Eigen::JacobiSVD<Matrix>(koopman).singularValues();
  const Eigen::Index kk = std::min<Eigen::Index>(k, sv.size());
  return sv.head(kk).squaredNorm();
}

std::vector<std::size_t> lag_grid(std::size_t frames, const LagGrid& grid) {
  if (grid.count < 1) throw DomainError("lag grid needs at least one lag");
  if (!(grid.first_frac > 0.0 && grid.first_frac <= grid.last_frac && grid.last_frac < 1.0))
    throw DomainError("lag fractions must satisfy 0 < first <= last < 1");
  const double t = static_cast<double>(frames);
  if (grid.first_frac * t < 1.0)
    throw DomainError("trajectory too short: the smallest lag (" + std::to_string(grid.first_frac) + " of " +
                      std::to_string(frames) + " frames) is below one frame");
  std::vector<std::size_t> lags;
  for (int i = 0; i < grid.count; ++i) {
    const double f =
        grid.count == 1 ? grid.first_frac
                        : grid.first_frac + (grid.last_frac - grid.first_frac) * i / static_cast<double>(grid.count - 1);
    const auto lag = std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(f * t)));
    if (lag >= frames) break;
    if (lags.empty() || lag > lags.back()) lags.push_back(lag);
  }
  return lags;
}

std::optional<std::size_t> find_plateau(const std::vector<double>& curve, double rel_tol, int run) {
  if (run < 1) throw DomainError("plateau run length must be positive");
  const auto r = static_cast<std::size_t>(run);
  if (curve.size() < r + 1) return std::nullopt;
  for (std::size_t i = 0; i + r < curve.size(); ++i) {
    bool flat = true;
    for (std::size_t j = i; j < i + r && flat; ++j) {
      const double a = curve[j], b = curve[j + 1];
      flat = std::isfinite(a) && std::isfinite(b) && a != 0.0 && std::abs(b - a) / std::abs(a) < rel_tol;
    }
    if (flat) return i;
  }
  return std::nullopt;
}

LagSearchResult lag_search(const Matrix& x, const LagGrid& grid, const TicaOptions& opts) {
  LagSearchResult out;
  out.lags = lag_grid(static_cast<std::size_t>(x.rows()), grid);
  for (std::size_t lag : out.lags) {
    const TicaModel m = tica_fit(x, lag, opts);
    double slowest = std::numeric_limits<double>::quiet_NaN();
    for (const auto& ts : m.timescales)
      if (ts.finite() && !(ts.frames <= slowest)) slowest = ts.frames;
    out.slowest_timescales.push_back(slowest);
    out.eigenvalues.push_back(m.eigenvalues);
  }
  if (const auto idx = find_plateau(out.slowest_timescales)) out.plateau_lag = out.lags[*idx];
  return out;
}

AmuseResult amuse(const Matrix& features, const AmuseOptions& opts) {
  const auto frames = static_cast<std::size_t>(features.rows());
  if (opts.lag < 1 || opts.lag >= frames) throw DomainError("AMUSE lag must satisfy 1 <= lag < T");
  AmuseResult out;
  out.pca = pca_fit(features, opts.evr_threshold, true);
  const Matrix y = out.pca.transform(features);

  if (out.pca.degenerate) {
    warn("constant features: AMUSE returns a degenerate model");
    out.tica.lag = opts.lag;
    out.tica.symmetrized = opts.tica.symmetrize;
    out.tica.mean = Vector::Zero(1);
    out.tica.eigenvalues = Vector::Zero(1);
    out.tica.eigenvectors = Matrix::Identity(1, 1);
    out.tica.timescales = {Timescale{}};
    out.projections = Matrix::Zero(features.rows(), 1);
    return out;
  }

  out.tica = tica_fit(y, opts.lag, opts.tica);
  const Eigen::Index k = opts.vamp_k.value_or(out.pca.n_components());
  out.vamp2 = vamp2_score(y, opts.lag, k);
  out.projections = out.tica.transform(y, std::min<Eigen::Index>(2, out.pca.n_components()));
  return out;
}

}  // namespace orifeat::kinetics
