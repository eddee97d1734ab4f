#include "orifeat/similarity.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace orifeat::similarity {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

void require_square(const Matrix& m, const char* what) {
  if (m.rows() != m.cols()) throw DomainError(std::string(what) + ": matrix is not square");
}

}  // namespace

const char* kind_name(PairwiseKind kind) {
  switch (kind) {
    case PairwiseKind::Rmsd: return "rmsd";
    case PairwiseKind::Lddt: return "lddt";
    case PairwiseKind::Gram: return "gram";
    case PairwiseKind::Rank1: return "rank1";
  }
  return "?";
}

double ca_rmsd(const trajio::Points& a, const trajio::Points& b) { return trajio::kabsch(a, b).rmsd; }

PairwiseMatrix pairwise_rmsd(const trajio::BackboneTrajectory& traj) {
  const std::size_t t = traj.frames();
  if (t < 2) throw DomainError("pairwise RMSD needs at least 2 frames");
  std::vector<trajio::Points> ca(t);
  for (std::size_t i = 0; i < t; ++i) ca[i] = traj.frame(i).ca();

  PairwiseMatrix out;
  out.kind = PairwiseKind::Rmsd;
  out.values = Matrix::Zero(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(t));
  parallel_for(t, [&](std::size_t i) {
    for (std::size_t j = i + 1; j < t; ++j) {
      double r = 0.0;
      try {
        r = ca_rmsd(ca[j], ca[i]);
      } catch (const DegenerateGeometryError& e) {
        throw DegenerateGeometryError("frames " + std::to_string(i) + "," + std::to_string(j) + ": " + e.what());
      }
      out.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = r;
    }
  });
  out.values.triangularView<Eigen::StrictlyLower>() = out.values.transpose();
  return out;
}

std::optional<double> lddt(const trajio::Points& reference, const trajio::Points& target, const LddtOptions& opts) {
  if (reference.rows() != target.rows()) throw DomainError("lDDT: residue counts differ");
  const Eigen::Index r = reference.rows();
  std::array<std::size_t, 4> preserved{};
  std::size_t contacts = 0;
  for (Eigen::Index i = 0; i < r; ++i) {
    for (Eigen::Index j = i + 1; j < r; ++j) {
      const double d_ref = (reference.row(i) - reference.row(j)).norm();
      if (!(d_ref < opts.r0)) continue;
      ++contacts;
      const double dev = std::abs((target.row(i) - target.row(j)).norm() - d_ref);
      for (std::size_t k = 0; k < opts.thresholds.size(); ++k) preserved[k] += dev < opts.thresholds[k] ? 1 : 0;
    }
  }
  if (contacts == 0) return std::nullopt;
  double score = 0.0;
  for (std::size_t k = 0; k < preserved.size(); ++k)
    score += static_cast<double>(preserved[k]) / static_cast<double>(contacts);
  return score / static_cast<double>(opts.thresholds.size());
}

PairwiseMatrix pairwise_lddt(const trajio::BackboneTrajectory& traj, const LddtOptions& opts, bool symmetrize) {
  const std::size_t t = traj.frames();
  std::vector<trajio::Points> ca(t);
  for (std::size_t i = 0; i < t; ++i) ca[i] = traj.frame(i).ca();

  PairwiseMatrix out;
  out.kind = PairwiseKind::Lddt;
  out.symmetrized = symmetrize;
  out.values.resize(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(t));
  parallel_for(t, [&](std::size_t i) {
    for (std::size_t j = 0; j < t; ++j)
      out.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = lddt(ca[i], ca[j], opts).value_or(kNaN);
  });
  if (symmetrize) {
    const Matrix directed = out.values;
    out.values = 0.5 * (directed + directed.transpose());
  }
  return out;
}

PairwiseMatrix gram(const Matrix& f) {
  if (!f.allFinite()) throw DomainError("Gram matrix: non-finite features");
  PairwiseMatrix out;
  out.kind = PairwiseKind::Gram;
  out.values = Matrix::Zero(f.rows(), f.rows());
  out.values.selfadjointView<Eigen::Lower>().rankUpdate(f);
  out.values.triangularView<Eigen::StrictlyUpper>() = out.values.transpose();
  return out;
}

Matrix Rank1Decomposition::component(Eigen::Index k) const {
  if (k < 0 || k >= size()) throw DomainError("rank-1 component index out of range");
  const Vector& q = eigenvectors_.col(k);
  return eigenvalues_[k] * q * q.transpose();
}

Matrix Rank1Decomposition::reconstruction(Eigen::Index k) const {
  k = std::min(k, size());
  const Matrix q = eigenvectors_.leftCols(k);
  return q * eigenvalues_.head(k).asDiagonal() * q.transpose();
}

Rank1Decomposition rank1(const Matrix& g, Eigen::Index k) {
  require_square(g, "rank1");
  const double scale = std::max(1.0, g.cwiseAbs().maxCoeff());
  if ((g - g.transpose()).cwiseAbs().maxCoeff() > 1e-9 * scale) throw DomainError("rank1: matrix is not symmetric");
  if (k < 1) throw DomainError("rank1: k must be positive");
  k = std::min(k, g.rows());
  Eigen::SelfAdjointEigenSolver<Matrix> eig(g);
  if (eig.info() != Eigen::Success) throw NumericalError("Gram eigendecomposition did not converge");
  const Eigen::Index n = g.rows();
  Vector values(k);
  Matrix vectors(n, k);
  for (Eigen::Index i = 0; i < k; ++i) {
    values[i] = eig.eigenvalues()[n - 1 - i];
    vectors.col(i) = eig.eigenvectors().col(n - 1 - i);
  }
  return Rank1Decomposition(std::move(values), std::move(vectors));
}

Rank1Decomposition rank1(const PairwiseMatrix& g, Eigen::Index k) { return rank1(g.values, k); }

Vector average_ranks(std::span<const double> x) {
  const std::size_t n = x.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return x[a] < x[b]; });
  Vector ranks(static_cast<Eigen::Index>(n));
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && x[order[j + 1]] == x[order[i]]) ++j;
    const double rank = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[static_cast<Eigen::Index>(order[k])] = rank;
    i = j + 1;
  }
  return ranks;
}

std::optional<double> spearman(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw DomainError("spearman: inputs differ in length");
  if (a.size() < 2) return std::nullopt;
  Vector ra = average_ranks(a);
  Vector rb = average_ranks(b);
  ra.array() -= ra.mean();
  rb.array() -= rb.mean();
  const double saa = ra.squaredNorm(), sbb = rb.squaredNorm();
  if (saa == 0.0 || sbb == 0.0) return std::nullopt;
  // sqrt(s·s) == s exactly, so a self-correlation comes out as exactly 1.
  return std::clamp(ra.dot(rb) / std::sqrt(saa * sbb), -1.0, 1.0);
}

std::vector<double> lower_triangle(const Matrix& m) {
  require_square(m, "lower_triangle");
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(m.rows() * (m.rows() - 1) / 2));
  for (Eigen::Index i = 1; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < i; ++j) out.push_back(m(i, j));
  return out;
}

CorrelationReport spearman_lower_triangle(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows()) throw DomainError("spearman_lower_triangle: matrices differ in size");
  const auto la = lower_triangle(a);
  const auto lb = lower_triangle(b);
  std::vector<double> xa, xb;
  for (std::size_t i = 0; i < la.size(); ++i) {
    if (std::isnan(la[i]) || std::isnan(lb[i])) continue;
    xa.push_back(la[i]);
    xb.push_back(lb[i]);
  }
  CorrelationReport out;
  out.n_pairs = xa.size();
  out.rho = spearman(xa, xb);
  return out;
}

}  // namespace orifeat::similarity
