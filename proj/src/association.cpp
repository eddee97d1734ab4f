#include "orifeat/association.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include <boost/math/special_functions/digamma.hpp>

namespace orifeat::association {

namespace {

constexpr double kInvSqrt2Pi = 0.3989422804014327;

std::pair<std::vector<std::size_t>, std::vector<std::size_t>> first_two_chains(const std::vector<char>& chain_ids,
                                                                             char* a, char* b) {
  std::vector<char> order;
  for (char c : chain_ids)
    if (std::find(order.begin(), order.end(), c) == order.end()) order.push_back(c);
  if (order.size() < 2) throw DomainError("association analysis needs two chains, found " + std::to_string(order.size()));
  *a = order[0];
  *b = order[1];
  std::vector<std::size_t> ra, rb;
  for (std::size_t i = 0; i < chain_ids.size(); ++i) {
    if (chain_ids[i] == *a) ra.push_back(i);
    if (chain_ids[i] == *b) rb.push_back(i);
  }
  return {ra, rb};
}

trajio::Points gather_ca(const trajio::Structure& s, std::span<const std::size_t> residues) {
  trajio::Points p(static_cast<Eigen::Index>(residues.size()), 3);
  for (std::size_t i = 0; i < residues.size(); ++i)
    p.row(static_cast<Eigen::Index>(i)) = s.atom(residues[i], trajio::Atom::CA).transpose();
  return p;
}

Eigen::RowVector3d centroid(const trajio::Structure& s, char chain) {
  Eigen::RowVector3d sum = Eigen::RowVector3d::Zero();
  std::size_t n = 0;
  for (std::size_t i = 0; i < s.residues(); ++i)
    if (s.chain_ids()[i] == chain) {
      sum += s.atom(i, trajio::Atom::CA).transpose();
      ++n;
    }
  if (n == 0) throw DomainError(std::string("chain ") + chain + " has no residues");
  return sum / static_cast<double>(n);
}

double sample_std(std::span<const double> x) {
  const double n = static_cast<double>(x.size());
  const double mean = std::accumulate(x.begin(), x.end(), 0.0) / n;
  double ss = 0.0;
  for (double v : x) ss += (v - mean) * (v - mean);
  return std::sqrt(ss / (n - 1.0));
}

double digamma(double x) { return boost::math::digamma(x); }

}  // namespace

std::vector<std::size_t> InterfaceDefinition::joint() const {
  std::vector<std::size_t> out = residues_a;
  out.insert(out.end(), residues_b.begin(), residues_b.end());
  return out;
}

InterfaceDefinition detect_interface(const trajio::Structure& crystal, double cutoff) {
  if (!(cutoff > 0.0)) throw DomainError("interface cutoff must be positive");
  InterfaceDefinition out;
  out.cutoff = cutoff;
  const auto [ra, rb] = first_two_chains(crystal.chain_ids(), &out.chain_a, &out.chain_b);
  const trajio::Points pa = gather_ca(crystal, ra);
  const trajio::Points pb = gather_ca(crystal, rb);
  std::vector<char> in_a(ra.size(), 0), in_b(rb.size(), 0);
  for (Eigen::Index i = 0; i < pa.rows(); ++i)
    for (Eigen::Index j = 0; j < pb.rows(); ++j)
      if ((pa.row(i) - pb.row(j)).norm() <= cutoff) in_a[static_cast<std::size_t>(i)] = in_b[static_cast<std::size_t>(j)] = 1;
  for (std::size_t i = 0; i < ra.size(); ++i)
    if (in_a[i]) out.residues_a.push_back(ra[i]);
  for (std::size_t j = 0; j < rb.size(); ++j)
    if (in_b[j]) out.residues_b.push_back(rb[j]);
  return out;
}

double irmsd(const trajio::Structure& frame, const trajio::Structure& crystal, const InterfaceDefinition& iface) {
  if (iface.empty()) throw DomainError("IRMSD needs a non-empty interface");
  trajio::require_same_topology(frame.chain_ids(), crystal.chain_ids(), "irmsd");
  const auto idx = iface.joint();
  return trajio::kabsch(gather_ca(frame, idx), gather_ca(crystal, idx)).rmsd;
}

Vector irmsd_series(const trajio::BackboneTrajectory& traj, const trajio::Structure& crystal,
                    const InterfaceDefinition& iface) {
  if (iface.empty()) throw DomainError("IRMSD needs a non-empty interface");
  trajio::require_same_topology(traj.chain_ids(), crystal.chain_ids(), "irmsd");
  Vector out(static_cast<Eigen::Index>(traj.frames()));
  const auto idx = iface.joint();
  const trajio::Points target = gather_ca(crystal, idx);
  parallel_for(traj.frames(), [&](std::size_t t) {
    try {
      out[static_cast<Eigen::Index>(t)] = trajio::kabsch(gather_ca(traj.frame(t), idx), target).rmsd;
    } catch (const DegenerateGeometryError& e) {
      throw DegenerateGeometryError("frame " + std::to_string(t) + ": " + e.what());
    }
  });
  return out;
}

double cog_distance(const trajio::Structure& frame, char chain_a, char chain_b) {
  return (centroid(frame, chain_a) - centroid(frame, chain_b)).norm();
}

Vector cog_series(const trajio::BackboneTrajectory& traj) {
  char a = 0, b = 0;
  first_two_chains(traj.chain_ids(), &a, &b);
  Vector out(static_cast<Eigen::Index>(traj.frames()));
  parallel_for(traj.frames(), [&](std::size_t t) { out[static_cast<Eigen::Index>(t)] = cog_distance(traj.frame(t), a, b); });
  return out;
}

KdeResult kde_threshold(std::span<const double> metric, const KdeOptions& opts) {
  if (metric.size() < opts.min_samples)
    throw DomainError("KDE threshold needs at least " + std::to_string(opts.min_samples) + " samples, got " +
                      std::to_string(metric.size()));
  if (opts.grid_points < 3) throw DomainError("KDE grid needs at least 3 points");
  for (double v : metric)
    if (!std::isfinite(v)) throw DomainError("KDE input contains non-finite values");

  KdeResult out;
  const auto [lo_it, hi_it] = std::minmax_element(metric.begin(), metric.end());
  const double lo = *lo_it, hi = *hi_it;
  const double spread = sample_std(metric);
  if (!(hi - lo > 1e-12 * std::max(1.0, std::abs(hi))) || !(spread > 0.0)) return out;

  const double n = static_cast<double>(metric.size());
  out.bandwidth = opts.bandwidth.value_or(spread * std::pow(n, -0.2));
  if (!(out.bandwidth > 0.0)) throw DomainError("KDE bandwidth must be positive");
  const Eigen::Index g = opts.grid_points;
  out.grid = Vector::LinSpaced(g, lo, hi);
  out.pdf = Vector::Zero(g);
  const double inv_h = 1.0 / out.bandwidth;
  parallel_for(static_cast<std::size_t>(g), [&](std::size_t i) {
    const double x = out.grid[static_cast<Eigen::Index>(i)];
    double s = 0.0;
    for (double v : metric) {
      const double z = (x - v) * inv_h;
      s += std::exp(-0.5 * z * z);
    }
    out.pdf[static_cast<Eigen::Index>(i)] = s * kInvSqrt2Pi * inv_h / n;
  });

  // Central differences inside, one-sided at the ends.
  const double dx = out.grid[1] - out.grid[0];
  out.derivative.resize(g);
  out.derivative[0] = (out.pdf[1] - out.pdf[0]) / dx;
  out.derivative[g - 1] = (out.pdf[g - 1] - out.pdf[g - 2]) / dx;
  for (Eigen::Index i = 1; i + 1 < g; ++i) out.derivative[i] = (out.pdf[i + 1] - out.pdf[i - 1]) / (2.0 * dx);

  Eigen::Index best = 1;
  for (Eigen::Index i = 2; i + 1 < g; ++i)
    if (out.derivative[i] < out.derivative[best]) best = i;
  out.threshold = out.grid[best];
  return out;
}

std::vector<int> bound_labels(std::span<const double> metric, double threshold) {
  std::vector<int> out(metric.size());
  for (std::size_t i = 0; i < metric.size(); ++i) out[i] = metric[i] < threshold ? 1 : 0;
  return out;
}

TwoStepPca two_step_pca(const features::FeatureMatrix& fa, const features::FeatureMatrix& fb) {
  if (fa.frames() != fb.frames()) throw DomainError("two-step PCA: monomers have different frame counts");
  TwoStepPca out;
  auto stage1 = [](const features::FeatureMatrix& f, const char* name) {
    try {
      return kinetics::pca_fit_components(f.data(), 2, true);
    } catch (const DomainError& e) {
      throw DomainError(std::string("monomer ") + name + " features are degenerate: " + e.what());
    }
  };
  out.stage1_a = stage1(fa, "A");
  out.stage1_b = stage1(fb, "B");

  Matrix z(fa.frames(), 4);
  z.leftCols(2) = out.stage1_a.transform(fa.data());
  z.rightCols(2) = out.stage1_b.transform(fb.data());
  out.stage2 = kinetics::pca_fit_components(z, 2, true);
  out.projections = out.stage2.transform(z);

  // Loadings of original features on the combined components: W1 (d × 4, block
  // diagonal) times W2 (4 × 2).
  const Eigen::Index da = fa.dims(), db = fb.dims();
  const Matrix w2 = out.stage2.components.transpose();
  Matrix p(da + db, 2);
  p.topRows(da) = out.stage1_a.components.transpose() * w2.topRows(2);
  p.bottomRows(db) = out.stage1_b.components.transpose() * w2.bottomRows(2);
  const Matrix sq = p.cwiseAbs2();

  out.residues_a = fa.residues();
  const std::size_t total = fa.residues() + fb.residues();
  out.contributions = Matrix::Zero(static_cast<Eigen::Index>(total), 2);
  for (Eigen::Index k = 0; k < da; ++k)
    out.contributions.row(fa.columns()[static_cast<std::size_t>(k)].residue) += sq.row(k);
  for (Eigen::Index k = 0; k < db; ++k)
    out.contributions.row(static_cast<Eigen::Index>(fa.residues() + fb.columns()[static_cast<std::size_t>(k)].residue)) +=
        sq.row(da + k);
  for (Eigen::Index i = 0; i < 2; ++i) out.contributions.col(i) /= sq.col(i).sum();
  return out;
}

std::vector<std::size_t> top_residues(const TwoStepPca& model, int component, std::size_t count) {
  if (component < 0 || component >= model.contributions.cols()) throw DomainError("component index out of range");
  std::vector<std::size_t> idx(static_cast<std::size_t>(model.contributions.rows()));
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
    return model.contributions(static_cast<Eigen::Index>(a), component) >
           model.contributions(static_cast<Eigen::Index>(b), component);
  });
  idx.resize(std::min(count, idx.size()));
  return idx;
}

double knn_mi(const Matrix& x_in, std::span<const int> labels, int k) {
  if (static_cast<std::size_t>(x_in.rows()) != labels.size()) throw DomainError("knn_mi: label count differs from rows");
  if (k < 1) throw DomainError("knn_mi: k must be positive");
  if (!x_in.allFinite()) throw DomainError("knn_mi: non-finite input");

  std::map<int, std::vector<std::size_t>> classes;
  for (std::size_t i = 0; i < labels.size(); ++i) classes[labels[i]].push_back(i);
  if (classes.size() < 2) throw DomainError("knn_mi needs at least two label classes");

  // Unit-variance columns (no centering).
  Matrix x = x_in;
  for (Eigen::Index c = 0; c < x.cols(); ++c) {
    const double sd = std::sqrt((x.col(c).array() - x.col(c).mean()).square().mean());
    if (sd > 0.0) x.col(c) /= sd;
  }

  // Points whose label is unique carry no neighbour information.
  std::vector<std::size_t> kept;
  for (const auto& [label, members] : classes)
    if (members.size() > 1) kept.insert(kept.end(), members.begin(), members.end());
  std::sort(kept.begin(), kept.end());
  const std::size_t n = kept.size();

  std::vector<double> radius(labels.size(), 0.0);
  std::vector<int> k_used(labels.size(), 0);
  std::vector<double> class_size(labels.size(), 0.0);
  const bool one_d = x.cols() == 1;

  for (const auto& [label, members] : classes) {
    if (members.size() < 2) continue;
    const int kk = std::min<int>(k, static_cast<int>(members.size()) - 1);
    if (one_d) {
      std::vector<std::pair<double, std::size_t>> sorted;
      for (std::size_t i : members) sorted.emplace_back(x(static_cast<Eigen::Index>(i), 0), i);
      std::sort(sorted.begin(), sorted.end());
      for (std::size_t p = 0; p < sorted.size(); ++p) {
        // Merge outward from p until kk neighbours are consumed.
        std::size_t left = p, right = p;
        double d = 0.0;
        for (int step = 0; step < kk; ++step) {
          const double dl = left > 0 ? sorted[p].first - sorted[left - 1].first : INFINITY;
          const double dr = right + 1 < sorted.size() ? sorted[right + 1].first - sorted[p].first : INFINITY;
          if (dl <= dr) {
            d = dl;
            --left;
          } else {
            d = dr;
            ++right;
          }
        }
        radius[sorted[p].second] = std::nextafter(d, 0.0);
      }
    } else {
      parallel_for(members.size(), [&](std::size_t a) {
        std::vector<double> dist;
        dist.reserve(members.size() - 1);
        for (std::size_t b = 0; b < members.size(); ++b)
          if (b != a) dist.push_back((x.row(static_cast<Eigen::Index>(members[a])) - x.row(static_cast<Eigen::Index>(members[b]))).norm());
        std::nth_element(dist.begin(), dist.begin() + (kk - 1), dist.end());
        radius[members[a]] = std::nextafter(dist[static_cast<std::size_t>(kk - 1)], 0.0);
      });
    }
    for (std::size_t i : members) {
      k_used[i] = kk;
      class_size[i] = static_cast<double>(members.size());
    }
  }

  std::vector<double> m(n, 0.0);
  if (one_d) {
    std::vector<double> all(n);
    for (std::size_t q = 0; q < n; ++q) all[q] = x(static_cast<Eigen::Index>(kept[q]), 0);
    std::sort(all.begin(), all.end());
    for (std::size_t q = 0; q < n; ++q) {
      const double v = x(static_cast<Eigen::Index>(kept[q]), 0), r = radius[kept[q]];
      // Compare distances, not v ± r: the sum can round onto the excluded neighbour.
      const auto lo = std::partition_point(all.begin(), all.end(), [&](double e) { return e < v && v - e > r; });
      const auto hi = std::partition_point(lo, all.end(), [&](double e) { return !(e > v && e - v > r); });
      m[q] = static_cast<double>(hi - lo);
    }
  } else {
    parallel_for(n, [&](std::size_t q) {
      const double r = radius[kept[q]];
      std::size_t count = 0;
      for (std::size_t s = 0; s < n; ++s)
        if ((x.row(static_cast<Eigen::Index>(kept[q])) - x.row(static_cast<Eigen::Index>(kept[s]))).norm() <= r) ++count;
      m[q] = static_cast<double>(count);
    });
  }

  double mean_k = 0.0, mean_class = 0.0, mean_m = 0.0;
  for (std::size_t q = 0; q < n; ++q) {
    mean_k += digamma(k_used[kept[q]]);
    mean_class += digamma(class_size[kept[q]]);
    mean_m += digamma(m[q]);
  }
  const double nn = static_cast<double>(n);
  const double mi = digamma(nn) + (mean_k - mean_class - mean_m) / nn;
  return std::max(mi, 0.0);
}

}  // namespace orifeat::association
