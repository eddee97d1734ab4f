#include "orifeat/clustering.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <numeric>
#include <sstream>

namespace orifeat::clustering {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr double kLog2Pi = 1.8378770664093453;

// Frames labeled in both labelings, as dense cluster indices.
struct Coassigned {
  std::vector<int> a, b;
  int ka = 0, kb = 0;
};

Coassigned coassigned(const Labels& a, const Labels& b) {
  if (a.size() != b.size()) throw DomainError("labelings differ in length");
  Coassigned out;
  std::map<int, int> ma, mb;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i] < 0 || b[i] < 0) continue;
    const auto ia = ma.emplace(a[i], static_cast<int>(ma.size())).first->second;
    const auto ib = mb.emplace(b[i], static_cast<int>(mb.size())).first->second;
    out.a.push_back(ia);
    out.b.push_back(ib);
  }
  out.ka = static_cast<int>(ma.size());
  out.kb = static_cast<int>(mb.size());
  return out;
}

Eigen::MatrixXd contingency(const Coassigned& c) {
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(c.ka, c.kb);
  for (std::size_t i = 0; i < c.a.size(); ++i) m(c.a[i], c.b[i]) += 1.0;
  return m;
}

double entropy(const Vector& counts, double n) {
  double h = 0.0;
  for (Eigen::Index i = 0; i < counts.size(); ++i)
    if (counts[i] > 0.0) h -= counts[i] / n * std::log(counts[i] / n);
  return h;
}

double mutual_information(const Eigen::MatrixXd& c, double n) {
  const Vector ra = c.rowwise().sum();
  const Vector cb = c.colwise().sum().transpose();
  double mi = 0.0;
  for (Eigen::Index i = 0; i < c.rows(); ++i)
    for (Eigen::Index j = 0; j < c.cols(); ++j)
      if (c(i, j) > 0.0) mi += c(i, j) / n * std::log(n * c(i, j) / (ra[i] * cb[j]));
  return std::max(mi, 0.0);
}

// Expected mutual information under the hypergeometric permutation model.
double expected_mutual_information(const Eigen::MatrixXd& c, double n) {
  const Vector ra = c.rowwise().sum();
  const Vector cb = c.colwise().sum().transpose();
  const double lg_n = std::lgamma(n + 1.0);
  double emi = 0.0;
  for (Eigen::Index i = 0; i < ra.size(); ++i) {
    const double a = ra[i];
    for (Eigen::Index j = 0; j < cb.size(); ++j) {
      const double b = cb[j];
      const double fixed = std::lgamma(a + 1.0) + std::lgamma(b + 1.0) + std::lgamma(n - a + 1.0) +
                           std::lgamma(n - b + 1.0) - lg_n;
      const double lo = std::max(1.0, a + b - n);
      const double hi = std::min(a, b);
      for (double nij = lo; nij <= hi; nij += 1.0) {
        const double log_p = fixed - std::lgamma(nij + 1.0) - std::lgamma(a - nij + 1.0) - std::lgamma(b - nij + 1.0) -
                             std::lgamma(n - a - b + nij + 1.0);
        emi += nij / n * std::log(n * nij / (a * b)) * std::exp(log_p);
      }
    }
  }
  return emi;
}

double choose2(double x) { return 0.5 * x * (x - 1.0); }

}  // namespace

int cluster_count(const Labels& labels) {
  int k = 0;
  for (int l : labels) {
    if (l < kOutlier) throw DomainError("cluster labels must be >= -1");
    k = std::max(k, l + 1);
  }
  return k;
}

Labels sort_by_size(const Labels& labels) {
  const int k = cluster_count(labels);
  std::vector<std::size_t> size(static_cast<std::size_t>(k), 0);
  for (int l : labels)
    if (l >= 0) ++size[static_cast<std::size_t>(l)];
  std::vector<int> order;
  for (int c = 0; c < k; ++c)
    if (size[static_cast<std::size_t>(c)] > 0) order.push_back(c);
  std::stable_sort(order.begin(), order.end(), [&](int x, int y) {
    return size[static_cast<std::size_t>(x)] > size[static_cast<std::size_t>(y)];
  });
  std::vector<int> remap(static_cast<std::size_t>(k), kOutlier);
  for (std::size_t i = 0; i < order.size(); ++i) remap[static_cast<std::size_t>(order[i])] = static_cast<int>(i);
  Labels out(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i)
    out[i] = labels[i] < 0 ? kOutlier : remap[static_cast<std::size_t>(labels[i])];
  return out;
}

// ---------------------------------------------------------------------------
// GMM expansion

double GaussianCluster::log_pdf(const Vector& x) const {
  const Eigen::LLT<Matrix> llt(covariance);
  const Vector z = llt.matrixL().solve(x - mean);
  const double log_det = 2.0 * llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
  return -0.5 * (static_cast<double>(mean.size()) * kLog2Pi + log_det + z.squaredNorm());
}

double percentile(std::vector<double> values, double q) {
  if (values.empty()) throw DomainError("percentile of an empty sample");
  if (!(q >= 0.0 && q <= 100.0)) throw DomainError("percentile must lie in [0, 100]");
  std::sort(values.begin(), values.end());
  const double pos = q / 100.0 * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  return values[lo] + (pos - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

GmmExpansion gmm_expand(const Matrix& embedding, const Labels& labels, const GmmOptions& opts) {
  if (static_cast<Eigen::Index>(labels.size()) != embedding.rows())
    throw DomainError("gmm_expand: label count differs from embedding rows");
  if (!embedding.allFinite()) throw DomainError("gmm_expand: non-finite embedding");
  if (!(opts.eps > 0.0)) throw DomainError("gmm_expand: eps must be positive");
  const int k = cluster_count(labels);
  const Eigen::Index dim = embedding.cols();

  GmmExpansion out;
  out.labels = labels;
  out.best_ratio.assign(labels.size(), kNaN);
  for (int c = 0; c < k; ++c) {
    std::vector<Eigen::Index> members;
    for (std::size_t i = 0; i < labels.size(); ++i)
      if (labels[i] == c) members.push_back(static_cast<Eigen::Index>(i));
    if (members.size() < 3)
      throw DomainError("cluster " + std::to_string(c) + " has " + std::to_string(members.size()) +
                        " members; at least 3 are needed for a covariance");
    Matrix pts(static_cast<Eigen::Index>(members.size()), dim);
    for (std::size_t m = 0; m < members.size(); ++m) pts.row(static_cast<Eigen::Index>(m)) = embedding.row(members[m]);

    GaussianCluster g;
    g.mean = pts.colwise().mean().transpose();
    const Matrix centered = pts.rowwise() - g.mean.transpose();
    g.covariance = centered.transpose() * centered / static_cast<double>(members.size());
    const double trace = g.covariance.trace();
    if (!(trace > 0.0)) throw DomainError("cluster " + std::to_string(c) + " has zero spread");
    const Eigen::SelfAdjointEigenSolver<Matrix> eig(g.covariance, Eigen::EigenvaluesOnly);
    if (eig.eigenvalues().minCoeff() <= 1e-12 * trace) {
      warn("cluster " + std::to_string(c) + " covariance is singular; adding a ridge");
      g.covariance.diagonal().array() += 1e-9 * trace;
    }

    std::vector<double> lp(members.size());
    for (std::size_t m = 0; m < members.size(); ++m)
      lp[m] = g.log_pdf(pts.row(static_cast<Eigen::Index>(m)).transpose());
    const double top = *std::max_element(lp.begin(), lp.end());
    std::vector<double> rel(lp.size());
    for (std::size_t m = 0; m < lp.size(); ++m) rel[m] = std::exp(lp[m] - top);
    g.log_ref_density = std::log(percentile(rel, opts.percentile)) + top;
    out.clusters.push_back(std::move(g));
  }

  if (k == 0) return out;
  const double log_eps = std::log(opts.eps);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] != kOutlier) continue;
    const Vector x = embedding.row(static_cast<Eigen::Index>(i)).transpose();
    int best = kOutlier;
    double best_log_ratio = -std::numeric_limits<double>::infinity();
    for (int c = 0; c < k; ++c) {
      const auto& g = out.clusters[static_cast<std::size_t>(c)];
      const double r = g.log_pdf(x) - g.log_ref_density;
      if (r > best_log_ratio) {
        best_log_ratio = r;
        best = c;
      }
    }
    out.best_ratio[i] = std::exp(best_log_ratio);
    if (best_log_ratio >= log_eps) out.labels[i] = best;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Ward

Dendrogram ward_linkage(const Matrix& x) {
  const auto n = static_cast<std::size_t>(x.rows());
  if (n < 2) throw DomainError("Ward clustering needs at least 2 points");
  if (!x.allFinite()) throw DomainError("Ward clustering: non-finite embedding");

  // Slots 0..n-1 hold points, merged clusters reuse the slot of their first child.
  Matrix centroid = x;
  std::vector<double> size(n, 1.0);
  std::vector<int> node(n);
  std::iota(node.begin(), node.end(), 0);
  std::vector<char> active(n, 1);

  auto dist = [&](std::size_t i, std::size_t j) {
    const double w = 2.0 * size[i] * size[j] / (size[i] + size[j]);
    return std::sqrt(w) * (centroid.row(static_cast<Eigen::Index>(i)) - centroid.row(static_cast<Eigen::Index>(j))).norm();
  };

  struct RawMerge {
    int a, b;
    double height;
    int size;
    int id;
  };
  std::vector<RawMerge> raw;
  std::vector<std::size_t> chain;
  int next_id = static_cast<int>(n);
  std::size_t remaining = n;
  while (remaining > 1) {
    if (chain.empty())
      for (std::size_t i = 0; i < n; ++i)
        if (active[i]) {
          chain.push_back(i);
          break;
        }
    const std::size_t a = chain.back();
    const std::size_t prev = chain.size() >= 2 ? chain[chain.size() - 2] : n;
    std::size_t best = prev;
    double best_d = prev < n ? dist(a, prev) : std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < n; ++j) {
      if (!active[j] || j == a) continue;
      const double d = dist(a, j);
      if (d < best_d) {
        best_d = d;
        best = j;
      }
    }
    if (best == prev) {
      chain.pop_back();
      chain.pop_back();
      const std::size_t keep = std::min(a, prev), drop = std::max(a, prev);
      const double s = size[keep] + size[drop];
      centroid.row(static_cast<Eigen::Index>(keep)) =
          (size[keep] * centroid.row(static_cast<Eigen::Index>(keep)) +
           size[drop] * centroid.row(static_cast<Eigen::Index>(drop))) / s;
      raw.push_back({std::min(node[keep], node[drop]), std::max(node[keep], node[drop]), best_d, static_cast<int>(s),
                     next_id});
      size[keep] = s;
      node[keep] = next_id++;
      active[drop] = 0;
      --remaining;
    } else {
      chain.push_back(best);
    }
  }

  // Order merges by height and renumber merged nodes accordingly.
  std::vector<std::size_t> order(raw.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t p, std::size_t q) { return raw[p].height < raw[q].height; });
  std::map<int, int> renumber;
  Dendrogram out;
  out.n = n;
  for (std::size_t k = 0; k < order.size(); ++k) {
    const RawMerge& m = raw[order[k]];
    auto map_id = [&](int id) { return id < static_cast<int>(n) ? id : renumber.at(id); };
    const int a = map_id(m.a), b = map_id(m.b);
    out.merges.push_back({std::min(a, b), std::max(a, b), m.height, m.size});
    renumber[m.id] = static_cast<int>(n + k);
  }
  return out;
}

Labels Dendrogram::cut(double distance) const {
  std::vector<int> parent(n + merges.size());
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](int v) {
    while (parent[static_cast<std::size_t>(v)] != v) v = parent[static_cast<std::size_t>(v)] = parent[static_cast<std::size_t>(parent[static_cast<std::size_t>(v)])];
    return v;
  };
  for (std::size_t k = 0; k < merges.size(); ++k) {
    const int id = static_cast<int>(n + k);
    if (merges[k].height <= distance) {
      parent[static_cast<std::size_t>(find(merges[k].a))] = id;
      parent[static_cast<std::size_t>(find(merges[k].b))] = id;
    }
  }
  std::map<int, int> first_seen;
  Labels labels(n);
  for (std::size_t i = 0; i < n; ++i)
    labels[i] = first_seen.emplace(find(static_cast<int>(i)), static_cast<int>(first_seen.size())).first->second;
  return sort_by_size(labels);
}

// ---------------------------------------------------------------------------
// Scores

std::optional<double> silhouette_precomputed(const Matrix& dist, const Labels& labels) {
  if (dist.rows() != dist.cols() || static_cast<std::size_t>(dist.rows()) != labels.size())
    throw DomainError("silhouette: distance matrix and labels disagree in size");
  const int k = cluster_count(labels);
  std::vector<std::size_t> size(static_cast<std::size_t>(k), 0);
  for (int l : labels)
    if (l >= 0) ++size[static_cast<std::size_t>(l)];
  const auto populated = std::count_if(size.begin(), size.end(), [](std::size_t s) { return s > 0; });
  if (populated < 2) return std::nullopt;

  double total = 0.0;
  std::size_t counted = 0;
  std::vector<double> sums(static_cast<std::size_t>(k));
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] < 0) continue;
    ++counted;
    const auto own = static_cast<std::size_t>(labels[i]);
    if (size[own] == 1) continue;
    std::fill(sums.begin(), sums.end(), 0.0);
    for (std::size_t j = 0; j < labels.size(); ++j)
      if (labels[j] >= 0 && j != i) sums[static_cast<std::size_t>(labels[j])] += dist(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
    const double a = sums[own] / static_cast<double>(size[own] - 1);
    double b = std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < sums.size(); ++c)
      if (c != own && size[c] > 0) b = std::min(b, sums[c] / static_cast<double>(size[c]));
    const double denom = std::max(a, b);
    if (denom > 0.0) total += (b - a) / denom;
  }
  return total / static_cast<double>(counted);
}

std::optional<double> ari(const Labels& a, const Labels& b) {
  const Coassigned c = coassigned(a, b);
  if (c.a.empty()) return std::nullopt;
  const Eigen::MatrixXd m = contingency(c);
  const double n = static_cast<double>(c.a.size());
  double index = 0.0, sum_a = 0.0, sum_b = 0.0;
  for (Eigen::Index i = 0; i < m.size(); ++i) index += choose2(m.data()[i]);
  const Vector ra = m.rowwise().sum();
  const Vector cb = m.colwise().sum().transpose();
  for (Eigen::Index i = 0; i < ra.size(); ++i) sum_a += choose2(ra[i]);
  for (Eigen::Index j = 0; j < cb.size(); ++j) sum_b += choose2(cb[j]);
  const double pairs = choose2(n);
  const double expected = pairs > 0.0 ? sum_a * sum_b / pairs : 0.0;
  const double max_index = 0.5 * (sum_a + sum_b);
  if (max_index == expected) return 1.0;
  return (index - expected) / (max_index - expected);
}

std::optional<double> ami(const Labels& a, const Labels& b) {
  const Coassigned c = coassigned(a, b);
  if (c.a.empty()) return std::nullopt;
  if (c.ka == 1 && c.kb == 1) return 1.0;
  const Eigen::MatrixXd m = contingency(c);
  const double n = static_cast<double>(c.a.size());
  const double mi = mutual_information(m, n);
  const double emi = expected_mutual_information(m, n);
  const double h_a = entropy(m.rowwise().sum(), n);
  const double h_b = entropy(m.colwise().sum().transpose(), n);
  double denom = 0.5 * (h_a + h_b) - emi;
  constexpr double eps = std::numeric_limits<double>::epsilon();
  denom = denom < 0.0 ? std::min(denom, -eps) : std::max(denom, eps);
  return (mi - emi) / denom;
}

Concordance concordance(const Labels& a, const Labels& b) {
  Concordance out;
  out.ami = ami(a, b);
  out.ari = ari(a, b);
  out.n_coassigned = coassigned(a, b).a.size();
  return out;
}

Labels curate(const Labels& labels, const std::set<int>& drop) {
  const int k = cluster_count(labels);
  std::vector<char> present(static_cast<std::size_t>(k), 0);
  for (int l : labels)
    if (l >= 0) present[static_cast<std::size_t>(l)] = 1;
  for (int d : drop)
    if (d < 0 || d >= k || !present[static_cast<std::size_t>(d)])
      throw DomainError("cannot drop unknown cluster id " + std::to_string(d));
  Labels out = labels;
  for (int& l : out)
    if (drop.count(l)) l = kOutlier;
  return sort_by_size(out);
}

Labels read_labels(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open labels file " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw FormatError("empty labels file", 1);
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "frame,label") throw FormatError("labels header must be 'frame,label'", 1);
  std::map<long, int> rows;
  std::uint64_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::istringstream ss(line);
    long frame = 0;
    int label = 0;
    char comma = 0;
    if (!(ss >> frame >> comma >> label) || comma != ',' || !(ss >> std::ws).eof())
      throw FormatError("malformed labels row", line_no);
    if (label < kOutlier) throw FormatError("label must be >= -1", line_no);
    if (!rows.emplace(frame, label).second) throw FormatError("duplicate frame " + std::to_string(frame), line_no);
  }
  Labels out;
  for (const auto& [frame, label] : rows) {
    if (frame != static_cast<long>(out.size()))
      throw StructuralError("labels file does not cover frames 0..T-1 (missing frame " + std::to_string(out.size()) + ")");
    out.push_back(label);
  }
  return out;
}

void write_labels(const Labels& labels, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  out << "frame,label\n";
  for (std::size_t i = 0; i < labels.size(); ++i) out << i << ',' << labels[i] << '\n';
  if (!out) throw Error("write failed for " + path.string());
}

}  // namespace orifeat::clustering
