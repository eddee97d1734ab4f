#include "orifeat/bench.hpp"

#include <array>
#include <chrono>
#include <cmath>
#include <map>
#include <numbers>
#include <random>

#include "orifeat/pointcloud.hpp"
#include "orifeat/so3.hpp"

namespace orifeat::bench {

namespace {

std::uint64_t mix(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

std::uint64_t cell_seed(std::uint64_t seed, std::size_t frames, std::size_t residues, int replica) {
  return mix(seed ^ mix(frames ^ mix(residues ^ mix(static_cast<std::uint64_t>(replica)))));
}

// Exponent of the residue count in each op's cost.
int residue_power(Op op) {
  switch (op) {
    case Op::So3Log: return 1;
    case Op::PointcloudLog:
    case Op::MetricTensor: return 2;
    case Op::MetricInverse: return 3;
  }
  return 1;
}

// Inputs for one cell; run() performs the full T × R workload once.
class Workload {
 public:
  Workload(Op op, std::size_t frames, std::size_t residues, std::uint64_t seed) : op_(op) {
    if (op == Op::So3Log) {
      lcs_ = gen_random_rotations(frames, residues, seed);
    } else {
      clouds_ = gen_random_pointclouds(frames, residues, seed);
      if (op == Op::PointcloudLog) tangent_.emplace(clouds_.front(), 0.1);
    }
    sink_.assign(frames, 0.0);
  }

  double run() {
    switch (op_) {
      case Op::So3Log:
        parallel_for(lcs_.frames(), [&](std::size_t t) {
          double acc = 0.0;
          for (const auto& r : lcs_.frame(t)) acc += so3::log_map(r).sum();
          sink_[t] = acc;
        });
        break;
      case Op::PointcloudLog:
        parallel_for(clouds_.size(), [&](std::size_t t) { sink_[t] = tangent_->log(clouds_[t]).sum(); });
        break;
      case Op::MetricTensor:
        parallel_for(clouds_.size(), [&](std::size_t t) { sink_[t] = pointcloud::metric_tensor(clouds_[t]).trace(); });
        break;
      case Op::MetricInverse:
        parallel_for(clouds_.size(), [&](std::size_t t) {
          sink_[t] = pointcloud::metric_pseudo_inverse(pointcloud::metric_tensor(clouds_[t]), 0.1).pinv.trace();
        });
        break;
    }
    double total = 0.0;
    for (double v : sink_) total += v;
    return total;
  }

 private:
  Op op_;
  features::LcsStack lcs_;
  std::vector<trajio::Points> clouds_;
  std::optional<pointcloud::TangentSpace> tangent_;
  std::vector<double> sink_;
};

volatile double g_sink = 0.0;

}  // namespace

features::LcsStack gen_random_rotations(std::size_t frames, std::size_t residues, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> angle(0.0, std::numbers::pi);
  std::vector<so3::Rotation> data(frames * residues);
  for (auto& r : data) {
    Vec3 axis;
    do {
      axis = Vec3(normal(rng), normal(rng), normal(rng));
    } while (axis.norm() < 1e-12);
    r = so3::Rotation::about_axis(axis, angle(rng));
  }
  return features::LcsStack(frames, residues, std::move(data));
}

std::vector<trajio::Points> gen_random_pointclouds(std::size_t frames, std::size_t residues, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<trajio::Points> out(frames, trajio::Points(static_cast<Eigen::Index>(residues), 3));
  for (auto& p : out)
    for (Eigen::Index i = 0; i < p.rows(); ++i)
      for (int c = 0; c < 3; ++c) p(i, c) = normal(rng);
  return out;
}

std::string_view op_name(Op op) {
  switch (op) {
    case Op::So3Log: return "so3_log";
    case Op::PointcloudLog: return "pointcloud_log";
    case Op::MetricTensor: return "metric_tensor";
    case Op::MetricInverse: return "metric_inverse";
  }
  return "?";
}

std::optional<Op> parse_op(std::string_view name) {
  for (Op op : kAllOps)
    if (op_name(op) == name) return op;
  return std::nullopt;
}

void ProfileGrid::validate() const {
  if (sample_counts.empty() || residue_counts.empty()) throw DomainError("profile grid is empty");
  for (auto t : sample_counts)
    if (t < 1) throw DomainError("profile sample counts must be >= 1");
  for (auto r : residue_counts)
    if (r < 2) throw DomainError("profile residue counts must be >= 2");
  if (replicas < 1) throw DomainError("profile replicas must be >= 1");
  if (!(min_duration >= 0.0) || !(cell_budget > 0.0)) throw DomainError("profile durations must be positive");
}

std::vector<std::size_t> powers_of_two(int lo, int hi) {
  std::vector<std::size_t> out;
  for (int e = lo; e <= hi; ++e) out.push_back(std::size_t{1} << e);
  return out;
}

ProfileGrid desk_grid() {
  ProfileGrid g;
  g.sample_counts = powers_of_two(0, 16);
  g.residue_counts = powers_of_two(2, 8);
  return g;
}

ProfileGrid full_grid() {
  ProfileGrid g;
  g.sample_counts = powers_of_two(0, 19);
  g.residue_counts = powers_of_two(2, 9);
  return g;
}

std::optional<double> ProfileReport::mean_seconds(Op op, std::size_t frames, std::size_t residues) const {
  double sum = 0.0;
  int n = 0;
  for (const auto& t : timings)
    if (t.op == op && t.frames == frames && t.residues == residues) {
      sum += t.seconds;
      ++n;
    }
  if (n == 0) return std::nullopt;
  return sum / n;
}

double time_cell(Op op, std::size_t frames, std::size_t residues, std::uint64_t seed, double min_duration) {
  using clock = std::chrono::steady_clock;
  Workload w(op, frames, residues, seed);
  g_sink = g_sink + w.run();  // warm-up
  int reps = 0;
  const auto start = clock::now();
  double elapsed = 0.0;
  do {
    g_sink = g_sink + w.run();
    ++reps;
    elapsed = std::chrono::duration<double>(clock::now() - start).count();
  } while (elapsed < min_duration);
  return elapsed / reps;
}

ProfileReport profile(const std::vector<Op>& ops, const ProfileGrid& grid) {
  grid.validate();
  ProfileReport report;
  for (Op op : ops) {
    const double rpow = std::pow(2.0, residue_power(op));
    std::map<std::pair<std::size_t, std::size_t>, double> measured;
    for (std::size_t r : grid.residue_counts) {
      for (std::size_t t : grid.sample_counts) {
        double predicted = 0.0;
        for (const auto& [key, secs] : measured) {
          const double ft = static_cast<double>(t) / static_cast<double>(key.first);
          const double fr = static_cast<double>(r) / static_cast<double>(key.second);
          if (ft >= 1.0 && fr >= 1.0) {
            const double scale = ft * std::pow(rpow, std::log2(fr));
            predicted = std::max(predicted, secs * scale);
          }
        }
        if (predicted > grid.cell_budget) {
          report.skipped.push_back({op, t, r, predicted});
          continue;
        }
        double sum = 0.0;
        for (int rep = 0; rep < grid.replicas; ++rep) {
          const double secs = time_cell(op, t, r, cell_seed(grid.seed, t, r, rep), grid.min_duration);
          report.timings.push_back({op, t, r, rep, secs});
          sum += secs;
        }
        measured[{t, r}] = sum / grid.replicas;
      }
    }
  }
  return report;
}

std::vector<ScalingFit> fit_slopes(const ProfileReport& report, std::size_t min_frames, std::size_t min_residues) {
  std::vector<ScalingFit> out;
  auto fit = [](const std::vector<std::pair<double, double>>& pts) {
    double mx = 0.0, my = 0.0;
    for (const auto& [x, y] : pts) {
      mx += x;
      my += y;
    }
    mx /= static_cast<double>(pts.size());
    my /= static_cast<double>(pts.size());
    double sxy = 0.0, sxx = 0.0;
    for (const auto& [x, y] : pts) {
      sxy += (x - mx) * (y - my);
      sxx += (x - mx) * (x - mx);
    }
    return sxx > 0.0 ? sxy / sxx : 0.0;
  };

  for (Op op : kAllOps) {
    std::map<std::size_t, std::vector<std::pair<double, double>>> by_r, by_t;
    std::map<std::pair<std::size_t, std::size_t>, bool> seen;
    for (const auto& tm : report.timings) {
      if (tm.op != op || seen[{tm.frames, tm.residues}]) continue;
      seen[{tm.frames, tm.residues}] = true;
      const double y = std::log2(*report.mean_seconds(op, tm.frames, tm.residues));
      if (tm.frames >= min_frames) by_r[tm.residues].emplace_back(std::log2(static_cast<double>(tm.frames)), y);
      if (tm.residues >= min_residues) by_t[tm.frames].emplace_back(std::log2(static_cast<double>(tm.residues)), y);
    }
    for (const auto& [r, pts] : by_r)
      if (pts.size() >= 2) out.push_back({op, "frames", r, fit(pts), pts.size()});
    for (const auto& [t, pts] : by_t)
      if (pts.size() >= 2) out.push_back({op, "residues", t, fit(pts), pts.size()});
  }
  return out;
}

}  // namespace orifeat::bench
