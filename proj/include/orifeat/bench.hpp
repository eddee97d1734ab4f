#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "orifeat/common.hpp"
#include "orifeat/features.hpp"
#include "orifeat/trajio.hpp"

// Synthetic inputs and the scaling profiler for the core geometric operations.
namespace orifeat::bench {

/// Uniform axis on the sphere, angle uniform in [0, π), Rodrigues construction.
features::LcsStack gen_random_rotations(std::size_t frames, std::size_t residues, std::uint64_t seed);

/// Standard-normal Cα clouds, one R × 3 block per frame.
std::vector<trajio::Points> gen_random_pointclouds(std::size_t frames, std::size_t residues, std::uint64_t seed);

enum class Op { So3Log, PointcloudLog, MetricTensor, MetricInverse };
inline constexpr Op kAllOps[] = {Op::So3Log, Op::PointcloudLog, Op::MetricTensor, Op::MetricInverse};

std::string_view op_name(Op op);
std::optional<Op> parse_op(std::string_view name);

struct ProfileGrid {
  std::vector<std::size_t> sample_counts;
  std::vector<std::size_t> residue_counts;
  int replicas = 3;
  /// Each timing repeats the operation until at least this much wall time has passed.
  double min_duration = 0.05;
  /// Cells predicted to take longer than this (seconds per call) are skipped.
  double cell_budget = 2.0;
  std::uint64_t seed = 0;

  void validate() const;
};

/// T = 2^0..2^16, R = 2^2..2^8.
ProfileGrid desk_grid();
/// T = 2^0..2^19, R = 2^2..2^9.
ProfileGrid full_grid();
/// Powers of two from 2^lo to 2^hi.
std::vector<std::size_t> powers_of_two(int lo, int hi);

struct Timing {
  Op op;
  std::size_t frames;
  std::size_t residues;
  int replica;
  double seconds;  // mean over repeats, per call of the whole T × R workload
};

struct SkippedCell {
  Op op;
  std::size_t frames;
  std::size_t residues;
  double predicted_seconds;
};

struct ProfileReport {
  std::vector<Timing> timings;
  std::vector<SkippedCell> skipped;

  /// Mean over replicas; nullopt if the cell was not measured.
  std::optional<double> mean_seconds(Op op, std::size_t frames, std::size_t residues) const;
};

/// Times one cell: fresh inputs per replica (excluded from timing), one discarded warm-up.
double time_cell(Op op, std::size_t frames, std::size_t residues, std::uint64_t seed, double min_duration);

ProfileReport profile(const std::vector<Op>& ops, const ProfileGrid& grid);

struct ScalingFit {
  Op op;
  /// "frames" (fixed residues) or "residues" (fixed frames).
  std::string axis;
  std::size_t fixed = 0;
  double slope = 0.0;  // least-squares slope of log2 time vs log2 size
  std::size_t points = 0;
};

/// Log–log slopes per op along each axis, using sizes ≥ the given minima.
std::vector<ScalingFit> fit_slopes(const ProfileReport& report, std::size_t min_frames = 256,
                                   std::size_t min_residues = 16);

}  // namespace orifeat::bench
