#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "orifeat/common.hpp"
#include "orifeat/so3.hpp"

// Backbone trajectories, reference structures, file formats and rigid alignment.
namespace orifeat::trajio {

enum class Atom : int { N = 0, CA = 1, C = 2 };
inline constexpr int kAtomsPerResidue = 3;

/// N×3 point set.
using Points = Eigen::Matrix<double, Eigen::Dynamic, 3>;

enum class AtomSelection { CA, Backbone };

/// One backbone conformation: R residues × (N, Cα, C), Å.
class Structure {
 public:
  Structure() = default;
  /// `coords` holds R·9 doubles ordered residue-major, then atom (N, Cα, C), then xyz.
  Structure(std::vector<double> coords, std::vector<char> chain_ids, std::string source = {});

  std::size_t residues() const { return chain_ids_.size(); }
  Vec3 atom(std::size_t residue, Atom a) const;
  void set_atom(std::size_t residue, Atom a, const Vec3& x);

  const std::vector<char>& chain_ids() const { return chain_ids_; }
  std::span<const double> coords() const { return coords_; }
  const std::string& source() const { return source_; }

  /// Residue labels such as "A:42" when parsed from PDB; empty otherwise.
  const std::vector<std::string>& labels() const { return labels_; }
  void set_labels(std::vector<std::string> labels);

  /// Selected atoms as rows, residue order (Backbone: N, Cα, C per residue).
  Points select(AtomSelection sel) const;
  Points ca() const { return select(AtomSelection::CA); }

  /// Residue indices of each distinct chain, in order of first appearance.
  std::vector<std::pair<char, std::vector<std::size_t>>> chains() const;

  /// Sub-structure with the given residues, in the given order.
  Structure subset(std::span<const std::size_t> residues) const;

  /// Throws StructuralError/DomainError if coordinates are non-finite or a bond is degenerate.
  void validate() const;

 private:
  std::vector<double> coords_;
  std::vector<char> chain_ids_;
  std::vector<std::string> labels_;
  std::string source_;
};

/// Reference structure parsed from a PDB file; `source()` holds the path.
using ReferenceStructure = Structure;

/// T frames × R residues × (N, Cα, C) × xyz, Å.
class BackboneTrajectory {
 public:
  BackboneTrajectory() = default;
  BackboneTrajectory(std::size_t frames, std::size_t residues, std::vector<double> coords,
                     std::vector<char> chain_ids, std::optional<double> dt_hint = std::nullopt);

  static BackboneTrajectory from_frames(std::span<const Structure> frames,
                                        std::optional<double> dt_hint = std::nullopt);

  std::size_t frames() const { return frames_; }
  std::size_t residues() const { return residues_; }
  const std::vector<char>& chain_ids() const { return chain_ids_; }
  std::optional<double> dt_hint() const { return dt_hint_; }
  std::span<const double> coords() const { return coords_; }

  Vec3 atom(std::size_t frame, std::size_t residue, Atom a) const;
  Structure frame(std::size_t t) const;
  void set_frame(std::size_t t, const Structure& s);

  /// Frames [begin, end) with the given stride.
  BackboneTrajectory slice(std::size_t begin, std::size_t end, std::size_t stride = 1) const;
  BackboneTrajectory select_frames(std::span<const std::size_t> frames) const;
  BackboneTrajectory select_residues(std::span<const std::size_t> residues) const;

  void validate() const;

 private:
  std::size_t frames_ = 0;
  std::size_t residues_ = 0;
  std::vector<double> coords_;
  std::vector<char> chain_ids_;
  std::optional<double> dt_hint_;
};

struct FrameRange {
  std::size_t begin = 0;
  std::size_t end = 0;  // exclusive
};

struct LoadOptions {
  std::size_t stride = 1;
  /// Applied before striding; frames outside it are never decoded.
  std::optional<FrameRange> range;
  std::optional<double> dt_hint;
};

/// Loads an MPB1 (.mpb) or CSV (.csv) trajectory.
BackboneTrajectory load_trajectory(const std::filesystem::path& path, const LoadOptions& opts = {});

BackboneTrajectory read_mpb(const std::filesystem::path& path, const LoadOptions& opts = {});
BackboneTrajectory read_csv(const std::filesystem::path& path, const LoadOptions& opts = {});
void write_mpb(const BackboneTrajectory& traj, const std::filesystem::path& path,
               bool with_chain_ids = true);
void write_csv(const BackboneTrajectory& traj, const std::filesystem::path& path);

ReferenceStructure parse_reference(const std::filesystem::path& path);
ReferenceStructure parse_pdb(std::istream& in, const std::string& source = {});
void write_pdb(const Structure& s, const std::filesystem::path& path);

struct Superposition {
  so3::Rotation rotation;
  Vec3 translation = Vec3::Zero();
  double rmsd = 0.0;

  Vec3 apply(const Vec3& x) const { return rotation * x + translation; }
  Points apply(const Points& x) const;
};

/// Least-squares proper rigid fit of `moving` onto `target` (Kabsch, SVD).
Superposition kabsch(const Points& moving, const Points& target);

struct AlignOptions {
  AlignOptions() = default;
  AlignOptions(AtomSelection s, bool chains) : selection(s), per_chain(chains) {}

  AtomSelection selection = AtomSelection::CA;
  /// Fit every chain independently onto its counterpart in the reference.
  bool per_chain = false;
};

Structure align_structure(const Structure& s, const ReferenceStructure& ref, const AlignOptions& opts = {});
BackboneTrajectory align_trajectory(const BackboneTrajectory& traj, const ReferenceStructure& ref,
                                    const AlignOptions& opts = {});

/// Throws StructuralError unless residue count and chain layout agree.
void require_same_topology(const std::vector<char>& a, const std::vector<char>& b, const char* what);

}  // namespace orifeat::trajio
