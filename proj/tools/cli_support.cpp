#include "cli_support.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

namespace orifeat::cli {

Outputs::~Outputs() {
  if (committed_) return;
  std::error_code ec;
  for (auto it = files_.rbegin(); it != files_.rend(); ++it) fs::remove(*it, ec);
  for (auto it = created_dirs_.rbegin(); it != created_dirs_.rend(); ++it)
    if (fs::is_empty(*it, ec)) fs::remove(*it, ec);
}

fs::path Outputs::file(const std::string& name) {
  if (!ready_) {
    // Remember which directories we create so they go away on failure too.
    fs::path p;
    for (const auto& part : dir_) {
      p /= part;
      if (!p.empty() && !fs::exists(p)) {
        fs::create_directory(p);
        created_dirs_.push_back(p);
      }
    }
    ready_ = true;
  }
  const fs::path out = dir_ / name;
  for (const auto& f : files_)
    if (f == out) throw DomainError("output " + out.string() + " would be written twice");
  files_.push_back(out);
  return out;
}

void write_json(const json& j, const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot open " + path.string() + " for writing");
  out << j.dump(2) << '\n';
  if (!out) throw Error("failed writing " + path.string());
}

json number_or_null(std::optional<double> v) {
  if (!v || !std::isfinite(*v)) return nullptr;
  return *v;
}

void TrajectoryArgs::add_to(CLI::App* app, bool required) {
  auto* in = app->add_option("-i,--input", input, "trajectory (.mpb or .csv)")->check(CLI::ExistingFile);
  if (required) in->required();
  app->add_option("--stride", stride, "keep every n-th frame")->check(CLI::PositiveNumber);
  app->add_option("--begin", begin, "first frame (0-based)");
  app->add_option("--end", end, "one past the last frame; 0 keeps all");
  app->add_option("--reference", reference, "reference structure (PDB)")->check(CLI::ExistingFile);
  app->add_option("--align", align, "superpose frames onto the reference before featurizing")
      ->check(CLI::IsMember({"none", "ca", "backbone"}));
  app->add_flag("--per-chain", per_chain, "fit each chain separately when aligning");
}

trajio::BackboneTrajectory TrajectoryArgs::load() const {
  trajio::LoadOptions opts;
  opts.stride = stride;
  trajio::BackboneTrajectory traj;
  if (end > 0) {
    opts.range = trajio::FrameRange{begin, end};
    traj = trajio::load_trajectory(input, opts);
  } else if (begin > 0) {
    traj = trajio::load_trajectory(input);
    if (begin >= traj.frames())
      throw DomainError("--begin " + std::to_string(begin) + " is past the last frame");
    traj = traj.slice(begin, traj.frames(), stride);
  } else {
    traj = trajio::load_trajectory(input, opts);
  }
  if (align != "none") {
    const auto ref = reference_structure();
    if (!ref) throw DomainError("--align needs --reference");
    const trajio::AlignOptions a(align == "ca" ? trajio::AtomSelection::CA : trajio::AtomSelection::Backbone,
                                 per_chain);
    traj = trajio::align_trajectory(traj, *ref, a);
  }
  return traj;
}

std::optional<trajio::Structure> TrajectoryArgs::reference_structure() const {
  if (reference.empty()) return std::nullopt;
  return trajio::parse_reference(reference);
}

Vec3 parse_vec3(const std::string& s) {
  std::stringstream in(s);
  Vec3 v;
  std::string part;
  int i = 0;
  while (std::getline(in, part, ',')) {
    if (i == 3) throw DomainError("expected three comma-separated numbers, got '" + s + "'");
    try {
      std::size_t used = 0;
      v[i] = std::stod(part, &used);
      if (used != part.size()) throw std::invalid_argument(part);
    } catch (const std::exception&) {
      throw DomainError("not a number in '" + s + "'");
    }
    ++i;
  }
  if (i != 3) throw DomainError("expected three comma-separated numbers, got '" + s + "'");
  return v;
}

}  // namespace orifeat::cli
