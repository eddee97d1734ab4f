#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "orifeat/trajio.hpp"

namespace orifeat::cli {

using json = nlohmann::ordered_json;
namespace fs = std::filesystem;

// Every output path goes through here so a failed run can remove what it wrote.
class Outputs {
 public:
  explicit Outputs(fs::path dir) : dir_(std::move(dir)) {}
  ~Outputs();
  Outputs(const Outputs&) = delete;
  Outputs& operator=(const Outputs&) = delete;

  /// Creates the directory on first use and registers `name` for cleanup.
  fs::path file(const std::string& name);
  void commit() { committed_ = true; }
  const std::vector<fs::path>& written() const { return files_; }

 private:
  fs::path dir_;
  std::vector<fs::path> files_;
  std::vector<fs::path> created_dirs_;
  bool ready_ = false;
  bool committed_ = false;
};

void write_json(const json& j, const fs::path& path);

/// null for nullopt and non-finite values.
json number_or_null(std::optional<double> v);

struct TrajectoryArgs {
  fs::path input;
  std::size_t stride = 1;
  std::size_t begin = 0;
  std::size_t end = 0;  // 0: to the last frame
  std::string reference;
  std::string align = "none";
  bool per_chain = false;

  void add_to(CLI::App* app, bool required = true);
  bool given() const { return !input.empty(); }
  /// Loads, slices and (optionally) aligns onto the reference.
  trajio::BackboneTrajectory load() const;
  std::optional<trajio::Structure> reference_structure() const;
};

/// "1,0,0" → vector; throws DomainError on malformed input.
Vec3 parse_vec3(const std::string& s);

struct Globals {
  std::uint64_t seed = 0;
};

}  // namespace orifeat::cli
