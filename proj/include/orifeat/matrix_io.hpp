#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "orifeat/common.hpp"
#include "orifeat/features.hpp"

// "MPF1" matrix files and CSV export.
//   magic "MPF1", u32 rows, u32 cols, u8 kind tag, f64 LE row-major payload.
// Tags 0–7 are feature kinds; the others label analysis outputs.
namespace orifeat::matrix_io {

namespace tag {
inline constexpr std::uint8_t kRmsd = 16;
inline constexpr std::uint8_t kLddt = 17;
inline constexpr std::uint8_t kGram = 18;
inline constexpr std::uint8_t kRank1 = 19;
inline constexpr std::uint8_t kProjection = 20;
inline constexpr std::uint8_t kDccm = 21;
inline constexpr std::uint8_t kDcom = 22;
inline constexpr std::uint8_t kGeneric = 255;
}  // namespace tag

inline constexpr std::size_t kMpfHeaderBytes = 13;

struct TaggedMatrix {
  Matrix data;
  std::uint8_t tag = tag::kGeneric;
};

void write_mpf(const Matrix& m, std::uint8_t kind_tag, const std::filesystem::path& path);
TaggedMatrix read_mpf(const std::filesystem::path& path);

void write_features(const features::FeatureMatrix& f, const std::filesystem::path& path);
/// Requires a feature-kind tag; the column map is rebuilt from the kind.
features::FeatureMatrix read_features(const std::filesystem::path& path);

/// CSV with a header row. NaN is written as "nan".
void write_csv(const Matrix& m, const std::vector<std::string>& header, const std::filesystem::path& path,
               bool frame_column = false);
/// Header names residue/component per column, first column is the frame index.
void write_features_csv(const features::FeatureMatrix& f, const std::filesystem::path& path);

/// Header-less numeric CSV grid (e.g. correlation maps).
void write_grid_csv(const Matrix& m, const std::filesystem::path& path);

/// Numeric CSV with one header row; returns the header in `header` when given.
Matrix read_csv(const std::filesystem::path& path, std::vector<std::string>* header = nullptr);

}  // namespace orifeat::matrix_io
