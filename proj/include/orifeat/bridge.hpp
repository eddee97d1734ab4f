#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "orifeat/common.hpp"
#include "orifeat/pipeline.hpp"

// Array-in/array-out entry points for foreign-language bindings. Inputs are
// described the way array libraries expose buffers (pointer, dtype, shape,
// row-major) and are validated here; every call copies once into core types
// and runs the same code path as the CLI.
namespace orifeat::bridge {

/// Raised for arrays that do not match the expected dtype or shape.
class BoundaryError : public DomainError {
 public:
  using DomainError::DomainError;
};

struct ArrayRef {
  const void* data = nullptr;
  /// "float64" (or the "<f8"/"f8" spellings) is the only accepted dtype.
  std::string dtype = "float64";
  std::vector<std::size_t> shape;
};

struct ArrayOut {
  std::vector<double> data;  // row-major
  std::vector<std::size_t> shape;
};

std::string shape_string(const std::vector<std::size_t>& shape);

struct FeaturizeArgs {
  /// Optional (R, 3, 3) reference for Orientation and Pointcloud.
  const ArrayRef* reference = nullptr;
  /// Optional per-residue chain ids; a single chain 'A' when empty.
  std::string chain_ids;
  pipeline::FeaturizeOptions options;
};

/// coords: (T, R, 3, 3) float64, atoms ordered N, Cα, C. Returns (T, d).
ArrayOut featurize(const ArrayRef& coords, std::string_view kind, const FeaturizeArgs& args = {});

struct AmuseOut {
  std::vector<double> eigenvalues;
  /// Frames; +inf for λ ≥ 1 and NaN where undefined.
  std::vector<double> timescales;
  ArrayOut projections;
  double vamp2 = 0.0;
};

/// features: (T, d) float64.
AmuseOut amuse(const ArrayRef& features, double evr, std::size_t lag);
double vamp2_score(const ArrayRef& features, std::size_t lag, std::size_t k);

}  // namespace orifeat::bridge
