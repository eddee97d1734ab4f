#include "orifeat/bridge.hpp"

#include <cstring>

#include "orifeat/kinetics.hpp"

namespace orifeat::bridge {

namespace {

void require_f64(const ArrayRef& a, const char* name) {
  if (a.dtype != "float64" && a.dtype != "<f8" && a.dtype != "f8")
    throw BoundaryError(std::string(name) + ": expected dtype float64, got " + a.dtype);
  if (a.data == nullptr) throw BoundaryError(std::string(name) + ": null data pointer");
}

std::size_t element_count(const std::vector<std::size_t>& shape) {
  std::size_t n = 1;
  for (auto s : shape) n *= s;
  return n;
}

std::vector<double> copy_out(const ArrayRef& a) {
  const std::size_t n = element_count(a.shape);
  std::vector<double> out(n);
  if (n) std::memcpy(out.data(), a.data, n * sizeof(double));
  return out;
}

Matrix to_matrix(const ArrayRef& a, const char* name) {
  require_f64(a, name);
  if (a.shape.size() != 2 || a.shape[0] == 0 || a.shape[1] == 0)
    throw BoundaryError(std::string(name) + ": expected shape (T, d), got " + shape_string(a.shape));
  const auto* p = static_cast<const double*>(a.data);
  using RowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  return Eigen::Map<const RowMajor>(p, static_cast<Eigen::Index>(a.shape[0]), static_cast<Eigen::Index>(a.shape[1]));
}

ArrayOut from_matrix(const Matrix& m) {
  ArrayOut out;
  out.shape = {static_cast<std::size_t>(m.rows()), static_cast<std::size_t>(m.cols())};
  out.data.resize(static_cast<std::size_t>(m.size()));
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) out.data[static_cast<std::size_t>(i * m.cols() + j)] = m(i, j);
  return out;
}

std::vector<char> chains_for(const std::string& ids, std::size_t residues) {
  if (ids.empty()) return std::vector<char>(residues, 'A');
  if (ids.size() != residues)
    throw BoundaryError("chain_ids has " + std::to_string(ids.size()) + " entries for " + std::to_string(residues) +
                        " residues");
  return {ids.begin(), ids.end()};
}

}  // namespace

std::string shape_string(const std::vector<std::size_t>& shape) {
  std::string s = "(";
  for (std::size_t i = 0; i < shape.size(); ++i) s += (i ? ", " : "") + std::to_string(shape[i]);
  if (shape.size() == 1) s += ",";
  return s + ")";
}

ArrayOut featurize(const ArrayRef& coords, std::string_view kind, const FeaturizeArgs& args) {
  require_f64(coords, "coords");
  const auto& s = coords.shape;
  if (s.size() != 4 || s[2] != 3 || s[3] != 3 || s[0] == 0 || s[1] == 0)
    throw BoundaryError("coords: expected shape (T, R, 3, 3), got " + shape_string(s));
  const auto k = features::parse_kind(kind);
  if (!k) throw BoundaryError("unknown feature kind '" + std::string(kind) + "'");

  const std::size_t frames = s[0], residues = s[1];
  trajio::BackboneTrajectory traj(frames, residues, copy_out(coords), chains_for(args.chain_ids, residues));
  traj.validate();

  pipeline::FeaturizeOptions opts = args.options;
  if (args.reference) {
    const ArrayRef& ref = *args.reference;
    require_f64(ref, "reference");
    if (ref.shape.size() != 3 || ref.shape[0] != residues || ref.shape[1] != 3 || ref.shape[2] != 3)
      throw BoundaryError("reference: expected shape (" + std::to_string(residues) + ", 3, 3), got " +
                          shape_string(ref.shape));
    opts.reference = trajio::Structure(copy_out(ref), chains_for(args.chain_ids, residues));
    opts.reference->validate();
  }
  return from_matrix(pipeline::featurize(traj, *k, opts).data());
}

AmuseOut amuse(const ArrayRef& features, double evr, std::size_t lag) {
  kinetics::AmuseOptions opts;
  opts.evr_threshold = evr;
  opts.lag = lag;
  const kinetics::AmuseResult r = kinetics::amuse(to_matrix(features, "features"), opts);
  AmuseOut out;
  out.eigenvalues.assign(r.tica.eigenvalues.data(), r.tica.eigenvalues.data() + r.tica.eigenvalues.size());
  for (const auto& ts : r.tica.timescales) out.timescales.push_back(ts.value());
  out.projections = from_matrix(r.projections);
  out.vamp2 = r.vamp2;
  return out;
}

double vamp2_score(const ArrayRef& features, std::size_t lag, std::size_t k) {
  return kinetics::vamp2_score(to_matrix(features, "features"), lag, static_cast<Eigen::Index>(k));
}

}  // namespace orifeat::bridge
