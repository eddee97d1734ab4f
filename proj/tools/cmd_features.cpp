#include <iostream>

#include "commands.hpp"
#include "orifeat/kinetics.hpp"
#include "orifeat/matrix_io.hpp"
#include "orifeat/pipeline.hpp"
#include "orifeat/similarity.hpp"

namespace orifeat::cli {

namespace {

const std::vector<std::string> kAllKindNames = {"orientation", "orientation_mean", "orientation_axis",
                                                "orientation_angle", "ca", "torsion", "pointcloud",
                                                "pointcloud_mean"};

features::FeatureKind kind_of(const std::string& name) {
  const auto k = features::parse_kind(name);
  if (!k) throw DomainError("unknown feature kind '" + name + "'");
  return *k;
}

struct FeatureSettings {
  double delta = 0.1;
  int mean_iters = 256;
  double mean_step = 0.1;
  double mean_tol = 1e-3;
  bool keep_torsion_mean = false;

  void add_to(CLI::App* app) {
    app->add_option("--delta", delta, "pointcloud pseudo-inverse cutoff factor")->check(CLI::Range(0.0, 1.0));
    app->add_option("--mean-iters", mean_iters, "intrinsic mean: maximum iterations")->check(CLI::PositiveNumber);
    app->add_option("--mean-step", mean_step, "intrinsic mean: step size")->check(CLI::PositiveNumber);
    app->add_option("--mean-tol", mean_tol, "intrinsic mean: tangent-norm tolerance (rad)")->check(CLI::PositiveNumber);
    app->add_flag("--keep-torsion-mean", keep_torsion_mean, "do not demean the torsion sin/cos columns");
  }

  pipeline::FeaturizeOptions options(const TrajectoryArgs& traj) const {
    pipeline::FeaturizeOptions o;
    o.reference = traj.reference_structure();
    o.orientation_mean = so3::MeanSettings{mean_iters, mean_step, mean_tol};
    o.pointcloud.delta = delta;
    o.demean_torsion = !keep_torsion_mean;
    return o;
  }
};

// ---------------------------------------------------------------------------

struct FeaturizeArgs {
  TrajectoryArgs traj;
  std::vector<std::string> kinds = {"orientation", "orientation_mean", "ca", "torsion", "pointcloud"};
  fs::path out;
  bool csv = false;
  FeatureSettings settings;
};

void run_featurize(const FeaturizeArgs& a) {
  const auto traj = a.traj.load();
  const auto opts = a.settings.options(a.traj);
  Outputs outputs(a.out);
  json summary = {{"input", a.traj.input.string()}, {"frames", traj.frames()}, {"residues", traj.residues()}};
  json files = json::object();
  for (const auto& name : a.kinds) {
    const auto f = pipeline::featurize(traj, kind_of(name), opts);
    matrix_io::write_features(f, outputs.file(name + ".mpf"));
    if (a.csv) matrix_io::write_features_csv(f, outputs.file(name + ".csv"));
    files[name] = {{"file", name + ".mpf"}, {"frames", f.frames()}, {"dims", f.dims()}};
  }
  summary["features"] = files;
  write_json(summary, outputs.file("featurize.json"));
  outputs.commit();
}

// ---------------------------------------------------------------------------

struct KineticsArgs {
  std::vector<fs::path> features;
  TrajectoryArgs traj;
  std::vector<std::string> kinds;
  FeatureSettings settings;
  fs::path out;
  double evr = 0.95;
  std::size_t lag = 0;
  double lag_first = 0.01;
  double lag_last = 0.10;
  int lag_count = 10;
  int vamp_k = 0;
  bool nonreversible = false;
};

json kinetics_report(const std::string& source, const Matrix& x, const KineticsArgs& a, Outputs& outputs) {
  kinetics::AmuseOptions opts;
  opts.evr_threshold = a.evr;
  opts.tica.symmetrize = !a.nonreversible;
  if (a.vamp_k > 0) opts.vamp_k = a.vamp_k;

  json report = {{"source", source}, {"frames", x.rows()}, {"dims", x.cols()}, {"evr_threshold", a.evr}};
  std::optional<std::size_t> plateau;
  if (a.lag > 0) {
    opts.lag = a.lag;
    report["lag_search"] = nullptr;
  } else {
    // The lag scan runs on the same whitened PCA space that AMUSE uses.
    const auto pca = kinetics::pca_fit(x, a.evr, true);
    const auto scan = kinetics::lag_search(pca.transform(x), kinetics::LagGrid{a.lag_first, a.lag_last, a.lag_count},
                                           opts.tica);
    plateau = scan.plateau_lag;
    json ts = json::array();
    for (double v : scan.slowest_timescales) ts.push_back(number_or_null(v));
    report["lag_search"] = {{"lags", scan.lags}, {"slowest_timescales", ts}};
    if (plateau) {
      opts.lag = *plateau;
    } else {
      opts.lag = scan.lags.front();
      warn(source + ": no timescale plateau on the lag grid; fitting at the first lag " + std::to_string(opts.lag));
    }
  }

  const auto res = kinetics::amuse(x, opts);
  json eig = json::array(), ts = json::array();
  for (Eigen::Index i = 0; i < res.tica.eigenvalues.size(); ++i) eig.push_back(res.tica.eigenvalues[i]);
  for (const auto& t : res.tica.timescales) ts.push_back(number_or_null(t.value()));
  report["pca_components"] = res.pca.n_components();
  report["lag"] = opts.lag;
  report["plateau_lag"] = plateau ? json(*plateau) : json(nullptr);
  report["eigenvalues"] = eig;
  report["timescales"] = ts;
  report["vamp2"] = res.vamp2;
  report["vamp2_k"] = opts.vamp_k.value_or(res.pca.n_components());
  report["reversible"] = !a.nonreversible;
  matrix_io::write_mpf(res.projections, matrix_io::tag::kProjection, outputs.file(source + ".projections.mpf"));
  report["projections"] = source + ".projections.mpf";
  return report;
}

void run_kinetics(const KineticsArgs& a) {
  if (a.features.empty() && !a.traj.given()) throw DomainError("give --features files or --input with --kind");
  if (a.traj.given() && a.kinds.empty()) throw DomainError("--input needs at least one --kind");
  Outputs outputs(a.out);
  for (const auto& path : a.features) {
    const auto m = matrix_io::read_mpf(path);
    const std::string name = path.stem().string();
    write_json(kinetics_report(name, m.data, a, outputs), outputs.file(name + ".kinetics.json"));
  }
  if (a.traj.given()) {
    const auto traj = a.traj.load();
    const auto opts = a.settings.options(a.traj);
    for (const auto& kind : a.kinds) {
      const auto f = pipeline::featurize(traj, kind_of(kind), opts);
      write_json(kinetics_report(kind, f.data(), a, outputs), outputs.file(kind + ".kinetics.json"));
    }
  }
  outputs.commit();
}

// ---------------------------------------------------------------------------

struct SimilarityArgs {
  TrajectoryArgs traj;
  std::vector<std::string> kinds = {"orientation", "ca"};
  FeatureSettings settings;
  fs::path out;
  bool skip_lddt = false;
  double r0 = 15.0;
  int rank1 = 0;
  std::vector<fs::path> compare;
};

json correlation_entry(const std::string& a, const std::string& b, const similarity::CorrelationReport& r) {
  return {{"kind_a", a}, {"kind_b", b}, {"rho", number_or_null(r.rho)}, {"n_pairs", r.n_pairs}};
}

void run_similarity(const SimilarityArgs& a) {
  Outputs outputs(a.out);
  if (!a.compare.empty()) {
    const auto x = matrix_io::read_mpf(a.compare[0]).data;
    const auto y = matrix_io::read_mpf(a.compare[1]).data;
    if (x.rows() != x.cols() || y.rows() != y.cols() || x.rows() != y.rows())
      throw DomainError("--compare needs two square matrices of the same size");
    const auto r = similarity::spearman_lower_triangle(x, y);
    write_json(correlation_entry(a.compare[0].stem().string(), a.compare[1].stem().string(), r),
               outputs.file("correlation.json"));
    outputs.commit();
    return;
  }
  if (!a.traj.given()) throw DomainError("similarity needs --input or --compare");

  const auto traj = a.traj.load();
  const auto opts = a.settings.options(a.traj);
  std::vector<std::pair<std::string, Matrix>> structural;
  const auto rmsd = similarity::pairwise_rmsd(traj);
  matrix_io::write_mpf(rmsd.values, matrix_io::tag::kRmsd, outputs.file("rmsd.mpf"));
  structural.emplace_back("rmsd", rmsd.values);
  if (!a.skip_lddt) {
    similarity::LddtOptions lo;
    lo.r0 = a.r0;
    const auto lddt = similarity::pairwise_lddt(traj, lo);
    matrix_io::write_mpf(lddt.values, matrix_io::tag::kLddt, outputs.file("lddt.mpf"));
    structural.emplace_back("lddt", lddt.values);
  }

  json correlations = json::array();
  json rank1 = json::object();
  for (const auto& kind : a.kinds) {
    const auto g = similarity::gram(pipeline::featurize(traj, kind_of(kind), opts));
    matrix_io::write_mpf(g.values, matrix_io::tag::kGram, outputs.file("gram_" + kind + ".mpf"));
    for (const auto& [name, m] : structural)
      correlations.push_back(correlation_entry("gram_" + kind, name, similarity::spearman_lower_triangle(g.values, m)));
    if (a.rank1 > 0) {
      const auto dec = similarity::rank1(g, std::min<Eigen::Index>(a.rank1, g.n()));
      matrix_io::write_mpf(dec.eigenvectors(), matrix_io::tag::kRank1, outputs.file("rank1_" + kind + ".mpf"));
      const double total = g.values.trace();
      json ev = json::array(), frac = json::array();
      for (Eigen::Index i = 0; i < dec.size(); ++i) {
        ev.push_back(dec.eigenvalues()[i]);
        frac.push_back(number_or_null(total > 0.0 ? dec.eigenvalues()[i] / total : std::nan("")));
      }
      rank1[kind] = {{"eigenvalues", ev}, {"fraction_of_trace", frac}, {"eigenvectors", "rank1_" + kind + ".mpf"}};
    }
  }
  if (structural.size() == 2)
    correlations.push_back(
        correlation_entry("rmsd", "lddt", similarity::spearman_lower_triangle(structural[0].second, structural[1].second)));

  json report = {{"frames", traj.frames()}, {"correlations", correlations}};
  if (a.rank1 > 0) report["rank1"] = rank1;
  write_json(report, outputs.file("similarity.json"));
  outputs.commit();
}

}  // namespace

Command add_featurize(CLI::App& root) {
  auto args = std::make_shared<FeaturizeArgs>();
  auto* app = root.add_subcommand("featurize", "compute feature matrices (MPF1) from a trajectory");
  args->traj.add_to(app);
  app->add_option("-k,--kind", args->kinds, "feature kinds")->check(CLI::IsMember(kAllKindNames))->capture_default_str();
  app->add_option("-o,--out", args->out, "output directory")->required();
  app->add_flag("--csv", args->csv, "also write CSV copies");
  args->settings.add_to(app);
  return {app, [args](const Globals&) { run_featurize(*args); }};
}

Command add_kinetics(CLI::App& root) {
  auto args = std::make_shared<KineticsArgs>();
  auto* app = root.add_subcommand("kinetics", "AMUSE (PCA + TICA), implied timescales, lag scan and VAMP-2");
  app->add_option("-f,--features", args->features, "MPF1 feature matrices")->check(CLI::ExistingFile);
  args->traj.add_to(app, false);
  app->add_option("-k,--kind", args->kinds, "feature kinds computed from --input")->check(CLI::IsMember(kAllKindNames));
  args->settings.add_to(app);
  app->add_option("-o,--out", args->out, "output directory")->required();
  app->add_option("--evr", args->evr, "PCA cumulative explained-variance threshold")->check(CLI::Range(1e-9, 1.0));
  app->add_option("--lag", args->lag, "fixed lag in frames; 0 scans the lag grid");
  app->add_option("--lag-first", args->lag_first, "first lag as a fraction of T")->check(CLI::Range(0.0, 1.0));
  app->add_option("--lag-last", args->lag_last, "last lag as a fraction of T")->check(CLI::Range(0.0, 1.0));
  app->add_option("--lag-count", args->lag_count, "number of lags on the grid")->check(CLI::PositiveNumber);
  app->add_option("--vamp-k", args->vamp_k, "components in the VAMP-2 score; 0 uses all PCA components");
  app->add_flag("--nonreversible", args->nonreversible, "skip the symmetrized (reversible) estimate");
  return {app, [args](const Globals&) { run_kinetics(*args); }};
}

Command add_similarity(CLI::App& root) {
  auto args = std::make_shared<SimilarityArgs>();
  auto* app = root.add_subcommand("similarity", "pairwise RMSD / lDDT, feature Gram matrices and Spearman agreement");
  args->traj.add_to(app, false);
  app->add_option("-k,--kind", args->kinds, "feature kinds for Gram matrices")->check(CLI::IsMember(kAllKindNames));
  args->settings.add_to(app);
  app->add_option("-o,--out", args->out, "output directory")->required();
  app->add_flag("--no-lddt", args->skip_lddt, "skip the pairwise lDDT matrix");
  app->add_option("--r0", args->r0, "lDDT inclusion radius (Å)")->check(CLI::PositiveNumber);
  app->add_option("--rank1", args->rank1, "leading rank-1 components to export per Gram matrix");
  app->add_option("--compare", args->compare, "Spearman between two square MPF1 matrices")
      ->expected(2)
      ->check(CLI::ExistingFile);
  return {app, [args](const Globals&) { run_similarity(*args); }};
}

}  // namespace orifeat::cli
