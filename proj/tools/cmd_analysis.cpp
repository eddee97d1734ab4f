#include <fstream>
#include <set>

#include "commands.hpp"
#include "orifeat/association.hpp"
#include "orifeat/clustering.hpp"
#include "orifeat/correlation.hpp"
#include "orifeat/matrix_io.hpp"
#include "orifeat/pipeline.hpp"

namespace orifeat::cli {

namespace {

Matrix leading_columns(const Matrix& m, int dims) {
  if (dims <= 0 || dims >= m.cols()) return m;
  return m.leftCols(dims);
}

// ---------------------------------------------------------------------------

struct ClusterArgs {
  fs::path labels;
  fs::path ward;
  double cut = 10.0;
  std::vector<int> drop;
  fs::path embedding;
  int dims = 0;
  bool expand = false;
  double eps = 0.01;
  fs::path distance;
  fs::path against;
  fs::path out;
};

void run_cluster(const ClusterArgs& a) {
  if (a.labels.empty() == a.ward.empty()) throw DomainError("give exactly one of --labels or --ward");
  if (a.expand && a.embedding.empty()) throw DomainError("--expand needs --embedding");
  Outputs outputs(a.out);
  json report;

  clustering::Labels labels;
  if (!a.labels.empty()) {
    labels = clustering::read_labels(a.labels);
    report["source"] = a.labels.string();
  } else {
    labels = clustering::ward_cluster(leading_columns(matrix_io::read_mpf(a.ward).data, a.dims), a.cut);
    report["source"] = a.ward.string();
    report["ward_cut"] = a.cut;
  }
  const std::set<int> drop(a.drop.begin(), a.drop.end());
  labels = clustering::curate(labels, drop);
  report["dropped"] = a.drop;

  if (a.expand) {
    const Matrix emb = leading_columns(matrix_io::read_mpf(a.embedding).data, a.dims);
    if (static_cast<std::size_t>(emb.rows()) != labels.size())
      throw DomainError("embedding has " + std::to_string(emb.rows()) + " rows for " + std::to_string(labels.size()) +
                        " labels");
    clustering::GmmOptions g;
    g.eps = a.eps;
    const auto before = std::count(labels.begin(), labels.end(), clustering::kOutlier);
    labels = clustering::gmm_expand(emb, labels, g).labels;
    const auto after = std::count(labels.begin(), labels.end(), clustering::kOutlier);
    report["gmm"] = {{"eps", a.eps}, {"assigned", before - after}};
  }

  report["frames"] = labels.size();
  report["n_clusters"] = clustering::cluster_count(labels);
  report["n_outliers"] = std::count(labels.begin(), labels.end(), clustering::kOutlier);
  if (!a.distance.empty()) {
    const Matrix d = matrix_io::read_mpf(a.distance).data;
    report["silhouette"] = number_or_null(clustering::silhouette_precomputed(d, labels));
  }
  clustering::write_labels(labels, outputs.file("labels.csv"));
  if (!a.against.empty()) {
    const auto c = clustering::concordance(labels, clustering::read_labels(a.against));
    write_json({{"ami", number_or_null(c.ami)}, {"ari", number_or_null(c.ari)}, {"n_coassigned", c.n_coassigned}},
               outputs.file("concordance.json"));
  }
  write_json(report, outputs.file("cluster.json"));
  outputs.commit();
}

// ---------------------------------------------------------------------------

struct CorrelateArgs {
  TrajectoryArgs traj;
  fs::path labels;
  std::vector<int> clusters;
  std::string e_axis = "1,0,0";
  std::vector<int> diff;
  fs::path out;
};

void run_correlate(const CorrelateArgs& a) {
  const auto traj = a.traj.load();
  const Vec3 e = parse_vec3(a.e_axis);
  const auto lcs = features::build_lcs(traj);
  Outputs outputs(a.out);
  json maps = json::array();

  clustering::Labels labels;
  if (!a.labels.empty()) {
    labels = clustering::read_labels(a.labels);
    if (labels.size() != traj.frames())
      throw DomainError("labels cover " + std::to_string(labels.size()) + " frames, trajectory has " +
                        std::to_string(traj.frames()));
  }
  std::vector<int> clusters = a.clusters;
  if (clusters.empty() && !labels.empty())
    for (int k = 0; k < clustering::cluster_count(labels); ++k) clusters.push_back(k);
  for (int d : a.diff)
    if (std::find(clusters.begin(), clusters.end(), d) == clusters.end()) clusters.push_back(d);
  if (!clusters.empty() && labels.empty()) throw DomainError("--cluster and --diff need --labels");

  std::map<int, correlation::CorrelationMap> dcoms;
  auto emit = [&](const std::string& tag, std::optional<int> cluster, std::span<const std::size_t> frames) {
    auto dccm = correlation::dccm(traj, frames);
    auto dcom = correlation::dcom(lcs, frames, e);
    dccm.cluster_id = dcom.cluster_id = cluster;
    matrix_io::write_grid_csv(dccm.values, outputs.file("dccm_" + tag + ".csv"));
    matrix_io::write_grid_csv(dcom.values, outputs.file("dcom_" + tag + ".csv"));
    const json cl = cluster ? json(*cluster) : json(nullptr);
    const std::size_t n = frames.empty() ? traj.frames() : frames.size();
    maps.push_back({{"file", "dccm_" + tag + ".csv"}, {"kind", "dccm"}, {"cluster", cl}, {"frames", n}});
    maps.push_back({{"file", "dcom_" + tag + ".csv"}, {"kind", "dcom"}, {"cluster", cl}, {"frames", n},
                    {"e_axis", {dcom.e_axis.x(), dcom.e_axis.y(), dcom.e_axis.z()}}});
    if (cluster) dcoms.emplace(*cluster, std::move(dcom));
  };

  if (clusters.empty()) {
    emit("all", std::nullopt, {});
  } else {
    for (int k : clusters) {
      const auto frames = correlation::frames_in_cluster(labels, k);
      if (frames.size() < 2) throw DomainError("cluster " + std::to_string(k) + " has fewer than 2 frames");
      emit("c" + std::to_string(k), k, frames);
    }
  }
  if (!a.diff.empty()) {
    const auto d = correlation::dcom_diff(dcoms.at(a.diff[0]), dcoms.at(a.diff[1]));
    const std::string name = "dcom_diff_c" + std::to_string(a.diff[0]) + "_c" + std::to_string(a.diff[1]) + ".csv";
    matrix_io::write_grid_csv(d.values, outputs.file(name));
    maps.push_back({{"file", name}, {"kind", "dcom_diff"}, {"cluster_a", a.diff[0]}, {"cluster_b", a.diff[1]}});
  }
  write_json({{"residues", traj.residues()}, {"maps", maps}}, outputs.file("maps.json"));
  outputs.commit();
}

// ---------------------------------------------------------------------------

struct AssociateArgs {
  TrajectoryArgs traj;
  fs::path crystal;
  std::string metric = "irmsd";
  double cutoff = 10.0;
  int grid = 512;
  double bandwidth = 0.0;
  std::size_t min_samples = 100;
  std::string kind = "orientation";
  int k = 3;
  std::size_t top = 10;
  fs::path out;
};

std::string residue_label(const trajio::Structure& s, std::size_t i) {
  if (!s.labels().empty()) return s.labels()[i];
  return std::string(1, s.chain_ids()[i]) + ":" + std::to_string(i);
}

void run_associate(const AssociateArgs& a) {
  const auto traj = a.traj.load();
  trajio::Structure crystal;
  if (!a.crystal.empty()) {
    crystal = trajio::parse_reference(a.crystal);
  } else {
    warn("no --crystal given; using the first frame as the bound reference");
    crystal = traj.frame(0);
  }
  trajio::require_same_topology(traj.chain_ids(), crystal.chain_ids(), "crystal");
  Outputs outputs(a.out);

  const auto iface = association::detect_interface(crystal, a.cutoff);
  Vector metric;
  if (a.metric == "irmsd") {
    if (iface.empty()) throw DomainError("no interface residues within " + std::to_string(a.cutoff) + " Å in the crystal");
    metric = association::irmsd_series(traj, crystal, iface);
  } else {
    metric = association::cog_series(traj);
  }

  association::KdeOptions ko;
  ko.grid_points = a.grid;
  ko.min_samples = a.min_samples;
  if (a.bandwidth > 0.0) ko.bandwidth = a.bandwidth;
  const std::span<const double> series(metric.data(), static_cast<std::size_t>(metric.size()));
  const auto kde = association::kde_threshold(series, ko);

  json report = {{"metric_kind", a.metric}, {"frames", traj.frames()}};
  report["interface"] = {{"chain_a", std::string(1, iface.chain_a)}, {"chain_b", std::string(1, iface.chain_b)},
                         {"residues_a", iface.residues_a}, {"residues_b", iface.residues_b}, {"cutoff", iface.cutoff}};
  report["threshold"] = number_or_null(kde.threshold);
  report["bandwidth"] = kde.threshold ? json(kde.bandwidth) : json(nullptr);

  std::vector<int> labels(traj.frames(), -1);
  if (kde.threshold) {
    labels = association::bound_labels(series, *kde.threshold);
    const auto n_bound = std::count(labels.begin(), labels.end(), 1);
    report["n_bound"] = n_bound;
    report["n_unbound"] = static_cast<long>(labels.size()) - n_bound;
    matrix_io::write_csv((Matrix(kde.grid.size(), 3) << kde.grid, kde.pdf, kde.derivative).finished(),
                         {"x", "pdf", "derivative"}, outputs.file("kde.csv"));
  } else {
    warn("metric is (nearly) constant; bound/unbound threshold undefined");
    report["n_bound"] = nullptr;
    report["n_unbound"] = nullptr;
  }

  // Two-step PCA over the two monomers' features.
  std::vector<std::size_t> ra, rb;
  for (std::size_t i = 0; i < crystal.residues(); ++i) {
    if (crystal.chain_ids()[i] == iface.chain_a) ra.push_back(i);
    if (crystal.chain_ids()[i] == iface.chain_b) rb.push_back(i);
  }
  const auto kind = features::parse_kind(a.kind);
  if (!kind) throw DomainError("unknown feature kind '" + a.kind + "'");
  pipeline::FeaturizeOptions fa_opts, fb_opts;
  fa_opts.reference = crystal.subset(ra);
  fb_opts.reference = crystal.subset(rb);
  const auto fa = pipeline::featurize(traj.select_residues(ra), *kind, fa_opts);
  const auto fb = pipeline::featurize(traj.select_residues(rb), *kind, fb_opts);

  std::optional<association::TwoStepPca> model;
  try {
    model = association::two_step_pca(fa, fb);
  } catch (const DomainError& e) {
    warn(std::string("two-step PCA skipped: ") + e.what());
  }

  report["feature_kind"] = a.kind;
  report["mi_pc1"] = nullptr;
  report["mi_pc12"] = nullptr;
  report["top_contributing_residues"] = json::array();
  Matrix table(static_cast<Eigen::Index>(traj.frames()), 5);
  table.col(0) = Vector::LinSpaced(table.rows(), 0.0, static_cast<double>(table.rows() - 1));
  table.col(1) = metric;
  for (Eigen::Index t = 0; t < table.rows(); ++t) table(t, 2) = labels[static_cast<std::size_t>(t)];
  table.col(3).setConstant(std::nan(""));
  table.col(4).setConstant(std::nan(""));

  if (model) {
    table.col(3) = model->projections.col(0);
    table.col(4) = model->projections.col(1);
    const std::vector<std::size_t> order = [&] {
      std::vector<std::size_t> o = ra;
      o.insert(o.end(), rb.begin(), rb.end());
      return o;
    }();
    if (kde.threshold) {
      const std::set<int> seen(labels.begin(), labels.end());
      if (seen.size() == 2) {
        report["mi_pc1"] = association::knn_mi(Matrix(model->projections.col(0)), labels, a.k);
        report["mi_pc12"] = association::knn_mi(model->projections, labels, a.k);
      } else {
        warn("all frames fall on one side of the threshold; mutual information undefined");
      }
    }
    for (std::size_t idx : association::top_residues(*model, 0, a.top))
      report["top_contributing_residues"].push_back(
          {{"residue", order[idx]}, {"label", residue_label(crystal, order[idx])},
           {"contribution_pc1", model->contributions(static_cast<Eigen::Index>(idx), 0)},
           {"contribution_pc2", model->contributions(static_cast<Eigen::Index>(idx), 1)}});
    Matrix contrib(model->contributions.rows(), 3);
    for (Eigen::Index i = 0; i < contrib.rows(); ++i)
      contrib.row(i) << static_cast<double>(order[static_cast<std::size_t>(i)]), model->contributions(i, 0),
          model->contributions(i, 1);
    matrix_io::write_csv(contrib, {"residue", "pc1", "pc2"}, outputs.file("contributions.csv"));
  }
  report["mi_k"] = a.k;
  matrix_io::write_csv(table, {"frame", "metric", "label", "pc1", "pc2"}, outputs.file("association.csv"));
  write_json(report, outputs.file("association.json"));
  outputs.commit();
}

}  // namespace

Command add_cluster(CLI::App& root) {
  auto args = std::make_shared<ClusterArgs>();
  auto* app = root.add_subcommand("cluster", "label curation, GMM expansion, Ward clustering and concordance");
  app->add_option("-l,--labels", args->labels, "labels CSV (frame,label; -1 = outlier)")->check(CLI::ExistingFile);
  app->add_option("--ward", args->ward, "MPF1 embedding to cluster with Ward linkage")->check(CLI::ExistingFile);
  app->add_option("--cut", args->cut, "Ward dendrogram cut distance")->check(CLI::NonNegativeNumber);
  app->add_option("--drop", args->drop, "cluster ids to turn into outliers")->delimiter(',');
  app->add_option("--embedding", args->embedding, "MPF1 embedding for GMM expansion")->check(CLI::ExistingFile);
  app->add_option("--dims", args->dims, "use only the leading embedding columns; 0 keeps all");
  app->add_flag("--expand", args->expand, "assign outliers with the Gaussian-mixture rule");
  app->add_option("--eps", args->eps, "GMM expansion threshold")->check(CLI::PositiveNumber);
  app->add_option("--distance", args->distance, "square MPF1 distance matrix for the silhouette")
      ->check(CLI::ExistingFile);
  app->add_option("--against", args->against, "second labels CSV for AMI / ARI")->check(CLI::ExistingFile);
  app->add_option("-o,--out", args->out, "output directory")->required();
  return {app, [args](const Globals&) { run_cluster(*args); }};
}

Command add_correlate(CLI::App& root) {
  auto args = std::make_shared<CorrelateArgs>();
  auto* app = root.add_subcommand("correlate", "per-cluster DCCM and DCOM maps and DCOM differences");
  args->traj.add_to(app);
  app->add_option("-l,--labels", args->labels, "labels CSV selecting cluster frames")->check(CLI::ExistingFile);
  app->add_option("--cluster", args->clusters, "clusters to map; default all")->delimiter(',');
  app->add_option("--e-axis", args->e_axis, "DCOM reference axis as x,y,z");
  app->add_option("--diff", args->diff, "two clusters A,B: write the wrapped DCOM difference B - A")
      ->delimiter(',')
      ->expected(2);
  app->add_option("-o,--out", args->out, "output directory")->required();
  return {app, [args](const Globals&) { run_correlate(*args); }};
}

Command add_associate(CLI::App& root) {
  auto args = std::make_shared<AssociateArgs>();
  auto* app = root.add_subcommand("associate", "bound/unbound analysis of a two-chain trajectory");
  args->traj.add_to(app);
  app->add_option("--crystal", args->crystal, "bound reference structure (PDB)")->check(CLI::ExistingFile);
  app->add_option("--metric", args->metric, "per-frame association metric")->check(CLI::IsMember({"irmsd", "cog"}));
  app->add_option("--cutoff", args->cutoff, "interface Cα cutoff (Å)")->check(CLI::PositiveNumber);
  app->add_option("--grid", args->grid, "KDE grid points")->check(CLI::Range(3, 1 << 20));
  app->add_option("--bandwidth", args->bandwidth, "KDE bandwidth (Å); 0 uses Scott's rule")
      ->check(CLI::NonNegativeNumber);
  app->add_option("--min-samples", args->min_samples, "minimum frames for the KDE threshold");
  app->add_option("-k,--kind", args->kind, "feature kind for the two-step PCA")
      ->check(CLI::IsMember({"orientation", "orientation_mean", "orientation_axis", "orientation_angle", "ca",
                             "torsion", "pointcloud", "pointcloud_mean"}));
  app->add_option("--neighbours", args->k, "k for the mutual-information estimator")->check(CLI::PositiveNumber);
  app->add_option("--top", args->top, "residues listed by contribution");
  app->add_option("-o,--out", args->out, "output directory")->required();
  return {app, [args](const Globals&) { run_associate(*args); }};
}

}  // namespace orifeat::cli
