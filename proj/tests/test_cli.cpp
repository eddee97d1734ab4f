#include "doctest.h"

#include <sys/wait.h>

#include <cstdlib>
#include <fstream>

#include "json.hpp"
#include "orifeat/clustering.hpp"
#include "orifeat/matrix_io.hpp"
#include "support.hpp"

using namespace orifeat;
using namespace orifeat::testing;
using json = nlohmann::json;

namespace {

// Runs the CLI inside `dir`; stdout and stderr go to dir/log.txt.
int run(const TempDir& dir, const std::string& args) {
  const std::string cmd = "cd '" + dir.path().string() + "' && '" ORIFEAT_CLI_PATH "' " + args + " >> log.txt 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

json read_json(const std::filesystem::path& p) {
  std::ifstream in(p);
  return json::parse(in);
}

std::string log_of(const TempDir& dir) {
  std::ifstream in(dir / "log.txt");
  return std::string(std::istreambuf_iterator<char>(in), {});
}

}  // namespace

TEST_CASE("featurize writes the five default kinds with documented shapes") {
  TempDir dir("cli_feat");
  REQUIRE(run(dir, "synth --what trajectory --frames 10 --residues 9 -o t.mpb") == 0);
  REQUIRE(run(dir, "featurize -i t.mpb -o feat --csv") == 0);
  const std::vector<std::pair<std::string, Eigen::Index>> expect = {
      {"orientation", 27}, {"orientation_mean", 27}, {"ca", 27}, {"torsion", 36}, {"pointcloud", 27}};
  for (const auto& [kind, dims] : expect) {
    INFO(kind);
    const auto f = matrix_io::read_features(dir / ("feat/" + kind + ".mpf"));
    CHECK(f.frames() == 10);
    CHECK(f.dims() == dims);
    CHECK(std::filesystem::exists(dir / ("feat/" + kind + ".csv")));
  }
  const auto summary = read_json(dir / "feat/featurize.json");
  CHECK(summary["features"]["torsion"]["dims"] == 36);
  // Frame 0 is the default fixed reference.
  CHECK(matrix_io::read_features(dir / "feat/orientation.mpf").data().row(0).isZero(0.0));
}

TEST_CASE("featurize usage errors and constant trajectories") {
  TempDir dir("cli_feat_err");
  REQUIRE(run(dir, "synth --what constant --frames 6 --residues 5 -o c.mpb") == 0);
  CHECK(run(dir, "featurize -i c.mpb -o bad -k nonsense") == 2);
  CHECK_FALSE(std::filesystem::exists(dir / "bad"));
  CHECK(log_of(dir).find("nonsense") != std::string::npos);
  CHECK(run(dir, "featurize -i missing.mpb -o bad") == 2);
  CHECK(run(dir, "featurize -i c.mpb") == 2);

  REQUIRE(run(dir, "featurize -i c.mpb -o feat -k orientation_mean -k orientation") == 0);
  CHECK(matrix_io::read_features(dir / "feat/orientation_mean.mpf").data().isZero(0.0));
  CHECK(matrix_io::read_features(dir / "feat/orientation.mpf").data().isZero(0.0));
}

TEST_CASE("config file supplies options and the command line overrides them") {
  TempDir dir("cli_cfg");
  REQUIRE(run(dir, "synth --what trajectory --frames 5 --residues 4 -o t.mpb") == 0);
  std::ofstream(dir / "run.toml") << "[featurize]\ninput = \"t.mpb\"\nout = \"from_cfg\"\nkind = [\"ca\", \"torsion\"]\n";
  REQUIRE(run(dir, "--config run.toml featurize") == 0);
  CHECK(std::filesystem::exists(dir / "from_cfg/ca.mpf"));
  CHECK(std::filesystem::exists(dir / "from_cfg/torsion.mpf"));
  REQUIRE(run(dir, "--config run.toml featurize -k orientation -o override") == 0);
  CHECK(std::filesystem::exists(dir / "override/orientation.mpf"));
  CHECK_FALSE(std::filesystem::exists(dir / "override/ca.mpf"));
}

TEST_CASE("seeded synthesis is deterministic and thread count does not change results") {
  TempDir dir("cli_seed");
  REQUIRE(run(dir, "synth --what trajectory --frames 30 --residues 6 --seed 9 -o a.mpb") == 0);
  REQUIRE(run(dir, "--seed 9 synth --what trajectory --frames 30 --residues 6 -o b.mpb") == 0);
  REQUIRE(run(dir, "synth --what trajectory --frames 30 --residues 6 --seed 10 -o c.mpb") == 0);
  auto bytes = [&](const char* f) {
    std::ifstream in(dir / f, std::ios::binary);
    return std::string(std::istreambuf_iterator<char>(in), {});
  };
  CHECK(bytes("a.mpb") == bytes("b.mpb"));
  CHECK(bytes("a.mpb") != bytes("c.mpb"));
  REQUIRE(run(dir, "featurize -i a.mpb -o one -k orientation_mean --threads 1") == 0);
  REQUIRE(run(dir, "featurize -i a.mpb -o two -k orientation_mean --threads 3") == 0);
  CHECK(matrix_io::read_features(dir / "one/orientation_mean.mpf").data() ==
        matrix_io::read_features(dir / "two/orientation_mean.mpf").data());
}

TEST_CASE("kinetics recovers the AR(1) timescale end to end") {
  TempDir dir("cli_kin");
  REQUIRE(run(dir, "synth --what ar1 --frames 200000 --rho 0.99 --seed 1 -o ar.mpf") == 0);
  REQUIRE(run(dir, "kinetics -f ar.mpf --lag 10 -o kin") == 0);
  const auto r = read_json(dir / "kin/ar.kinetics.json");
  const double lambda = r["eigenvalues"][0];
  const double ts = r["timescales"][0];
  CHECK(std::abs(lambda - std::pow(0.99, 10)) < 0.1 * std::pow(0.99, 10));
  CHECK(std::abs(ts + 1.0 / std::log(0.99)) < 0.1 * (-1.0 / std::log(0.99)));
  CHECK(r["lag"] == 10);
  CHECK(r["vamp2"].get<double>() == doctest::Approx(std::pow(0.99, 20)).epsilon(0.1));
  CHECK(matrix_io::read_mpf(dir / "kin/ar.projections.mpf").data.rows() == 200000);

  // Lag scan on a grid inside the correlation time finds a plateau.
  REQUIRE(run(dir, "kinetics -f ar.mpf --lag-first 0.00005 --lag-last 0.0005 -o scan") == 0);
  const auto s = read_json(dir / "scan/ar.kinetics.json");
  CHECK_FALSE(s["plateau_lag"].is_null());
  CHECK(s["lag_search"]["lags"].size() == 10);
}

TEST_CASE("kinetics: no plateau gives null, two representations give two reports") {
  TempDir dir("cli_kin_null");
  REQUIRE(run(dir, "synth --what white --frames 2000 --dims 2 --seed 0 -o w.mpf") == 0);
  REQUIRE(run(dir, "kinetics -f w.mpf -o kin") == 0);
  const auto r = read_json(dir / "kin/w.kinetics.json");
  CHECK(r["plateau_lag"].is_null());
  CHECK(r["lag"] == r["lag_search"]["lags"][0]);

  REQUIRE(run(dir, "synth --what trajectory --frames 300 --residues 6 -o t.mpb") == 0);
  REQUIRE(run(dir, "kinetics -i t.mpb -k orientation -k ca --lag 5 -o two") == 0);
  const auto a = read_json(dir / "two/orientation.kinetics.json");
  const auto b = read_json(dir / "two/ca.kinetics.json");
  for (const auto* key : {"eigenvalues", "timescales", "lag", "vamp2", "pca_components"}) {
    CHECK(a.contains(key));
    CHECK(b.contains(key));
  }
}

TEST_CASE("a failing command exits nonzero and leaves no partial outputs") {
  TempDir dir("cli_fail");
  REQUIRE(run(dir, "synth --what ar1 --frames 1000 -o ok.mpf") == 0);
  REQUIRE(run(dir, "synth --what ar1 --frames 5 -o tiny.mpf") == 0);
  CHECK(run(dir, "kinetics -f ok.mpf -f tiny.mpf --lag 10 -o out") == 1);
  CHECK_FALSE(std::filesystem::exists(dir / "out"));
  CHECK(log_of(dir).find("error: kinetics") != std::string::npos);

  // Existing directory: only the files written by the failed run disappear.
  std::filesystem::create_directories(dir / "keep");
  std::ofstream(dir / "keep/mine.txt") << "x";
  CHECK(run(dir, "kinetics -f ok.mpf -f tiny.mpf --lag 10 -o keep") == 1);
  CHECK(std::filesystem::exists(dir / "keep/mine.txt"));
  CHECK_FALSE(std::filesystem::exists(dir / "keep/ok.kinetics.json"));
}

TEST_CASE("similarity: self correlation, lDDT diagonal, Gram files") {
  TempDir dir("cli_sim");
  REQUIRE(run(dir, "synth --what trajectory --frames 25 --residues 10 -o t.mpb") == 0);
  REQUIRE(run(dir, "similarity -i t.mpb -o sim --rank1 3") == 0);
  const auto lddt = matrix_io::read_mpf(dir / "sim/lddt.mpf");
  CHECK(lddt.tag == matrix_io::tag::kLddt);
  CHECK(lddt.data.diagonal().isOnes(0.0));
  CHECK(matrix_io::read_mpf(dir / "sim/rmsd.mpf").data.diagonal().isZero(0.0));
  const auto gram = matrix_io::read_mpf(dir / "sim/gram_ca.mpf");
  CHECK(gram.tag == matrix_io::tag::kGram);
  const auto report = read_json(dir / "sim/similarity.json");
  CHECK(report["correlations"].size() == 5);
  CHECK(report["rank1"]["ca"]["eigenvalues"].size() == 3);

  REQUIRE(run(dir, "similarity --compare sim/gram_ca.mpf sim/gram_ca.mpf -o self") == 0);
  const auto self = read_json(dir / "self/correlation.json");
  CHECK(self["rho"] == 1.0);
  CHECK(self["n_pairs"] == 300);
  CHECK(self["kind_a"] == "gram_ca");
}

TEST_CASE("cluster: identical labels, drop list, Ward, GMM expansion, silhouette") {
  TempDir dir("cli_cluster");
  clustering::write_labels({0, 0, 0, 1, 1, 2, -1, 1}, dir / "a.csv");
  REQUIRE(run(dir, "cluster -l a.csv --against a.csv -o same") == 0);
  const auto c = read_json(dir / "same/concordance.json");
  CHECK(c["ami"] == 1.0);
  CHECK(c["ari"] == 1.0);
  CHECK(c["n_coassigned"] == 7);

  REQUIRE(run(dir, "cluster -l a.csv --drop 0,2 -o dropped") == 0);
  CHECK(clustering::read_labels(dir / "dropped/labels.csv") == clustering::Labels{-1, -1, -1, 0, 0, -1, -1, 0});
  CHECK(run(dir, "cluster -l a.csv --drop 7 -o bad") == 1);
  CHECK_FALSE(std::filesystem::exists(dir / "bad"));

  // Two blobs for Ward, plus one far outlier kept out of the labels for GMM.
  std::mt19937_64 rng(130);
  std::normal_distribution<double> g(0.0, 1.0);
  Matrix x(61, 2);
  for (Eigen::Index i = 0; i < 60; ++i) x.row(i) << (i < 30 ? 0.0 : 50.0) + g(rng), g(rng);
  x.row(60) << 1.0, 0.5;
  matrix_io::write_mpf(x.topRows(60), matrix_io::tag::kProjection, dir / "emb60.mpf");
  matrix_io::write_mpf(x, matrix_io::tag::kProjection, dir / "emb.mpf");
  REQUIRE(run(dir, "cluster --ward emb60.mpf --cut 10 -o ward") == 0);
  const auto w = read_json(dir / "ward/cluster.json");
  CHECK(w["n_clusters"] == 2);
  CHECK(w["n_outliers"] == 0);

  clustering::Labels l(61, 0);
  for (int i = 30; i < 60; ++i) l[static_cast<std::size_t>(i)] = 1;
  l[60] = -1;
  clustering::write_labels(l, dir / "l.csv");
  Matrix d(61, 61);
  for (int i = 0; i < 61; ++i)
    for (int j = 0; j < 61; ++j) d(i, j) = (x.row(i) - x.row(j)).norm();
  matrix_io::write_mpf(d, matrix_io::tag::kRmsd, dir / "d.mpf");
  REQUIRE(run(dir, "cluster -l l.csv --embedding emb.mpf --expand --distance d.mpf -o gmm") == 0);
  CHECK(clustering::read_labels(dir / "gmm/labels.csv")[60] == 0);
  const auto gm = read_json(dir / "gmm/cluster.json");
  CHECK(gm["gmm"]["assigned"] == 1);
  CHECK(gm["silhouette"].get<double>() > 0.9);
}

TEST_CASE("correlate writes per-cluster maps and the wrapped difference") {
  TempDir dir("cli_corr");
  REQUIRE(run(dir, "synth --what trajectory --frames 40 --residues 7 -o t.mpb") == 0);
  clustering::Labels l(40, 0);
  for (int i = 20; i < 40; ++i) l[static_cast<std::size_t>(i)] = 1;
  clustering::write_labels(l, dir / "l.csv");
  REQUIRE(run(dir, "correlate -i t.mpb -l l.csv --diff 0,1 -o maps") == 0);
  const auto meta = read_json(dir / "maps/maps.json");
  CHECK(meta["maps"].size() == 5);
  for (const char* f : {"dccm_c0.csv", "dcom_c1.csv", "dcom_diff_c0_c1.csv"})
    CHECK(std::filesystem::exists(dir / ("maps/" + std::string(f))));
  REQUIRE(run(dir, "correlate -i t.mpb -o all --e-axis 0,0,1") == 0);
  CHECK(read_json(dir / "all/maps.json")["maps"][1]["e_axis"][2] == 1.0);
  CHECK(run(dir, "correlate -i t.mpb -o bad --e-axis 0,0") == 1);
}

TEST_CASE("associate: two-state complex and crystal-only input") {
  TempDir dir("cli_assoc");
  REQUIRE(run(dir, "synth --what complex --frames 600 --residues 10 --seed 2 --crystal x.pdb --states s.csv -o c.mpb") == 0);
  REQUIRE(run(dir, "associate -i c.mpb --crystal x.pdb -o as") == 0);
  const auto r = read_json(dir / "as/association.json");
  CHECK(r["metric_kind"] == "irmsd");
  REQUIRE_FALSE(r["threshold"].is_null());
  CHECK(std::abs(r["mi_pc1"].get<double>() - std::log(2.0)) < 0.1 * std::log(2.0));
  const auto truth = clustering::read_labels(dir / "s.csv");
  const Matrix table = matrix_io::read_csv(dir / "as/association.csv");
  for (Eigen::Index t = 0; t < table.rows(); ++t) CHECK(table(t, 2) == truth[static_cast<std::size_t>(t)]);
  const Matrix contrib = matrix_io::read_csv(dir / "as/contributions.csv");
  CHECK(std::abs(contrib.col(1).sum() - 1.0) < 1e-9);
  CHECK(std::abs(contrib.col(2).sum() - 1.0) < 1e-9);
  CHECK(r["n_bound"].get<int>() + r["n_unbound"].get<int>() == 600);

  REQUIRE(run(dir, "synth --what complex --frames 150 --residues 6 --bound-fraction 1 --sigma 0 --crystal x0.pdb -o c0.csv") == 0);
  REQUIRE(run(dir, "associate -i c0.csv --crystal x0.pdb -o only") == 0);
  const auto o = read_json(dir / "only/association.json");
  CHECK(o["threshold"].is_null());
  CHECK(o["n_bound"].is_null());
  CHECK(o["mi_pc1"].is_null());
  const Matrix only = matrix_io::read_csv(dir / "only/association.csv");
  CHECK(only.col(1).cwiseAbs().maxCoeff() < 1e-12);

  REQUIRE(run(dir, "synth --what trajectory --frames 150 --residues 6 -o single.mpb") == 0);
  CHECK(run(dir, "associate -i single.mpb -o nope") == 1);
  CHECK_FALSE(std::filesystem::exists(dir / "nope"));
}

TEST_CASE("profile writes timings and slope fits") {
  TempDir dir("cli_prof");
  REQUIRE(run(dir, "profile --ops so3_log,metric_tensor --frames 16,32 --residues 4,8 --replicas 2 "
                   "--min-duration 0 --fit-min-frames 1 --fit-min-residues 1 -o prof") == 0);
  std::ifstream csv(dir / "prof/profile.csv");
  std::string header;
  std::getline(csv, header);
  CHECK(header == "op,T,R,replica,seconds");
  int rows = 0;
  for (std::string line; std::getline(csv, line);) ++rows;
  CHECK(rows == 2 * 2 * 2 * 2);
  const auto p = read_json(dir / "prof/profile.json");
  CHECK(p["slopes"].size() == 2 * (2 + 2));
  CHECK(run(dir, "profile --ops fft -o x") == 2);
}
