#include <fstream>

#include "commands.hpp"
#include "orifeat/bench.hpp"
#include "orifeat/clustering.hpp"
#include "orifeat/matrix_io.hpp"
#include "orifeat/synth.hpp"

namespace orifeat::cli {

namespace {

struct ProfileArgs {
  std::vector<std::string> ops = {"so3_log", "pointcloud_log", "metric_tensor", "metric_inverse"};
  std::string grid = "desk";
  std::vector<std::size_t> frames;
  std::vector<std::size_t> residues;
  int replicas = 3;
  double min_duration = 0.05;
  double budget = 2.0;
  std::size_t fit_min_frames = 256;
  std::size_t fit_min_residues = 16;
  fs::path out;
};

void run_profile(const ProfileArgs& a, const Globals& g) {
  bench::ProfileGrid grid = a.grid == "full" ? bench::full_grid() : bench::desk_grid();
  if (!a.frames.empty()) grid.sample_counts = a.frames;
  if (!a.residues.empty()) grid.residue_counts = a.residues;
  grid.replicas = a.replicas;
  grid.min_duration = a.min_duration;
  grid.cell_budget = a.budget;
  grid.seed = g.seed;
  std::vector<bench::Op> ops;
  for (const auto& name : a.ops) ops.push_back(*bench::parse_op(name));

  Outputs outputs(a.out);
  const auto report = bench::profile(ops, grid);
  {
    std::ofstream csv(outputs.file("profile.csv"));
    csv << "op,T,R,replica,seconds\n";
    csv.precision(9);
    for (const auto& t : report.timings)
      csv << bench::op_name(t.op) << ',' << t.frames << ',' << t.residues << ',' << t.replica << ',' << t.seconds
          << '\n';
    if (!csv) throw Error("failed writing profile.csv");
  }
  json slopes = json::array(), skipped = json::array();
  for (const auto& f : bench::fit_slopes(report, a.fit_min_frames, a.fit_min_residues))
    slopes.push_back({{"op", bench::op_name(f.op)}, {"axis", f.axis}, {"fixed", f.fixed}, {"slope", f.slope},
                      {"points", f.points}});
  for (const auto& s : report.skipped)
    skipped.push_back({{"op", bench::op_name(s.op)}, {"T", s.frames}, {"R", s.residues},
                       {"predicted_seconds", s.predicted_seconds}});
  write_json({{"seed", g.seed},
              {"threads", thread_count()},
              {"grid", {{"T", grid.sample_counts}, {"R", grid.residue_counts}, {"replicas", grid.replicas}}},
              {"slopes", slopes},
              {"skipped", skipped}},
             outputs.file("profile.json"));
  outputs.commit();
}

struct SynthArgs {
  std::string what = "trajectory";
  std::size_t frames = 100;
  std::size_t residues = 20;
  std::size_t residues_b = 0;
  double sigma = 0.3;
  double rho = 0.99;
  std::size_t dims = 1;
  double bound_fraction = 0.5;
  double separation = 20.0;
  fs::path out;
  fs::path crystal;
  fs::path states;
};

void write_trajectory(const trajio::BackboneTrajectory& t, const fs::path& path) {
  if (path.extension() == ".csv")
    trajio::write_csv(t, path);
  else
    trajio::write_mpb(t, path);
}

void run_synth(const SynthArgs& a, const Globals& g) {
  Outputs outputs(a.out.parent_path().empty() ? fs::path(".") : a.out.parent_path());
  const fs::path out = outputs.file(a.out.filename().string());
  if (a.what == "trajectory" || a.what == "constant") {
    write_trajectory(synth::jittered_helix(a.frames, a.residues, a.what == "constant" ? 0.0 : a.sigma, g.seed), out);
  } else if (a.what == "ar1") {
    matrix_io::write_mpf(synth::ar1_features(a.frames, a.dims, a.rho, g.seed), matrix_io::tag::kGeneric, out);
  } else if (a.what == "white") {
    matrix_io::write_mpf(synth::ar1_features(a.frames, a.dims, 0.0, g.seed), matrix_io::tag::kGeneric, out);
  } else {
    const std::size_t rb = a.residues_b ? a.residues_b : a.residues;
    const auto c = synth::two_state_complex(a.frames, a.residues, rb, a.bound_fraction, g.seed, a.sigma, a.separation);
    write_trajectory(c.trajectory, out);
    if (!a.crystal.empty()) {
      Outputs side(a.crystal.parent_path().empty() ? fs::path(".") : a.crystal.parent_path());
      trajio::write_pdb(c.crystal, side.file(a.crystal.filename().string()));
      side.commit();
    }
    if (!a.states.empty()) {
      Outputs side(a.states.parent_path().empty() ? fs::path(".") : a.states.parent_path());
      clustering::write_labels(c.bound, side.file(a.states.filename().string()));
      side.commit();
    }
  }
  outputs.commit();
}

}  // namespace

Command add_profile(CLI::App& root) {
  auto args = std::make_shared<ProfileArgs>();
  auto* app = root.add_subcommand("profile", "time the core geometric operations over a T × R grid");
  app->add_option("--ops", args->ops, "operations to time")
      ->delimiter(',')
      ->check(CLI::IsMember({"so3_log", "pointcloud_log", "metric_tensor", "metric_inverse"}));
  app->add_option("--grid", args->grid, "preset grid")->check(CLI::IsMember({"desk", "full"}));
  app->add_option("--frames", args->frames, "override the frame counts")->delimiter(',');
  app->add_option("--residues", args->residues, "override the residue counts")->delimiter(',');
  app->add_option("--replicas", args->replicas, "replicas per cell")->check(CLI::PositiveNumber);
  app->add_option("--min-duration", args->min_duration, "repeat each timing for at least this long (s)");
  app->add_option("--budget", args->budget, "skip cells predicted to exceed this many seconds")
      ->check(CLI::PositiveNumber);
  app->add_option("--fit-min-frames", args->fit_min_frames, "smallest T used in slope fits");
  app->add_option("--fit-min-residues", args->fit_min_residues, "smallest R used in slope fits");
  app->add_option("-o,--out", args->out, "output directory")->required();
  return {app, [args](const Globals& g) { run_profile(*args, g); }};
}

Command add_synth(CLI::App& root) {
  auto args = std::make_shared<SynthArgs>();
  auto* app = root.add_subcommand("synth", "write synthetic inputs for smoke tests and demos");
  app->add_option("--what", args->what, "what to generate")
      ->check(CLI::IsMember({"trajectory", "constant", "ar1", "white", "complex"}));
  app->add_option("--frames", args->frames, "frames")->check(CLI::PositiveNumber);
  app->add_option("--residues", args->residues, "residues (chain A for complexes)")->check(CLI::PositiveNumber);
  app->add_option("--residues-b", args->residues_b, "chain B residues for complexes; default as chain A");
  app->add_option("--sigma", args->sigma, "coordinate jitter (Å)")->check(CLI::NonNegativeNumber);
  app->add_option("--rho", args->rho, "AR(1) coefficient")->check(CLI::Range(-0.999999, 0.999999));
  app->add_option("--dims", args->dims, "feature columns for ar1 / white")->check(CLI::PositiveNumber);
  app->add_option("--bound-fraction", args->bound_fraction, "complex: probability a frame is bound")
      ->check(CLI::Range(0.0, 1.0));
  app->add_option("--separation", args->separation, "complex: unbound displacement of chain B (Å)");
  app->add_option("--crystal", args->crystal, "complex: also write the bound structure as PDB");
  app->add_option("--states", args->states, "complex: also write the true states as a labels CSV");
  app->add_option("-o,--out", args->out, "output file (.mpb / .csv trajectory, .mpf features)")->required();
  return {app, [args](const Globals& g) { run_synth(*args, g); }};
}

}  // namespace orifeat::cli
