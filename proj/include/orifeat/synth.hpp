#pragma once

#include <cstdint>
#include <vector>

#include "orifeat/common.hpp"
#include "orifeat/trajio.hpp"

// Deterministic synthetic inputs for the CLI `synth` command and the
// acceptance checks. Nothing here is used by the analysis code itself.
namespace orifeat::synth {

/// Backbone with Cα on an ideal helix (radius 2.3 Å, 100° and 1.5 Å per residue)
/// and N, C at realistic bond lengths around a 111° N–Cα–C angle.
trajio::Structure helix(std::size_t residues, std::uint64_t seed, std::vector<char> chain_ids = {});

/// Gaussian jitter (σ Å per coordinate) around one helix.
trajio::BackboneTrajectory jittered_helix(std::size_t frames, std::size_t residues, double sigma, std::uint64_t seed);

/// Stationary unit-variance AR(1) in column 0, independent white noise in the rest.
Matrix ar1_features(std::size_t frames, std::size_t dims, double rho, std::uint64_t seed);

struct TwoStateComplex {
  trajio::BackboneTrajectory trajectory;
  trajio::Structure crystal;
  std::vector<int> bound;  // 1 bound, 0 unbound per frame
};

/// Two parallel helices (chains A and B) with an interface in the crystal.
/// Bound frames jitter around the crystal. Unbound frames move chain B away by
/// `separation` Å, turn it by 60° about its own centroid and turn every chain A
/// residue's N and C by 40° about its Cα.
TwoStateComplex two_state_complex(std::size_t frames, std::size_t residues_a, std::size_t residues_b,
                                  double bound_fraction, std::uint64_t seed, double sigma = 0.3,
                                  double separation = 20.0);

}  // namespace orifeat::synth
