#pragma once

#include <memory>

#include "stabmd/potential.hpp"
#include "stabmd/reference_potentials.hpp"

namespace stabmd {

// A system description paired with its reference potential and a
// deterministic initial configuration.
struct BuiltSystem {
  SystemSpec spec;
  std::shared_ptr<PotentialModel> reference;
  MatX3 initial_positions;
};

// Isotropic per-atom springs at fixed centers; atoms start at the centers.
BuiltSystem build_harmonic(int n_atoms, double k, double mass = 1.0);

// Two bonded atoms in a quartic double well over their distance.
BuiltSystem build_double_well_dimer(double a = 19.0, double d0 = 1.5,
                                    double mass = 12.0);

// n-atom Lennard-Jones cluster, free boundary, relaxed from an icosahedral
// seed by fixed-step gradient descent (deterministic).
BuiltSystem build_lj_cluster(int n_atoms = 13, double epsilon = 0.238,
                             double sigma = 3.4, double cutoff = 8.5,
                             int relax_steps = 2000);

// Periodic box of flexible three-site water molecules on a jittered grid.
BuiltSystem build_toy_water(int n_molecules = 8, double box_length = 8.0,
                            ToyWater::Params params = {});

}  // namespace stabmd
