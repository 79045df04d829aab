#pragma once

#include <vector>

#include "stabmd/system.hpp"

namespace stabmd {

// Positions (A) and momenta (amu*A/fs) of one replica.
struct SimState {
  MatX3 positions;
  MatX3 momenta;
  double time = 0.0;  // fs
};

// Ordered subset of atom indices within a parent state.
struct LocalNeighborhood {
  std::vector<int> atom_indices;
  int state_index = 0;  // which sampled state this neighborhood came from
};

SimState make_state(const MatX3& positions, const MatX3& momenta,
                    double time = 0.0);

// Sum of p_i^2 / 2 m_i, kcal/mol.
double kinetic_energy(const SimState& state, const SystemSpec& spec);

// 2 KE / (3 N k_B), kelvin.
double instantaneous_temperature(const SimState& state,
                                 const SystemSpec& spec);

// Throws NumericalError if any position or momentum is NaN/Inf.
void require_finite(const SimState& state, const char* context);

void validate_shapes(const SimState& state, const SystemSpec& spec);

}  // namespace stabmd
