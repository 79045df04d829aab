#pragma once

#include "stabmd/state.hpp"
#include "stabmd/system.hpp"

namespace stabmd {

// Parameterized energy function. Energies decompose into per-atom
// contributions that sum to the total; forces are -grad_r of the energy.
class PotentialModel {
 public:
  virtual ~PotentialModel() = default;

  virtual double energy(const SimState& state, const SystemSpec& spec) const = 0;
  virtual MatX3 forces(const SimState& state, const SystemSpec& spec) const = 0;
  virtual VecXd per_atom_energies(const SimState& state,
                                  const SystemSpec& spec) const = 0;

  // Number of learnable parameters; 0 for fixed reference potentials.
  virtual int param_count() const { return 0; }

  // grad_theta of the total energy. Throws for non-learnable models.
  virtual VecXd param_gradient(const SimState& state,
                               const SystemSpec& spec) const;

  // grad_theta of sum_{m,k} weights(m,k) * F(m,k), the contraction of the
  // predicted forces with a fixed weight matrix. Needed for the force term
  // of the energy/forces loss. Throws for non-learnable models.
  virtual VecXd force_contraction_gradient(const SimState& state,
                                           const SystemSpec& spec,
                                           const MatX3& weights) const;
};

// Sum of per-atom energies restricted to a neighborhood; atomic energies are
// evaluated in the full environment.
double local_energy(const PotentialModel& model, const SimState& state,
                    const SystemSpec& spec, const LocalNeighborhood& nbhd);

}  // namespace stabmd
