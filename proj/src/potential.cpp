#include "stabmd/potential.hpp"

#include "stabmd/errors.hpp"

namespace stabmd {

VecXd PotentialModel::param_gradient(const SimState&, const SystemSpec&) const {
  throw ValidationError("model has no learnable parameters");
}

VecXd PotentialModel::force_contraction_gradient(const SimState&,
                                                 const SystemSpec&,
                                                 const MatX3&) const {
  throw ValidationError("model has no learnable parameters");
}

double local_energy(const PotentialModel& model, const SimState& state,
                    const SystemSpec& spec, const LocalNeighborhood& nbhd) {
  if (nbhd.atom_indices.empty())
    throw ValidationError("empty local neighborhood");
  const VecXd per_atom = model.per_atom_energies(state, spec);
  double e = 0.0;
  for (int i : nbhd.atom_indices) {
    if (i < 0 || i >= spec.n_atoms)
      throw ValidationError("neighborhood index out of range");
    e += per_atom[i];
  }
  return e;
}

}  // namespace stabmd
