#include "stabmd/state.hpp"

#include <string>

#include "stabmd/errors.hpp"
#include "stabmd/units.hpp"

namespace stabmd {

SimState make_state(const MatX3& positions, const MatX3& momenta,
                    double time) {
  return SimState{positions, momenta, time};
}

double kinetic_energy(const SimState& state, const SystemSpec& spec) {
  validate_shapes(state, spec);
  double ke = 0.0;
  for (int i = 0; i < spec.n_atoms; ++i)
    ke += state.momenta.row(i).squaredNorm() / (2.0 * spec.masses[i]);
  return ke * units::kKcalPerMechanical;
}

double instantaneous_temperature(const SimState& state,
                                 const SystemSpec& spec) {
  const double ke = kinetic_energy(state, spec);
  return 2.0 * ke / (3.0 * spec.n_atoms * units::kBoltzmann);
}

void require_finite(const SimState& state, const char* context) {
  if (!state.positions.allFinite() || !state.momenta.allFinite())
    throw NumericalError(std::string("non-finite state encountered in ") +
                         context);
}

void validate_shapes(const SimState& state, const SystemSpec& spec) {
  if (state.positions.rows() != spec.n_atoms ||
      state.momenta.rows() != spec.n_atoms)
    throw ValidationError("state shape does not match system atom count");
}

}  // namespace stabmd
