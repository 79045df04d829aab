#pragma once

#include <cstdint>
#include <random>
#include <utility>

#include "stabmd/potential.hpp"

namespace stabmd {

enum class Ensemble { NVE, NVT };

struct IntegratorConfig {
  double dt = 0.5;  // fs
  Ensemble ensemble = Ensemble::NVT;
  double temperature = 300.0;               // K, NVT only
  double thermostat_frequency_cm = 2000.0;  // Nose-Hoover effective mass knob
  std::uint64_t rng_seed = 0;

  void validate() const;
};

// Nose-Hoover friction and its time integral (for the extended invariant).
struct ThermostatState {
  double xi = 0.0;   // 1/fs
  double eta = 0.0;
};

// Q = 3 N k_B T / omega^2, kcal/mol * fs^2.
double nose_hoover_mass(int n_atoms, double temperature,
                        double frequency_cm);

// One velocity-Verlet step.
SimState step_nve(const PotentialModel& model, const SimState& state,
                  const SystemSpec& spec, const IntegratorConfig& cfg);

// One Nose-Hoover step (symmetric half-step split around velocity Verlet).
std::pair<SimState, ThermostatState> step_nvt(const PotentialModel& model,
                                              const SimState& state,
                                              const ThermostatState& th,
                                              const SystemSpec& spec,
                                              const IntegratorConfig& cfg);

// KE + U + 1/2 Q xi^2 + 3 N k_B T eta; conserved by step_nvt.
double nose_hoover_invariant(const PotentialModel& model,
                             const SimState& state, const ThermostatState& th,
                             const SystemSpec& spec,
                             const IntegratorConfig& cfg);

// Momenta from the Maxwell-Boltzmann distribution at the given temperature,
// with center-of-mass momentum removed (kept for single atoms).
MatX3 maxwell_boltzmann_momenta(const SystemSpec& spec, double temperature,
                                std::mt19937_64& rng);

// Stateful stepper that carries forces between steps. Produces trajectories
// bit-identical to repeated step_nve/step_nvt calls.
class Simulation {
 public:
  Simulation(const PotentialModel& model, const SystemSpec& spec,
             IntegratorConfig cfg, SimState initial,
             ThermostatState th = {});

  void step();
  void run(int n_steps);

  const SimState& state() const { return state_; }
  const ThermostatState& thermostat() const { return th_; }
  void reset(SimState state, ThermostatState th);

 private:
  const PotentialModel* model_;
  const SystemSpec* spec_;
  IntegratorConfig cfg_;
  SimState state_;
  ThermostatState th_;
  MatX3 forces_;
  double q_;  // thermostat mass
};

}  // namespace stabmd
