#include "stabmd/integrator.hpp"

#include <cmath>

#include "stabmd/errors.hpp"
#include "stabmd/units.hpp"

namespace stabmd {

namespace {

// kcal/(mol*A) force -> amu*A/fs^2 momentum rate.
constexpr double kForceConv = 1.0 / units::kKcalPerMechanical;

double mechanical_ke(const MatX3& p, const VecXd& masses) {
  double ke = 0.0;
  for (int i = 0; i < p.rows(); ++i)
    ke += p.row(i).squaredNorm() / (2.0 * masses[i]);
  return ke;
}

// Symmetric Nose-Hoover half-step: advances (xi, eta) and rescales momenta.
void nh_half(MatX3& p, const VecXd& masses, ThermostatState& th, double dt,
             double q, double gkt) {
  double ke = mechanical_ke(p, masses) * units::kKcalPerMechanical;
  double g = (2.0 * ke - gkt) / q;
  th.xi += g * dt / 4.0;
  const double s = std::exp(-th.xi * dt / 2.0);
  p *= s;
  th.eta += th.xi * dt / 2.0;
  ke *= s * s;
  g = (2.0 * ke - gkt) / q;
  th.xi += g * dt / 4.0;
}

// Velocity Verlet with the entry forces supplied; returns the exit forces.
void verlet_core(const PotentialModel& model, SimState& state,
                 const SystemSpec& spec, double dt, MatX3& forces) {
  state.momenta += forces * (0.5 * dt * kForceConv);
  for (int i = 0; i < spec.n_atoms; ++i)
    state.positions.row(i) += state.momenta.row(i) * (dt / spec.masses[i]);
  forces = model.forces(state, spec);
  state.momenta += forces * (0.5 * dt * kForceConv);
  state.time += dt;
  require_finite(state, "time integration");
}

}  // namespace

void IntegratorConfig::validate() const {
  if (!(dt > 0.0)) throw ValidationError("timestep must be positive");
  if (ensemble == Ensemble::NVT) {
    if (!(temperature > 0.0))
      throw ValidationError("NVT temperature must be positive");
    if (!(thermostat_frequency_cm > 0.0))
      throw ValidationError("thermostat frequency must be positive");
  }
}

double nose_hoover_mass(int n_atoms, double temperature, double frequency_cm) {
  const double omega = units::angular_frequency(frequency_cm);
  return 3.0 * n_atoms * units::kBoltzmann * temperature / (omega * omega);
}

SimState step_nve(const PotentialModel& model, const SimState& state,
                  const SystemSpec& spec, const IntegratorConfig& cfg) {
  validate_shapes(state, spec);
  require_finite(state, "step_nve input");
  SimState next = state;
  MatX3 forces = model.forces(next, spec);
  verlet_core(model, next, spec, cfg.dt, forces);
  return next;
}

std::pair<SimState, ThermostatState> step_nvt(const PotentialModel& model,
                                              const SimState& state,
                                              const ThermostatState& th,
                                              const SystemSpec& spec,
                                              const IntegratorConfig& cfg) {
  validate_shapes(state, spec);
  require_finite(state, "step_nvt input");
  SimState next = state;
  ThermostatState t = th;
  MatX3 forces = model.forces(next, spec);
  const double q =
      nose_hoover_mass(spec.n_atoms, cfg.temperature, cfg.thermostat_frequency_cm);
  const double gkt = 3.0 * spec.n_atoms * units::kBoltzmann * cfg.temperature;
  nh_half(next.momenta, spec.masses, t, cfg.dt, q, gkt);
  verlet_core(model, next, spec, cfg.dt, forces);
  nh_half(next.momenta, spec.masses, t, cfg.dt, q, gkt);
  return {next, t};
}

double nose_hoover_invariant(const PotentialModel& model,
                             const SimState& state, const ThermostatState& th,
                             const SystemSpec& spec,
                             const IntegratorConfig& cfg) {
  const double q =
      nose_hoover_mass(spec.n_atoms, cfg.temperature, cfg.thermostat_frequency_cm);
  const double gkt = 3.0 * spec.n_atoms * units::kBoltzmann * cfg.temperature;
  return kinetic_energy(state, spec) + model.energy(state, spec) +
         0.5 * q * th.xi * th.xi + gkt * th.eta;
}

MatX3 maxwell_boltzmann_momenta(const SystemSpec& spec, double temperature,
                                std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  MatX3 p(spec.n_atoms, 3);
  for (int i = 0; i < spec.n_atoms; ++i) {
    const double sigma = std::sqrt(spec.masses[i] * units::kBoltzmann *
                                   temperature / units::kKcalPerMechanical);
    for (int k = 0; k < 3; ++k) p(i, k) = sigma * normal(rng);
  }
  if (spec.n_atoms > 1) {
    const Vec3 ptot = p.colwise().sum();
    const double mtot = spec.masses.sum();
    for (int i = 0; i < spec.n_atoms; ++i)
      p.row(i) -= (spec.masses[i] / mtot) * ptot;
  }
  return p;
}

Simulation::Simulation(const PotentialModel& model, const SystemSpec& spec,
                       IntegratorConfig cfg, SimState initial,
                       ThermostatState th)
    : model_(&model),
      spec_(&spec),
      cfg_(std::move(cfg)),
      state_(std::move(initial)),
      th_(th) {
  cfg_.validate();
  validate_shapes(state_, *spec_);
  require_finite(state_, "simulation initial state");
  forces_ = model_->forces(state_, *spec_);
  q_ = nose_hoover_mass(spec_->n_atoms, cfg_.temperature,
                        cfg_.thermostat_frequency_cm);
}

void Simulation::step() {
  const double gkt =
      3.0 * spec_->n_atoms * units::kBoltzmann * cfg_.temperature;
  if (cfg_.ensemble == Ensemble::NVT)
    nh_half(state_.momenta, spec_->masses, th_, cfg_.dt, q_, gkt);
  verlet_core(*model_, state_, *spec_, cfg_.dt, forces_);
  if (cfg_.ensemble == Ensemble::NVT)
    nh_half(state_.momenta, spec_->masses, th_, cfg_.dt, q_, gkt);
}

void Simulation::run(int n_steps) {
  for (int s = 0; s < n_steps; ++s) step();
}

void Simulation::reset(SimState state, ThermostatState th) {
  state_ = std::move(state);
  th_ = th;
  validate_shapes(state_, *spec_);
  require_finite(state_, "simulation reset state");
  forces_ = model_->forces(state_, *spec_);
}

}  // namespace stabmd
