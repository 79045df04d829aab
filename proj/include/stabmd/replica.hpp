#pragma once

#include <memory>
#include <vector>

#include "stabmd/integrator.hpp"

namespace stabmd {

// A set of parallel MD trajectories sharing one system and model.
struct ReplicaSet {
  std::shared_ptr<const SystemSpec> spec;
  std::vector<SimState> replicas;
  std::vector<ThermostatState> thermostats;
  std::vector<bool> active;
  std::vector<double> total_time_fs;

  int size() const { return static_cast<int>(replicas.size()); }
  void validate() const;
};

// Fraction of replicas currently marked inactive (unstable).
double unstable_fraction(const ReplicaSet& replicas);

// Advances every active replica by n_steps, leaving inactive replicas
// untouched, and returns states sampled every sample_every steps (so
// n_steps / sample_every samples per active replica; empty for inactive).
// n_steps must be divisible by sample_every.
std::vector<std::vector<SimState>> simulate_replicas(
    const PotentialModel& model, ReplicaSet& replicas,
    const IntegratorConfig& cfg, int n_steps, int sample_every,
    int workers = 1);

// Per-replica RNG stream derived from a master seed; replica count does not
// perturb any single replica's stream.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index);

}  // namespace stabmd
