#include "stabmd/replica.hpp"

#include "stabmd/errors.hpp"
#include "stabmd/parallel.hpp"

namespace stabmd {

void ReplicaSet::validate() const {
  if (!spec) throw ValidationError("replica set has no system");
  if (replicas.empty()) throw ValidationError("replica set is empty");
  if (thermostats.size() != replicas.size() ||
      active.size() != replicas.size() ||
      total_time_fs.size() != replicas.size())
    throw ValidationError("replica set fields are misaligned");
  for (const SimState& s : replicas) validate_shapes(s, *spec);
}

double unstable_fraction(const ReplicaSet& replicas) {
  if (replicas.replicas.empty())
    throw ValidationError("replica set is empty");
  int inactive = 0;
  for (bool a : replicas.active)
    if (!a) ++inactive;
  return static_cast<double>(inactive) / replicas.size();
}

std::vector<std::vector<SimState>> simulate_replicas(
    const PotentialModel& model, ReplicaSet& replicas,
    const IntegratorConfig& cfg, int n_steps, int sample_every, int workers) {
  replicas.validate();
  if (n_steps <= 0) throw ValidationError("step count must be positive");
  if (sample_every <= 0 || n_steps % sample_every != 0)
    throw ValidationError("sampling stride must divide the step count");

  const int r = replicas.size();
  std::vector<std::vector<SimState>> samples(r);
  parallel_for(r, workers, [&](int i) {
    if (!replicas.active[i]) return;
    Simulation sim(model, *replicas.spec, cfg, replicas.replicas[i],
                   replicas.thermostats[i]);
    samples[i].reserve(n_steps / sample_every);
    for (int s = 1; s <= n_steps; ++s) {
      sim.step();
      if (s % sample_every == 0) samples[i].push_back(sim.state());
    }
    replicas.replicas[i] = sim.state();
    replicas.thermostats[i] = sim.thermostat();
    replicas.total_time_fs[i] += n_steps * cfg.dt;
  });
  return samples;
}

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) {
  // splitmix64 over the (master, index) pair.
  std::uint64_t z = master + 0x9e3779b97f4a7c15ULL * (index + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace stabmd
