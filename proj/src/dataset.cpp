#include "stabmd/dataset.hpp"

#include "stabmd/errors.hpp"

namespace stabmd {

std::vector<SimState> Dataset::states() const {
  std::vector<SimState> out;
  out.reserve(frames.size());
  for (const Frame& f : frames) out.push_back(f.state);
  return out;
}

Dataset generate_dataset(const PotentialModel& reference,
                         const SystemSpec& spec,
                         const MatX3& initial_positions,
                         const IntegratorConfig& integrator,
                         const GenerateConfig& gen,
                         const std::optional<StabilityCriterion>& criterion) {
  if (gen.n_frames < 1) throw ValidationError("need at least one frame");
  if (gen.stride < 1) throw ValidationError("stride must be positive");

  std::mt19937_64 rng(gen.seed);
  SimState state{initial_positions,
                 maxwell_boltzmann_momenta(spec, integrator.temperature, rng),
                 0.0};
  Simulation sim(reference, spec, integrator, state);
  sim.run(gen.equilibration_steps);

  std::optional<StabilityMonitor> monitor;
  if (criterion) monitor.emplace(*criterion, spec);

  Dataset ds;
  ds.spec = spec;
  ds.source_temperature = integrator.temperature;
  ds.frames.reserve(gen.n_frames);
  for (int f = 0; f < gen.n_frames; ++f) {
    sim.run(gen.stride);
    const SimState& s = sim.state();
    if (monitor && !monitor->push(s))
      throw NumericalError(
          "reference simulation tripped the stability criterion while "
          "generating data");
    Dataset::Frame frame;
    frame.state = s;
    frame.energy = reference.energy(s, spec);
    frame.forces = reference.forces(s, spec);
    ds.frames.push_back(std::move(frame));
  }
  return ds;
}

}  // namespace stabmd
