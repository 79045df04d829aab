#pragma once

#include <optional>
#include <vector>

#include "stabmd/integrator.hpp"
#include "stabmd/stability.hpp"

namespace stabmd {

// Reference-labeled trajectory frames used for energy/forces training and
// as replica initial conditions.
struct Dataset {
  struct Frame {
    SimState state;
    double energy = 0.0;  // kcal/mol
    MatX3 forces;         // kcal/(mol*A)
  };

  SystemSpec spec;
  double source_temperature = 0.0;  // K
  std::vector<Frame> frames;

  int size() const { return static_cast<int>(frames.size()); }
  std::vector<SimState> states() const;
};

struct GenerateConfig {
  int n_frames = 200;
  int equilibration_steps = 2000;
  int stride = 50;  // steps between sampled frames
  std::uint64_t seed = 0;
};

// NVT trajectory of the reference potential, subsampled at the stride after
// equilibration; each frame labeled with the reference energy and forces.
// Aborts with NumericalError if the reference simulation itself trips the
// optional stability criterion.
Dataset generate_dataset(const PotentialModel& reference,
                         const SystemSpec& spec, const MatX3& initial_positions,
                         const IntegratorConfig& integrator,
                         const GenerateConfig& gen,
                         const std::optional<StabilityCriterion>& criterion =
                             std::nullopt);

}  // namespace stabmd
