#pragma once

#include <deque>
#include <span>
#include <vector>

#include "stabmd/observables.hpp"
#include "stabmd/state.hpp"

namespace stabmd {

enum class CriterionKind {
  BondDeviation,              // max |bond length - equilibrium| > threshold
  MinIntermolecularDistance,  // any non-bonded pair closer than threshold
  RdfMae,                     // windowed RDF deviates from the reference
};

struct StabilityCriterion {
  CriterionKind kind = CriterionKind::BondDeviation;
  double threshold = 0.5;  // A for the distance criteria, unitless for RdfMae
  double window_ps = 1.0;  // RdfMae averaging window
  // Element-conditioned reference RDFs (g_ref holds the reference curve).
  std::vector<ObservableSpec> reference_rdfs;

  void validate() const;
};

// Largest |distance - equilibrium| over the bond set.
double max_bond_deviation(const SimState& state, const SystemSpec& spec);

// Smallest minimum-image distance over pairs not connected by a bond.
double min_nonbonded_distance(const SimState& state, const SystemSpec& spec);

// Riemann-sum integral of |reference - windowed mean RDF| for one
// element-conditioned reference.
double rdf_mae_integral(std::span<const SimState> window,
                        const SystemSpec& spec, const ObservableSpec& ref);

// true = stable. Pure functions of the given state(s).
bool check_bond_deviation(const SimState& state, const SystemSpec& spec,
                          double threshold);
bool check_min_intermolecular(const SimState& state, const SystemSpec& spec,
                              double threshold);
// Unstable iff any element-conditioned RDF exceeds the threshold over the
// frame window. An empty window counts as stable.
bool check_rdf_mae(std::span<const SimState> window, const SystemSpec& spec,
                   const std::vector<ObservableSpec>& reference_rdfs,
                   double threshold);

// Applies a criterion to a trajectory, buffering the recent frames the
// RdfMae window needs. push() returns the verdict after seeing the frame;
// the window is considered filled once it spans window_ps.
class StabilityMonitor {
 public:
  StabilityMonitor(StabilityCriterion criterion, const SystemSpec& spec);

  bool push(const SimState& state);  // true = stable
  bool check(const SimState& state) const;  // stateless kinds only
  void reset();

 private:
  StabilityCriterion criterion_;
  const SystemSpec* spec_;
  std::deque<SimState> window_;
};

}  // namespace stabmd
