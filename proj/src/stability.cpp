#include "stabmd/stability.hpp"

#include <cmath>
#include <limits>
#include <set>
#include <utility>

#include "stabmd/errors.hpp"

namespace stabmd {

void StabilityCriterion::validate() const {
  if (!(threshold > 0.0))
    throw ValidationError("stability threshold must be positive");
  if (kind == CriterionKind::RdfMae) {
    if (!(window_ps > 0.0))
      throw ValidationError("RDF window must be positive");
    if (reference_rdfs.empty())
      throw ValidationError("RDF criterion needs reference curves");
    for (const ObservableSpec& o : reference_rdfs) {
      o.validate();
      if (o.g_ref.size() == 0)
        throw ValidationError("RDF criterion reference curve is empty");
    }
  }
}

double max_bond_deviation(const SimState& state, const SystemSpec& spec) {
  validate_shapes(state, spec);
  if (spec.bonds.empty())
    throw ValidationError("bond deviation criterion needs bonds");
  double worst = 0.0;
  for (const Bond& b : spec.bonds) {
    const double d = minimum_image_displacement(state.positions.row(b.i),
                                                state.positions.row(b.j), spec)
                         .norm();
    worst = std::max(worst, std::abs(d - b.length));
  }
  return worst;
}

double min_nonbonded_distance(const SimState& state, const SystemSpec& spec) {
  validate_shapes(state, spec);
  if (spec.n_atoms < 2)
    throw ValidationError("distance criterion needs at least two atoms");
  std::set<std::pair<int, int>> bonded;
  for (const Bond& b : spec.bonds)
    bonded.insert({std::min(b.i, b.j), std::max(b.i, b.j)});
  double best = std::numeric_limits<double>::infinity();
  for (int i = 0; i < spec.n_atoms; ++i) {
    for (int j = i + 1; j < spec.n_atoms; ++j) {
      if (bonded.count({i, j})) continue;
      const double d = minimum_image_displacement(state.positions.row(i),
                                                  state.positions.row(j), spec)
                           .norm();
      best = std::min(best, d);
    }
  }
  return best;
}

double rdf_mae_integral(std::span<const SimState> window,
                        const SystemSpec& spec, const ObservableSpec& ref) {
  const VecXd mean_rdf = rdf(window, spec, ref);
  const double dr = ref.r_max_hist / ref.bins;
  return (mean_rdf - ref.g_ref).cwiseAbs().sum() * dr;
}

bool check_bond_deviation(const SimState& state, const SystemSpec& spec,
                          double threshold) {
  return !(max_bond_deviation(state, spec) > threshold);
}

bool check_min_intermolecular(const SimState& state, const SystemSpec& spec,
                              double threshold) {
  return !(min_nonbonded_distance(state, spec) < threshold);
}

bool check_rdf_mae(std::span<const SimState> window, const SystemSpec& spec,
                   const std::vector<ObservableSpec>& reference_rdfs,
                   double threshold) {
  if (window.empty()) return true;
  for (const ObservableSpec& ref : reference_rdfs)
    if (rdf_mae_integral(window, spec, ref) > threshold) return false;
  return true;
}

StabilityMonitor::StabilityMonitor(StabilityCriterion criterion,
                                   const SystemSpec& spec)
    : criterion_(std::move(criterion)), spec_(&spec) {
  criterion_.validate();
}

bool StabilityMonitor::check(const SimState& state) const {
  switch (criterion_.kind) {
    case CriterionKind::BondDeviation:
      return check_bond_deviation(state, *spec_, criterion_.threshold);
    case CriterionKind::MinIntermolecularDistance:
      return check_min_intermolecular(state, *spec_, criterion_.threshold);
    case CriterionKind::RdfMae:
      throw ValidationError("RDF criterion needs a frame window; use push()");
  }
  throw ValidationError("unknown criterion kind");
}

bool StabilityMonitor::push(const SimState& state) {
  if (criterion_.kind != CriterionKind::RdfMae) return check(state);
  window_.push_back(state);
  const double span_fs = window_.back().time - window_.front().time;
  const double window_fs = criterion_.window_ps * 1000.0;
  while (window_.size() > 1 &&
         window_.back().time - window_[1].time >= window_fs)
    window_.pop_front();
  if (span_fs < window_fs) return true;  // window not yet filled
  std::vector<SimState> frames(window_.begin(), window_.end());
  return check_rdf_mae(frames, *spec_, criterion_.reference_rdfs,
                       criterion_.threshold);
}

void StabilityMonitor::reset() { window_.clear(); }

}  // namespace stabmd
