#pragma once

#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "stabmd/state.hpp"
#include "stabmd/system.hpp"

namespace stabmd {

enum class ObservableKind {
  HOfR,            // distribution of all interatomic distances
  Rdf,             // radial distribution function, optionally species-pair
  Vacf,            // velocity autocorrelation (dynamical; evaluation only)
  Diffusivity,     // Einstein-relation diffusivity (dynamical)
  MeanBondLength,  // mean bonded distance for a species pair
};

struct SpeciesPair {
  int a = 0;
  int b = 0;
  bool operator==(const SpeciesPair&) const = default;
};

struct ObservableSpec {
  ObservableKind kind = ObservableKind::HOfR;
  int bins = 500;
  double r_max_hist = 10.0;    // A
  double smear_sigma = 0.05;   // A
  std::optional<SpeciesPair> pair;  // Rdf / MeanBondLength
  int vacf_lags = 100;
  VecXd g_ref;  // reference value; empty until set

  void validate() const;
  // Length of the per-state observable vector.
  int output_length() const;
  VecXd bin_centers() const;
};

// True for observables usable as training targets (per-state, not
// trajectory-dependent).
bool is_static_observable(ObservableKind kind);

// Gaussian-smeared normalized distribution of interatomic distances over all
// ordered pairs; sum(h) * bin_width == 1.
VecXd h_of_r(const SimState& state, const SystemSpec& spec,
             const ObservableSpec& obs);

// Same histogram restricted to a neighborhood's atoms (pairs within it).
VecXd h_of_r_local(const SimState& state, const SystemSpec& spec,
                   const LocalNeighborhood& nbhd, const ObservableSpec& obs);

// Radial distribution function averaged over states. Requires a periodic
// system and r_max_hist <= box/2. With obs.pair set, restricts distances to
// that (unordered) species pair and normalizes by the species counts.
VecXd rdf(std::span<const SimState> states, const SystemSpec& spec,
          const ObservableSpec& obs);

// Normalized velocity autocorrelation over a window of consecutive frames.
// Uses the fixed origin set t0 in [0, W - lags], so every lag averages over
// the same origins; vacf[0] == 1 exactly.
VecXd vacf(std::span<const SimState> window, const SystemSpec& spec,
           int lags);

// Least-squares MSD slope over the fit window divided by 6, in m^2/s.
// Positions are unwrapped internally by integrating minimum-image
// frame-to-frame displacements. Optionally restricted to one species.
double diffusivity(std::span<const SimState> frames, const SystemSpec& spec,
                   std::pair<double, double> fit_window_fs,
                   std::optional<int> species = std::nullopt);

// Arithmetic mean of bonded distances whose endpoint species match the
// unordered pair (minimum-image under PBC).
double mean_bond_length(const SimState& state, const SystemSpec& spec,
                        const SpeciesPair& pair);

// Per-state observable vector for estimator batches (static kinds only).
VecXd evaluate_observable(const SimState& state, const SystemSpec& spec,
                          const ObservableSpec& obs);

// Local version over a neighborhood: HOfR restricted to neighborhood pairs,
// MeanBondLength restricted to bonds inside the neighborhood.
VecXd evaluate_local_observable(const SimState& state, const SystemSpec& spec,
                                const LocalNeighborhood& nbhd,
                                const ObservableSpec& obs);

// Mean of the per-state observable over a dataset of states.
VecXd reference_observable(std::span<const SimState> states,
                           const SystemSpec& spec, const ObservableSpec& obs);

std::string to_string(ObservableKind kind);
ObservableKind observable_kind_from_string(const std::string& name);

}  // namespace stabmd
