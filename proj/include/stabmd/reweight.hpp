#pragma once

#include "stabmd/system.hpp"

namespace stabmd {

// Boltzmann temperature reweighting of samples drawn at t1 to a target t2.
// Weights w_i ~ exp(-E_i / k_B (1/t2 - 1/t1)), normalized to a simplex.
// By default E_i is the potential energy only; the momentum part of the
// ensemble integrates out analytically for configurational observables.
// Passing full Hamiltonian values instead is equally valid (higher
// variance); the formula is identical either way.
struct ReweightingResult {
  VecXd weights;           // simplex over samples
  double n_eff = 0.0;      // exp(-sum w_i ln w_i)
  VecXd reweighted_value;  // sum_i w_i g_i
};

// energies: per-sample energy (kcal/mol); g_values: per-sample observable
// rows (N x G). Throws DegenerateReweightError when the weights collapse.
ReweightingResult reweight(const VecXd& energies, const MatXd& g_values,
                           double t1, double t2);

}  // namespace stabmd
