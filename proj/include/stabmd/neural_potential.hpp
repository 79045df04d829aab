#pragma once

#include <cstdint>
#include <vector>

#include "stabmd/potential.hpp"

namespace stabmd {

// Architecture of the learnable potential: per-atom radial features
// (species-resolved Gaussian basis with a smooth cosine cutoff) fed to a
// two-hidden-layer tanh MLP producing one atomic energy, summed over atoms.
struct NeuralArch {
  int n_species = 1;
  int n_basis = 32;     // Gaussian centers, uniform on [0, r_max]
  int hidden = 64;      // width of both hidden layers
  double r_max = 5.0;   // A

  int feature_dim() const { return n_species * n_basis; }
  int param_count() const {
    const int f = feature_dim(), h = hidden;
    return h * f + h + h * h + h + h + 1;
  }
  bool operator==(const NeuralArch&) const = default;
};

class NeuralPotential : public PotentialModel {
 public:
  NeuralPotential(NeuralArch arch, std::uint64_t init_seed);
  NeuralPotential(NeuralArch arch, VecXd params);

  const NeuralArch& arch() const { return arch_; }
  int param_count() const override { return arch_.param_count(); }
  const VecXd& params() const { return theta_; }
  void set_params(VecXd theta);

  double energy(const SimState& state, const SystemSpec& spec) const override;
  MatX3 forces(const SimState& state, const SystemSpec& spec) const override;
  VecXd per_atom_energies(const SimState& state,
                          const SystemSpec& spec) const override;
  VecXd param_gradient(const SimState& state,
                       const SystemSpec& spec) const override;
  VecXd force_contraction_gradient(const SimState& state,
                                   const SystemSpec& spec,
                                   const MatX3& weights) const override;

  // Sum of atomic energies over the neighborhood, atoms evaluated in the
  // full environment.
  double local_energy(const SimState& state, const SystemSpec& spec,
                      const LocalNeighborhood& nbhd) const;
  // grad_theta of local_energy.
  VecXd local_param_gradient(const SimState& state, const SystemSpec& spec,
                             const LocalNeighborhood& nbhd) const;

 private:
  struct Workspace;  // cached forward pass, defined in the .cpp

  void forward(const SimState& state, const SystemSpec& spec,
               Workspace& ws) const;
  void compute_input_grads(Workspace& ws) const;
  void backprop_params(const Workspace& ws, const std::vector<int>& atoms,
                       VecXd& grad) const;

  NeuralArch arch_;
  VecXd theta_;

  // Parameter block offsets into theta_.
  int w1_, b1_, w2_, b2_, w3_, b3_;
};

}  // namespace stabmd
