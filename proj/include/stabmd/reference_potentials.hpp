#pragma once

#include "stabmd/potential.hpp"

namespace stabmd {

// Per-atom isotropic springs pinned to fixed centers: U = 1/2 k |r - r0|^2.
class HarmonicOscillatorND : public PotentialModel {
 public:
  HarmonicOscillatorND(double k, MatX3 centers)
      : k_(k), centers_(std::move(centers)) {}

  double energy(const SimState& state, const SystemSpec& spec) const override;
  MatX3 forces(const SimState& state, const SystemSpec& spec) const override;
  VecXd per_atom_energies(const SimState& state,
                          const SystemSpec& spec) const override;

  double spring_constant() const { return k_; }
  const MatX3& centers() const { return centers_; }

 private:
  double k_;       // kcal/(mol*A^2)
  MatX3 centers_;  // A
};

// Quartic double well on one interatomic distance: U(d) = a (d^2 - d0^2)^2.
class DoubleWellDimer : public PotentialModel {
 public:
  DoubleWellDimer(double a, double d0) : a_(a), d0_(d0) {}

  double energy(const SimState& state, const SystemSpec& spec) const override;
  MatX3 forces(const SimState& state, const SystemSpec& spec) const override;
  VecXd per_atom_energies(const SimState& state,
                          const SystemSpec& spec) const override;

  double stiffness() const { return a_; }
  double well_distance() const { return d0_; }

 private:
  double a_;   // kcal/(mol*A^4)
  double d0_;  // A
};

// Pairwise 12-6 Lennard-Jones, energy-shifted to zero at the cutoff.
// Forces are truncated at the cutoff (no force shift).
class LennardJonesCluster : public PotentialModel {
 public:
  LennardJonesCluster(double epsilon, double sigma, double cutoff);

  double energy(const SimState& state, const SystemSpec& spec) const override;
  MatX3 forces(const SimState& state, const SystemSpec& spec) const override;
  VecXd per_atom_energies(const SimState& state,
                          const SystemSpec& spec) const override;

  double epsilon() const { return eps_; }
  double sigma() const { return sigma_; }
  double cutoff() const { return cutoff_; }

 private:
  double pair_energy(double d) const;

  double eps_;
  double sigma_;
  double cutoff_;
  double shift_;  // unshifted LJ energy at the cutoff
};

// Flexible three-site water stand-in: harmonic O-H bonds, harmonic H-O-H
// angle, and Lennard-Jones between oxygens. Periodic or free boundary.
// Topology comes from the SystemSpec bonds; each molecule is O followed by
// its two hydrogens.
class ToyWater : public PotentialModel {
 public:
  struct Params {
    double bond_k = 450.0;        // kcal/(mol*A^2)
    double bond_length = 1.0;     // A
    double angle_k = 55.0;        // kcal/(mol*rad^2)
    double angle_deg = 104.52;
    double lj_epsilon = 0.1554;   // kcal/mol, O-O
    double lj_sigma = 3.165;      // A
    double lj_cutoff = 7.0;       // A
  };

  explicit ToyWater(Params p) : p_(p) {}

  double energy(const SimState& state, const SystemSpec& spec) const override;
  MatX3 forces(const SimState& state, const SystemSpec& spec) const override;
  VecXd per_atom_energies(const SimState& state,
                          const SystemSpec& spec) const override;

  const Params& params() const { return p_; }

 private:
  // Shared accumulation: bond/angle/LJ terms with optional force output.
  double accumulate(const SimState& state, const SystemSpec& spec,
                    VecXd* per_atom, MatX3* forces) const;

  Params p_;
};

}  // namespace stabmd
