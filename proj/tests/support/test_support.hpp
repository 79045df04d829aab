#pragma once

// Shared fixtures and independent oracles for the test suites. Everything
// here stays independent of the library's gradient/estimator code paths so
// it can serve as a cross-check.

#include <cmath>
#include <random>

#include "stabmd/neural_potential.hpp"
#include "stabmd/potential.hpp"
#include "stabmd/systems.hpp"
#include "stabmd/units.hpp"

namespace stabmd::testing {

// ----------------------------------------------------------- test models

// Flat potential; isolates integrator kinematics.
class ZeroPotential : public PotentialModel {
 public:
  double energy(const SimState&, const SystemSpec&) const override {
    return 0.0;
  }
  MatX3 forces(const SimState& s, const SystemSpec&) const override {
    return MatX3::Zero(s.positions.rows(), 3);
  }
  VecXd per_atom_energies(const SimState& s, const SystemSpec&) const override {
    return VecXd::Zero(s.positions.rows());
  }
};

// One learnable parameter: U(x) = 1/2 theta x^2 over atom 0's x coordinate.
// Exact Boltzmann samples are Gaussian, and the Jacobian of E[x^2] w.r.t.
// theta is -kT/theta^2 analytically.
class ParamHarmonic1D : public PotentialModel {
 public:
  explicit ParamHarmonic1D(double theta) : theta_(theta) {}

  double theta() const { return theta_; }
  void set_theta(double t) { theta_ = t; }

  double energy(const SimState& s, const SystemSpec&) const override {
    const double x = s.positions(0, 0);
    return 0.5 * theta_ * x * x;
  }
  MatX3 forces(const SimState& s, const SystemSpec&) const override {
    MatX3 f = MatX3::Zero(s.positions.rows(), 3);
    f(0, 0) = -theta_ * s.positions(0, 0);
    return f;
  }
  VecXd per_atom_energies(const SimState& s,
                          const SystemSpec& spec) const override {
    VecXd e = VecXd::Zero(s.positions.rows());
    e[0] = energy(s, spec);
    return e;
  }
  int param_count() const override { return 1; }
  VecXd param_gradient(const SimState& s, const SystemSpec&) const override {
    VecXd g(1);
    const double x = s.positions(0, 0);
    g[0] = 0.5 * x * x;
    return g;
  }
  VecXd force_contraction_gradient(const SimState& s, const SystemSpec&,
                                   const MatX3& w) const override {
    VecXd g(1);
    g[0] = -s.positions(0, 0) * w(0, 0);
    return g;
  }

 private:
  double theta_;
};

// Multiplies a base model's forces; deliberately inconsistent with the
// energy, for breaking simulations on purpose.
class BrokenForces : public PotentialModel {
 public:
  BrokenForces(const PotentialModel& base, double factor)
      : base_(&base), factor_(factor) {}
  double energy(const SimState& s, const SystemSpec& spec) const override {
    return base_->energy(s, spec);
  }
  MatX3 forces(const SimState& s, const SystemSpec& spec) const override {
    return factor_ * base_->forces(s, spec);
  }
  VecXd per_atom_energies(const SimState& s,
                          const SystemSpec& spec) const override {
    return base_->per_atom_energies(s, spec);
  }

 private:
  const PotentialModel* base_;
  double factor_;
};

// -------------------------------------------------- finite-difference oracles

// Central finite difference of the energy w.r.t. positions; the force
// oracle is its negation.
inline MatX3 fd_forces(const PotentialModel& model, const SimState& state,
                       const SystemSpec& spec, double h = 1e-4) {
  MatX3 f(spec.n_atoms, 3);
  SimState probe = state;
  for (int i = 0; i < spec.n_atoms; ++i) {
    for (int k = 0; k < 3; ++k) {
      probe.positions(i, k) = state.positions(i, k) + h;
      const double up = model.energy(probe, spec);
      probe.positions(i, k) = state.positions(i, k) - h;
      const double um = model.energy(probe, spec);
      probe.positions(i, k) = state.positions(i, k);
      f(i, k) = -(up - um) / (2.0 * h);
    }
  }
  return f;
}

// Central finite difference of the energy w.r.t. one parameter.
inline double fd_param_gradient(NeuralPotential& model, const SimState& state,
                                const SystemSpec& spec, int index,
                                double h = 1e-5) {
  VecXd theta = model.params();
  const double orig = theta[index];
  theta[index] = orig + h;
  model.set_params(theta);
  const double up = model.energy(state, spec);
  theta[index] = orig - h;
  model.set_params(theta);
  const double um = model.energy(state, spec);
  theta[index] = orig;
  model.set_params(theta);
  return (up - um) / (2.0 * h);
}

// ------------------------------------------------------------ random helpers

inline Eigen::Matrix3d random_rotation(std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::Vector4d q;
  for (int i = 0; i < 4; ++i) q[i] = normal(rng);
  q.normalize();
  const double w = q[0], x = q[1], y = q[2], z = q[3];
  Eigen::Matrix3d r;
  r << 1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y),
      2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x),
      2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y);
  return r;
}

inline MatX3 jittered(const MatX3& base, double scale, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, scale);
  MatX3 out = base;
  for (int i = 0; i < out.rows(); ++i)
    for (int k = 0; k < 3; ++k) out(i, k) += normal(rng);
  return out;
}

// Exact Boltzmann samples of the 1D harmonic system at a given kT: x is
// Gaussian with variance kT / theta.
inline double sample_harmonic_x(double kt, double theta,
                                std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, std::sqrt(kt / theta));
  return normal(rng);
}

// Temperature whose k_B T product equals the requested energy scale.
inline double temperature_for_kt(double kt) {
  return kt / units::kBoltzmann;
}

}  // namespace stabmd::testing
