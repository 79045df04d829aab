#include "stabmd/systems.hpp"

#include <cmath>
#include <random>

#include "stabmd/errors.hpp"

namespace stabmd {

BuiltSystem build_harmonic(int n_atoms, double k, double mass) {
  BuiltSystem sys;
  sys.spec.n_atoms = n_atoms;
  sys.spec.species.assign(n_atoms, 0);
  sys.spec.species_symbols = {"X"};
  sys.spec.masses = VecXd::Constant(n_atoms, mass);
  MatX3 centers = MatX3::Zero(n_atoms, 3);
  for (int i = 0; i < n_atoms; ++i) centers(i, 0) = 10.0 * i;  // far apart
  sys.reference = std::make_shared<HarmonicOscillatorND>(k, centers);
  sys.initial_positions = centers;
  sys.spec.validate();
  return sys;
}

BuiltSystem build_double_well_dimer(double a, double d0, double mass) {
  BuiltSystem sys;
  sys.spec.n_atoms = 2;
  sys.spec.species = {0, 0};
  sys.spec.species_symbols = {"C"};
  sys.spec.masses = VecXd::Constant(2, mass);
  sys.spec.bonds = {Bond{0, 1, d0}};
  sys.reference = std::make_shared<DoubleWellDimer>(a, d0);
  sys.initial_positions = MatX3::Zero(2, 3);
  sys.initial_positions(1, 0) = d0;
  sys.spec.validate();
  return sys;
}

BuiltSystem build_lj_cluster(int n_atoms, double epsilon, double sigma,
                             double cutoff, int relax_steps) {
  if (n_atoms < 2) throw ValidationError("cluster needs at least two atoms");
  BuiltSystem sys;
  sys.spec.n_atoms = n_atoms;
  sys.spec.species.assign(n_atoms, 0);
  sys.spec.species_symbols = {"Ar"};
  sys.spec.masses = VecXd::Constant(n_atoms, 39.948);
  auto lj = std::make_shared<LennardJonesCluster>(epsilon, sigma, cutoff);
  sys.reference = lj;

  // Icosahedral shell(s) around a central atom, scaled to the pair minimum.
  const double rmin = sigma * std::pow(2.0, 1.0 / 6.0);
  const double phi = (1.0 + std::sqrt(5.0)) / 2.0;
  const double vr = std::sqrt(1.0 + phi * phi);
  MatX3 pos(n_atoms, 3);
  pos.row(0).setZero();
  const double base[12][3] = {
      {0, 1, phi},  {0, -1, phi},  {0, 1, -phi},  {0, -1, -phi},
      {1, phi, 0},  {-1, phi, 0},  {1, -phi, 0},  {-1, -phi, 0},
      {phi, 0, 1},  {-phi, 0, 1},  {phi, 0, -1},  {-phi, 0, -1}};
  std::mt19937_64 rng(12345);
  std::uniform_real_distribution<double> jitter(-0.05, 0.05);
  for (int i = 1; i < n_atoms; ++i) {
    const int shell = (i - 1) / 12 + 1;
    const double* v = base[(i - 1) % 12];
    for (int kk = 0; kk < 3; ++kk)
      pos(i, kk) = shell * rmin * v[kk] / vr + jitter(rng);
  }

  // Fixed-step gradient descent to a bound configuration.
  SimState s{pos, MatX3::Zero(n_atoms, 3), 0.0};
  const double step = 0.002 / std::max(epsilon, 1e-6);
  for (int it = 0; it < relax_steps; ++it) {
    MatX3 f = lj->forces(s, sys.spec);
    const double fmax = f.rowwise().norm().maxCoeff();
    const double scale = fmax > 1.0 ? 1.0 / fmax : 1.0;
    s.positions += step * scale * f;
  }
  sys.initial_positions = s.positions;
  sys.spec.validate();
  return sys;
}

BuiltSystem build_toy_water(int n_molecules, double box_length,
                            ToyWater::Params params) {
  if (n_molecules < 1) throw ValidationError("need at least one molecule");
  BuiltSystem sys;
  const int n = 3 * n_molecules;
  sys.spec.n_atoms = n;
  sys.spec.species_symbols = {"O", "H"};
  sys.spec.species.resize(n);
  sys.spec.masses.resize(n);
  sys.spec.box = Vec3::Constant(box_length);

  const double theta = params.angle_deg * M_PI / 180.0;
  const double b = params.bond_length;
  MatX3 pos(n, 3);
  const int grid = static_cast<int>(std::ceil(std::cbrt(n_molecules)));
  const double cell = box_length / grid;
  std::mt19937_64 rng(777);
  std::uniform_real_distribution<double> angle(0.0, 2.0 * M_PI);

  for (int m = 0; m < n_molecules; ++m) {
    const int o = 3 * m, h1 = 3 * m + 1, h2 = 3 * m + 2;
    sys.spec.species[o] = 0;
    sys.spec.species[h1] = sys.spec.species[h2] = 1;
    sys.spec.masses[o] = 15.999;
    sys.spec.masses[h1] = sys.spec.masses[h2] = 1.008;
    sys.spec.bonds.push_back(Bond{o, h1, b});
    sys.spec.bonds.push_back(Bond{o, h2, b});

    const Vec3 center((m % grid + 0.5) * cell,
                      ((m / grid) % grid + 0.5) * cell,
                      (m / (grid * grid) + 0.5) * cell);
    // Random orientation from two Euler angles.
    const double az = angle(rng), el = angle(rng);
    const Vec3 e1(std::cos(az) * std::cos(el), std::sin(az) * std::cos(el),
                  std::sin(el));
    Vec3 ref = std::abs(e1.z()) < 0.9 ? Vec3(0, 0, 1) : Vec3(1, 0, 0);
    const Vec3 e2 = e1.cross(ref).normalized();
    pos.row(o) = center;
    pos.row(h1) =
        center + b * (std::cos(theta / 2) * e1 + std::sin(theta / 2) * e2);
    pos.row(h2) =
        center + b * (std::cos(theta / 2) * e1 - std::sin(theta / 2) * e2);
  }
  sys.initial_positions = pos;
  sys.reference = std::make_shared<ToyWater>(params);
  sys.spec.validate();
  return sys;
}

}  // namespace stabmd
