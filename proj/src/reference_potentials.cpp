#include "stabmd/reference_potentials.hpp"

#include <algorithm>
#include <cmath>

#include "stabmd/errors.hpp"
#include "stabmd/neighbor_list.hpp"

namespace stabmd {

// ---------------------------------------------------------------- harmonic

double HarmonicOscillatorND::energy(const SimState& state,
                                    const SystemSpec& spec) const {
  return per_atom_energies(state, spec).sum();
}

VecXd HarmonicOscillatorND::per_atom_energies(const SimState& state,
                                              const SystemSpec& spec) const {
  validate_shapes(state, spec);
  VecXd e(spec.n_atoms);
  for (int i = 0; i < spec.n_atoms; ++i)
    e[i] = 0.5 * k_ * (state.positions.row(i) - centers_.row(i)).squaredNorm();
  return e;
}

MatX3 HarmonicOscillatorND::forces(const SimState& state,
                                   const SystemSpec& spec) const {
  validate_shapes(state, spec);
  return -k_ * (state.positions - centers_);
}

// ------------------------------------------------------------- double well

namespace {
double dimer_distance(const SimState& state, const SystemSpec& spec,
                      Vec3* unit) {
  if (spec.n_atoms != 2) throw ValidationError("dimer potential needs 2 atoms");
  Vec3 dr = minimum_image_displacement(state.positions.row(0),
                                       state.positions.row(1), spec);
  const double d = dr.norm();
  if (unit) *unit = d > 0 ? Vec3(dr / d) : Vec3(0, 0, 0);
  return d;
}
}  // namespace

double DoubleWellDimer::energy(const SimState& state,
                               const SystemSpec& spec) const {
  const double d = dimer_distance(state, spec, nullptr);
  const double q = d * d - d0_ * d0_;
  return a_ * q * q;
}

VecXd DoubleWellDimer::per_atom_energies(const SimState& state,
                                         const SystemSpec& spec) const {
  const double half = 0.5 * energy(state, spec);
  VecXd e(2);
  e << half, half;
  return e;
}

MatX3 DoubleWellDimer::forces(const SimState& state,
                              const SystemSpec& spec) const {
  Vec3 u;
  const double d = dimer_distance(state, spec, &u);
  const double dUdd = 4.0 * a_ * d * (d * d - d0_ * d0_);
  MatX3 f(2, 3);
  f.row(0) = dUdd * u;   // -dU/dr0 with dd/dr0 = -u
  f.row(1) = -dUdd * u;
  return f;
}

// ---------------------------------------------------------- Lennard-Jones

LennardJonesCluster::LennardJonesCluster(double epsilon, double sigma,
                                         double cutoff)
    : eps_(epsilon), sigma_(sigma), cutoff_(cutoff) {
  const double s6 = std::pow(sigma_ / cutoff_, 6);
  shift_ = 4.0 * eps_ * (s6 * s6 - s6);
}

double LennardJonesCluster::pair_energy(double d) const {
  const double s6 = std::pow(sigma_ / d, 6);
  return 4.0 * eps_ * (s6 * s6 - s6) - shift_;
}

double LennardJonesCluster::energy(const SimState& state,
                                   const SystemSpec& spec) const {
  validate_shapes(state, spec);
  double u = 0.0;
  for (const AtomPair& p : build_pair_list(state.positions, spec, cutoff_))
    u += pair_energy(p.dist);
  return u;
}

VecXd LennardJonesCluster::per_atom_energies(const SimState& state,
                                             const SystemSpec& spec) const {
  validate_shapes(state, spec);
  VecXd e = VecXd::Zero(spec.n_atoms);
  for (const AtomPair& p : build_pair_list(state.positions, spec, cutoff_)) {
    const double half = 0.5 * pair_energy(p.dist);
    e[p.i] += half;
    e[p.j] += half;
  }
  return e;
}

MatX3 LennardJonesCluster::forces(const SimState& state,
                                  const SystemSpec& spec) const {
  validate_shapes(state, spec);
  MatX3 f = MatX3::Zero(spec.n_atoms, 3);
  for (const AtomPair& p : build_pair_list(state.positions, spec, cutoff_)) {
    const double s6 = std::pow(sigma_ / p.dist, 6);
    const double dUdd = 4.0 * eps_ * (-12.0 * s6 * s6 + 6.0 * s6) / p.dist;
    const Vec3 u = p.dr / p.dist;
    f.row(p.i) += dUdd * u;
    f.row(p.j) -= dUdd * u;
  }
  return f;
}

// --------------------------------------------------------------- toy water

double ToyWater::accumulate(const SimState& state, const SystemSpec& spec,
                            VecXd* per_atom, MatX3* forces) const {
  validate_shapes(state, spec);
  const MatX3& r = state.positions;
  double total = 0.0;
  if (per_atom) per_atom->setZero(spec.n_atoms);
  if (forces) forces->setZero(spec.n_atoms, 3);

  auto add = [&](int atom, double e) {
    total += e;
    if (per_atom) (*per_atom)[atom] += e;
  };

  for (const Bond& b : spec.bonds) {
    Vec3 dr = minimum_image_displacement(r.row(b.i), r.row(b.j), spec);
    const double d = dr.norm();
    const double e = 0.5 * p_.bond_k * (d - b.length) * (d - b.length);
    add(b.i, 0.5 * e);
    add(b.j, 0.5 * e);
    if (forces) {
      const Vec3 u = dr / d;
      const double dUdd = p_.bond_k * (d - b.length);
      forces->row(b.i) += dUdd * u;
      forces->row(b.j) -= dUdd * u;
    }
  }

  const double theta0 = p_.angle_deg * M_PI / 180.0;
  std::vector<int> oxygens;
  for (const auto& mol : spec.molecules()) {
    if (mol.size() != 3) continue;
    // Central atom is the one carrying two bonds within the molecule.
    int center = -1;
    for (int a : mol) {
      int deg = 0;
      for (const Bond& b : spec.bonds)
        if (b.i == a || b.j == a) ++deg;
      if (deg == 2) center = a;
    }
    if (center < 0) throw ValidationError("water molecule without a center");
    std::vector<int> hyd;
    for (int a : mol)
      if (a != center) hyd.push_back(a);

    const Vec3 u = minimum_image_displacement(r.row(center), r.row(hyd[0]), spec);
    const Vec3 v = minimum_image_displacement(r.row(center), r.row(hyd[1]), spec);
    const double lu = u.norm(), lv = v.norm();
    const Vec3 uh = u / lu, vh = v / lv;
    const double c = std::clamp(uh.dot(vh), -1.0, 1.0);
    const double theta = std::acos(c);
    add(center, 0.5 * p_.angle_k * (theta - theta0) * (theta - theta0));
    if (forces) {
      const double s = std::sqrt(std::max(1.0 - c * c, 1e-12));
      const double dUdth = p_.angle_k * (theta - theta0);
      const Vec3 f1 = dUdth * (vh - c * uh) / (lu * s);
      const Vec3 f2 = dUdth * (uh - c * vh) / (lv * s);
      forces->row(hyd[0]) += f1;
      forces->row(hyd[1]) += f2;
      forces->row(center) -= f1 + f2;
    }
    oxygens.push_back(center);
  }

  const double s6c = std::pow(p_.lj_sigma / p_.lj_cutoff, 6);
  const double shift = 4.0 * p_.lj_epsilon * (s6c * s6c - s6c);
  for (std::size_t a = 0; a < oxygens.size(); ++a) {
    for (std::size_t b = a + 1; b < oxygens.size(); ++b) {
      const int i = oxygens[a], j = oxygens[b];
      Vec3 dr = minimum_image_displacement(r.row(i), r.row(j), spec);
      const double d = dr.norm();
      if (d >= p_.lj_cutoff) continue;
      const double s6 = std::pow(p_.lj_sigma / d, 6);
      const double e = 4.0 * p_.lj_epsilon * (s6 * s6 - s6) - shift;
      add(i, 0.5 * e);
      add(j, 0.5 * e);
      if (forces) {
        const double dUdd =
            4.0 * p_.lj_epsilon * (-12.0 * s6 * s6 + 6.0 * s6) / d;
        const Vec3 uh = dr / d;
        forces->row(i) += dUdd * uh;
        forces->row(j) -= dUdd * uh;
      }
    }
  }
  return total;
}

double ToyWater::energy(const SimState& state, const SystemSpec& spec) const {
  return accumulate(state, spec, nullptr, nullptr);
}

VecXd ToyWater::per_atom_energies(const SimState& state,
                                  const SystemSpec& spec) const {
  VecXd e;
  accumulate(state, spec, &e, nullptr);
  return e;
}

MatX3 ToyWater::forces(const SimState& state, const SystemSpec& spec) const {
  MatX3 f;
  accumulate(state, spec, nullptr, &f);
  return f;
}

}  // namespace stabmd
