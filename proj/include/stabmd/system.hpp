#pragma once

#include <Eigen/Dense>
#include <optional>
#include <string>
#include <vector>

namespace stabmd {

using Vec3 = Eigen::Vector3d;
using MatX3 = Eigen::Matrix<double, Eigen::Dynamic, 3, Eigen::RowMajor>;
using VecXd = Eigen::VectorXd;
using MatXd = Eigen::MatrixXd;

struct Bond {
  int i = 0;
  int j = 0;
  double length = 0.0;  // equilibrium length, A
};

// Static description of the simulated system. Immutable after construction.
struct SystemSpec {
  int n_atoms = 0;
  std::vector<int> species;                  // per-atom element code
  std::vector<std::string> species_symbols;  // code -> symbol
  VecXd masses;                              // amu
  std::vector<Bond> bonds;
  std::optional<Vec3> box;  // edge lengths, A; present iff periodic

  bool periodic() const { return box.has_value(); }

  double volume() const {
    return periodic() ? box->x() * box->y() * box->z() : 0.0;
  }

  int n_species() const { return static_cast<int>(species_symbols.size()); }

  // Throws ValidationError on inconsistent shapes, bad bonds, or a
  // non-positive box.
  void validate() const;

  // Connected components of the bond graph, each sorted ascending;
  // components ordered by smallest member. Unbonded atoms form singletons.
  std::vector<std::vector<int>> molecules() const;

  bool bonded(int i, int j) const;
};

// Shortest displacement b - a under minimum-image convention when the spec
// is periodic; plain difference otherwise.
Vec3 minimum_image_displacement(const Vec3& a, const Vec3& b,
                                const SystemSpec& spec);

}  // namespace stabmd
