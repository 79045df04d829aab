#include "stabmd/system.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "stabmd/errors.hpp"

namespace stabmd {

void SystemSpec::validate() const {
  if (n_atoms < 1) throw ValidationError("system must have at least one atom");
  if (static_cast<int>(species.size()) != n_atoms)
    throw ValidationError("species length does not match atom count");
  if (masses.size() != n_atoms)
    throw ValidationError("masses length does not match atom count");
  for (int s : species)
    if (s < 0 || s >= n_species())
      throw ValidationError("species code out of range of the symbol table");
  for (int i = 0; i < n_atoms; ++i)
    if (!(masses[i] > 0.0)) throw ValidationError("non-positive atomic mass");
  for (const Bond& b : bonds) {
    if (b.i < 0 || b.i >= n_atoms || b.j < 0 || b.j >= n_atoms)
      throw ValidationError("bond index out of range");
    if (b.i == b.j) throw ValidationError("self-bond");
    if (!(b.length > 0.0)) throw ValidationError("non-positive bond length");
  }
  if (periodic()) {
    if (!(box->minCoeff() > 0.0))
      throw ValidationError("periodic box edges must be positive");
  }
}

std::vector<std::vector<int>> SystemSpec::molecules() const {
  std::vector<int> parent(n_atoms);
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](int x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  for (const Bond& b : bonds) {
    int a = find(b.i), c = find(b.j);
    if (a != c) parent[std::max(a, c)] = std::min(a, c);
  }
  std::vector<std::vector<int>> groups(n_atoms);
  for (int i = 0; i < n_atoms; ++i) groups[find(i)].push_back(i);
  std::vector<std::vector<int>> out;
  for (auto& g : groups)
    if (!g.empty()) out.push_back(std::move(g));
  return out;
}

bool SystemSpec::bonded(int i, int j) const {
  for (const Bond& b : bonds)
    if ((b.i == i && b.j == j) || (b.i == j && b.j == i)) return true;
  return false;
}

Vec3 minimum_image_displacement(const Vec3& a, const Vec3& b,
                                const SystemSpec& spec) {
  Vec3 d = b - a;
  if (spec.periodic()) {
    for (int k = 0; k < 3; ++k) {
      const double L = (*spec.box)[k];
      d[k] -= L * std::round(d[k] / L);
    }
  }
  return d;
}

}  // namespace stabmd
