#include "stabmd/neighbor_list.hpp"

#include <algorithm>
#include <cmath>

#include "stabmd/errors.hpp"

namespace stabmd {
namespace {

void push_pair(std::vector<AtomPair>& pairs, std::size_t max_pairs, int i,
               int j, const Vec3& dr, double d) {
  if (pairs.size() >= max_pairs)
    throw CapacityError("neighbor list overflow: pair capacity exceeded");
  pairs.push_back(AtomPair{i, j, d, dr});
}

std::vector<AtomPair> brute_force(const MatX3& r, const SystemSpec& spec,
                                  double cutoff, std::size_t max_pairs) {
  std::vector<AtomPair> pairs;
  const int n = spec.n_atoms;
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      Vec3 dr = minimum_image_displacement(r.row(i), r.row(j), spec);
      const double d = dr.norm();
      if (d < cutoff) push_pair(pairs, max_pairs, i, j, dr, d);
    }
  }
  return pairs;
}

std::vector<AtomPair> cell_list(const MatX3& r, const SystemSpec& spec,
                                double cutoff, std::size_t max_pairs) {
  const Vec3 box = *spec.box;
  Eigen::Vector3i ncell;
  for (int k = 0; k < 3; ++k)
    ncell[k] = std::max(1, static_cast<int>(std::floor(box[k] / cutoff)));

  const int n = spec.n_atoms;
  const int total = ncell.prod();
  auto cell_of = [&](const Vec3& p) {
    Eigen::Vector3i c;
    for (int k = 0; k < 3; ++k) {
      double frac = p[k] / box[k];
      frac -= std::floor(frac);  // wrap into [0,1)
      c[k] = std::min(ncell[k] - 1, static_cast<int>(frac * ncell[k]));
    }
    return (c[0] * ncell[1] + c[1]) * ncell[2] + c[2];
  };

  std::vector<std::vector<int>> cells(total);
  for (int i = 0; i < n; ++i) cells[cell_of(r.row(i))].push_back(i);

  std::vector<AtomPair> pairs;
  for (int cx = 0; cx < ncell[0]; ++cx)
    for (int cy = 0; cy < ncell[1]; ++cy)
      for (int cz = 0; cz < ncell[2]; ++cz) {
        const int home = (cx * ncell[1] + cy) * ncell[2] + cz;
        for (int ox = -1; ox <= 1; ++ox)
          for (int oy = -1; oy <= 1; ++oy)
            for (int oz = -1; oz <= 1; ++oz) {
              const int nx = (cx + ox + ncell[0]) % ncell[0];
              const int ny = (cy + oy + ncell[1]) % ncell[1];
              const int nz = (cz + oz + ncell[2]) % ncell[2];
              const int other = (nx * ncell[1] + ny) * ncell[2] + nz;
              if (other < home) continue;
              for (int a : cells[home]) {
                for (int b : cells[other]) {
                  if (other == home && b <= a) continue;
                  const int i = std::min(a, b), j = std::max(a, b);
                  Vec3 dr =
                      minimum_image_displacement(r.row(i), r.row(j), spec);
                  const double d = dr.norm();
                  if (d < cutoff) push_pair(pairs, max_pairs, i, j, dr, d);
                }
              }
            }
      }
  // Canonical order regardless of cell traversal.
  std::sort(pairs.begin(), pairs.end(), [](const AtomPair& a,
                                           const AtomPair& b) {
    return a.i != b.i ? a.i < b.i : a.j < b.j;
  });
  pairs.erase(std::unique(pairs.begin(), pairs.end(),
                          [](const AtomPair& a, const AtomPair& b) {
                            return a.i == b.i && a.j == b.j;
                          }),
              pairs.end());
  return pairs;
}

}  // namespace

std::vector<AtomPair> build_pair_list(const MatX3& positions,
                                      const SystemSpec& spec, double cutoff,
                                      std::size_t max_pairs) {
  if (!(cutoff > 0.0)) throw ValidationError("cutoff must be positive");
  if (spec.periodic()) {
    const Vec3 box = *spec.box;
    bool enough_cells = true;
    for (int k = 0; k < 3; ++k)
      if (std::floor(box[k] / cutoff) < 3) enough_cells = false;
    if (enough_cells) return cell_list(positions, spec, cutoff, max_pairs);
  }
  return brute_force(positions, spec, cutoff, max_pairs);
}

}  // namespace stabmd
