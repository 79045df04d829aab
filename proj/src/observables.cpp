#include "stabmd/observables.hpp"

#include <algorithm>
#include <cmath>

#include "stabmd/errors.hpp"
#include "stabmd/units.hpp"

namespace stabmd {

namespace {

// Deposits a unit of mass at distance d, Gaussian-smeared onto the grid and
// renormalized over the grid so the deposited bin integral is exactly
// weight (shape-preserving for in-range distances).
void deposit_normalized(VecXd& hist, double d, double weight, double dr,
                        double sigma) {
  const int bins = static_cast<int>(hist.size());
  const int lo = std::max(0, static_cast<int>((d - 5.0 * sigma) / dr));
  const int hi =
      std::min(bins - 1, static_cast<int>((d + 5.0 * sigma) / dr) + 1);
  if (lo > hi) return;  // distance entirely outside the histogram
  double total = 0.0;
  for (int b = lo; b <= hi; ++b) {
    const double r = (b + 0.5) * dr;
    total += std::exp(-(r - d) * (r - d) / (2.0 * sigma * sigma));
  }
  if (total <= 0.0) return;
  const double scale = weight / (total * dr);
  for (int b = lo; b <= hi; ++b) {
    const double r = (b + 0.5) * dr;
    hist[b] += scale * std::exp(-(r - d) * (r - d) / (2.0 * sigma * sigma));
  }
}

// Analytically normalized Gaussian deposit: mass falling outside the grid is
// lost instead of squeezed into the edge bins. Used for count densities.
void deposit_gaussian(VecXd& hist, double d, double weight, double dr,
                      double sigma) {
  const int bins = static_cast<int>(hist.size());
  const int lo = std::max(0, static_cast<int>((d - 5.0 * sigma) / dr));
  const int hi =
      std::min(bins - 1, static_cast<int>((d + 5.0 * sigma) / dr) + 1);
  const double norm = weight / (sigma * std::sqrt(2.0 * M_PI));
  for (int b = lo; b <= hi; ++b) {
    const double r = (b + 0.5) * dr;
    hist[b] += norm * std::exp(-(r - d) * (r - d) / (2.0 * sigma * sigma));
  }
}

VecXd pair_distance_histogram(const SimState& state, const SystemSpec& spec,
                              const std::vector<int>& atoms,
                              const ObservableSpec& obs) {
  const int n = static_cast<int>(atoms.size());
  if (n < 2)
    throw ValidationError("distance histogram needs at least two atoms");
  const double dr = obs.r_max_hist / obs.bins;
  VecXd hist = VecXd::Zero(obs.bins);
  const double w = 2.0 / (static_cast<double>(n) * (n - 1));
  for (int a = 0; a < n; ++a) {
    for (int b = a + 1; b < n; ++b) {
      const double d = minimum_image_displacement(
                           state.positions.row(atoms[a]),
                           state.positions.row(atoms[b]), spec)
                           .norm();
      deposit_normalized(hist, d, w, dr, obs.smear_sigma);
    }
  }
  return hist;
}

}  // namespace

void ObservableSpec::validate() const {
  if (bins < 2) throw ValidationError("observable needs at least two bins");
  if (!(smear_sigma > 0.0))
    throw ValidationError("smearing width must be positive");
  if (!(r_max_hist > 0.0))
    throw ValidationError("histogram range must be positive");
  if (vacf_lags < 1) throw ValidationError("vacf needs at least one lag");
  if (g_ref.size() != 0 && g_ref.size() != output_length())
    throw ValidationError("reference value length does not match observable");
  if (kind == ObservableKind::MeanBondLength && !pair)
    throw ValidationError("mean bond length needs a species pair");
}

int ObservableSpec::output_length() const {
  switch (kind) {
    case ObservableKind::HOfR:
    case ObservableKind::Rdf:
      return bins;
    case ObservableKind::Vacf:
      return vacf_lags;
    case ObservableKind::Diffusivity:
    case ObservableKind::MeanBondLength:
      return 1;
  }
  return 0;
}

VecXd ObservableSpec::bin_centers() const {
  const double dr = r_max_hist / bins;
  VecXd c(bins);
  for (int b = 0; b < bins; ++b) c[b] = (b + 0.5) * dr;
  return c;
}

bool is_static_observable(ObservableKind kind) {
  return kind == ObservableKind::HOfR || kind == ObservableKind::Rdf ||
         kind == ObservableKind::MeanBondLength;
}

VecXd h_of_r(const SimState& state, const SystemSpec& spec,
             const ObservableSpec& obs) {
  validate_shapes(state, spec);
  std::vector<int> all(spec.n_atoms);
  for (int i = 0; i < spec.n_atoms; ++i) all[i] = i;
  return pair_distance_histogram(state, spec, all, obs);
}

VecXd h_of_r_local(const SimState& state, const SystemSpec& spec,
                   const LocalNeighborhood& nbhd, const ObservableSpec& obs) {
  return pair_distance_histogram(state, spec, nbhd.atom_indices, obs);
}

VecXd rdf(std::span<const SimState> states, const SystemSpec& spec,
          const ObservableSpec& obs) {
  if (states.empty()) throw ValidationError("rdf needs at least one state");
  if (!spec.periodic())
    throw ValidationError("rdf requires a periodic system");
  const double half_box = spec.box->minCoeff() / 2.0;
  if (obs.r_max_hist > half_box + 1e-12)
    throw ValidationError("rdf range exceeds half the box");

  int na = 0, nb = 0;
  if (obs.pair) {
    for (int s : spec.species) {
      if (s == obs.pair->a) ++na;
      if (s == obs.pair->b) ++nb;
    }
    if (na == 0 || nb == 0)
      throw ValidationError("rdf species pair not present in system");
  }
  const double norm =
      obs.pair ? static_cast<double>(na) * nb
               : static_cast<double>(spec.n_atoms) * spec.n_atoms;

  const double dr = obs.r_max_hist / obs.bins;
  VecXd counts = VecXd::Zero(obs.bins);
  for (const SimState& state : states) {
    validate_shapes(state, spec);
    for (int i = 0; i < spec.n_atoms; ++i) {
      for (int j = i + 1; j < spec.n_atoms; ++j) {
        double weight = 2.0;
        if (obs.pair) {
          const int si = spec.species[i], sj = spec.species[j];
          const bool same = obs.pair->a == obs.pair->b;
          if (same) {
            if (si != obs.pair->a || sj != obs.pair->a) continue;
          } else {
            const bool match = (si == obs.pair->a && sj == obs.pair->b) ||
                               (si == obs.pair->b && sj == obs.pair->a);
            if (!match) continue;
            weight = 1.0;
          }
        }
        const double d = minimum_image_displacement(state.positions.row(i),
                                                    state.positions.row(j),
                                                    spec)
                             .norm();
        deposit_gaussian(counts, d, weight, dr, obs.smear_sigma);
      }
    }
  }
  counts /= static_cast<double>(states.size());

  const double volume = spec.volume();
  VecXd out(obs.bins);
  for (int b = 0; b < obs.bins; ++b) {
    const double r = (b + 0.5) * dr;
    out[b] = volume / (norm * 4.0 * M_PI * r * r) * counts[b];
  }
  return out;
}

VecXd vacf(std::span<const SimState> window, const SystemSpec& spec,
           int lags) {
  const int w = static_cast<int>(window.size());
  if (lags < 1) throw ValidationError("vacf needs at least one lag");
  if (w < lags) throw ValidationError("vacf window shorter than lag count");
  const int origins = w - lags + 1;

  VecXd raw = VecXd::Zero(lags);
  for (int t0 = 0; t0 < origins; ++t0) {
    for (int l = 0; l < lags; ++l) {
      const SimState& a = window[t0];
      const SimState& b = window[t0 + l];
      double acc = 0.0;
      for (int i = 0; i < spec.n_atoms; ++i) {
        const double m2 = spec.masses[i] * spec.masses[i];
        acc += a.momenta.row(i).dot(b.momenta.row(i)) / m2;
      }
      raw[l] += acc;
    }
  }
  if (raw[0] == 0.0)
    throw ValidationError("vacf undefined for zero velocities");
  return raw / raw[0];
}

double diffusivity(std::span<const SimState> frames, const SystemSpec& spec,
                   std::pair<double, double> fit_window_fs,
                   std::optional<int> species) {
  if (frames.size() < 2)
    throw ValidationError("diffusivity needs at least two frames");

  std::vector<int> atoms;
  for (int i = 0; i < spec.n_atoms; ++i)
    if (!species || spec.species[i] == *species) atoms.push_back(i);
  if (atoms.empty()) throw ValidationError("no atoms selected");

  const int nf = static_cast<int>(frames.size());
  const double t0 = frames[0].time;

  // Unwrap by integrating minimum-image frame-to-frame displacements.
  MatX3 disp = MatX3::Zero(static_cast<int>(atoms.size()), 3);
  std::vector<double> msd(nf, 0.0), times(nf, 0.0);
  for (int f = 1; f < nf; ++f) {
    for (std::size_t a = 0; a < atoms.size(); ++a) {
      const int i = atoms[a];
      const Vec3 step = minimum_image_displacement(
          frames[f - 1].positions.row(i), frames[f].positions.row(i), spec);
      if (spec.periodic() && step.cwiseAbs().maxCoeff() >=
                                 spec.box->minCoeff() / 2.0 - 1e-12)
        throw ValidationError(
            "per-frame motion too large to unwrap across the box");
      disp.row(a) += step;
    }
    msd[f] = disp.rowwise().squaredNorm().mean();
    times[f] = frames[f].time - t0;
  }

  // Least-squares slope of MSD(t) over the fit window.
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int count = 0;
  for (int f = 0; f < nf; ++f) {
    if (times[f] < fit_window_fs.first || times[f] > fit_window_fs.second)
      continue;
    sx += times[f];
    sy += msd[f];
    sxx += times[f] * times[f];
    sxy += times[f] * msd[f];
    ++count;
  }
  if (count < 2)
    throw ValidationError("fewer than two frames in the diffusivity window");
  const double denom = count * sxx - sx * sx;
  if (denom == 0.0) throw ValidationError("degenerate diffusivity fit");
  const double slope = (count * sxy - sx * sy) / denom;  // A^2/fs
  return slope / 6.0 * units::kA2FsToM2S;
}

double mean_bond_length(const SimState& state, const SystemSpec& spec,
                        const SpeciesPair& pair) {
  validate_shapes(state, spec);
  double sum = 0.0;
  int count = 0;
  for (const Bond& b : spec.bonds) {
    const int si = spec.species[b.i], sj = spec.species[b.j];
    const bool match = (si == pair.a && sj == pair.b) ||
                       (si == pair.b && sj == pair.a);
    if (!match) continue;
    sum += minimum_image_displacement(state.positions.row(b.i),
                                      state.positions.row(b.j), spec)
               .norm();
    ++count;
  }
  if (count == 0)
    throw ValidationError("no bonds match the requested species pair");
  return sum / count;
}

VecXd evaluate_observable(const SimState& state, const SystemSpec& spec,
                          const ObservableSpec& obs) {
  switch (obs.kind) {
    case ObservableKind::HOfR:
      return h_of_r(state, spec, obs);
    case ObservableKind::Rdf: {
      const SimState* p = &state;
      return rdf(std::span<const SimState>(p, 1), spec, obs);
    }
    case ObservableKind::MeanBondLength: {
      VecXd v(1);
      v[0] = mean_bond_length(state, spec, *obs.pair);
      return v;
    }
    case ObservableKind::Vacf:
    case ObservableKind::Diffusivity:
      throw ValidationError(
          "dynamical observables have no per-state value");
  }
  throw ValidationError("unknown observable kind");
}

VecXd evaluate_local_observable(const SimState& state, const SystemSpec& spec,
                                const LocalNeighborhood& nbhd,
                                const ObservableSpec& obs) {
  switch (obs.kind) {
    case ObservableKind::HOfR:
      return h_of_r_local(state, spec, nbhd, obs);
    case ObservableKind::MeanBondLength: {
      double sum = 0.0;
      int count = 0;
      for (const Bond& b : spec.bonds) {
        const bool inside =
            std::find(nbhd.atom_indices.begin(), nbhd.atom_indices.end(),
                      b.i) != nbhd.atom_indices.end() &&
            std::find(nbhd.atom_indices.begin(), nbhd.atom_indices.end(),
                      b.j) != nbhd.atom_indices.end();
        if (!inside) continue;
        const int si = spec.species[b.i], sj = spec.species[b.j];
        const bool match = (si == obs.pair->a && sj == obs.pair->b) ||
                           (si == obs.pair->b && sj == obs.pair->a);
        if (!match) continue;
        sum += minimum_image_displacement(state.positions.row(b.i),
                                          state.positions.row(b.j), spec)
                   .norm();
        ++count;
      }
      if (count == 0)
        throw ValidationError("no matching bonds inside the neighborhood");
      VecXd v(1);
      v[0] = sum / count;
      return v;
    }
    default:
      throw ValidationError(
          "observable kind not supported for local neighborhoods");
  }
}

VecXd reference_observable(std::span<const SimState> states,
                           const SystemSpec& spec, const ObservableSpec& obs) {
  if (states.empty())
    throw ValidationError("reference observable needs a non-empty dataset");
  VecXd mean = VecXd::Zero(obs.output_length());
  for (const SimState& s : states) mean += evaluate_observable(s, spec, obs);
  return mean / static_cast<double>(states.size());
}

std::string to_string(ObservableKind kind) {
  switch (kind) {
    case ObservableKind::HOfR: return "hofr";
    case ObservableKind::Rdf: return "rdf";
    case ObservableKind::Vacf: return "vacf";
    case ObservableKind::Diffusivity: return "diffusivity";
    case ObservableKind::MeanBondLength: return "mean_bond_length";
  }
  return "unknown";
}

ObservableKind observable_kind_from_string(const std::string& name) {
  if (name == "hofr") return ObservableKind::HOfR;
  if (name == "rdf") return ObservableKind::Rdf;
  if (name == "vacf") return ObservableKind::Vacf;
  if (name == "diffusivity") return ObservableKind::Diffusivity;
  if (name == "mean_bond_length") return ObservableKind::MeanBondLength;
  throw ValidationError("unknown observable kind: " + name);
}

}  // namespace stabmd
