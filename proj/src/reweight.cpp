#include "stabmd/reweight.hpp"

#include <cmath>

#include "stabmd/errors.hpp"
#include "stabmd/units.hpp"

namespace stabmd {

ReweightingResult reweight(const VecXd& energies, const MatXd& g_values,
                           double t1, double t2) {
  const int n = static_cast<int>(energies.size());
  if (n < 1) throw ValidationError("reweighting needs at least one sample");
  if (g_values.rows() != n)
    throw ValidationError("observable rows do not match energy count");
  if (!(t1 > 0.0) || !(t2 > 0.0))
    throw ValidationError("temperatures must be positive");
  if (!energies.allFinite())
    throw DegenerateReweightError("non-finite energies in reweighting");

  const double beta_diff = (1.0 / t2 - 1.0 / t1) / units::kBoltzmann;
  VecXd log_w = -beta_diff * energies;
  const double shift = log_w.maxCoeff();
  VecXd w = (log_w.array() - shift).exp().matrix();
  const double total = w.sum();
  if (!(total > 0.0) || !std::isfinite(total))
    throw DegenerateReweightError("reweighting weights underflowed to zero");
  w /= total;

  double entropy = 0.0;
  for (int i = 0; i < n; ++i)
    if (w[i] > 0.0) entropy -= w[i] * std::log(w[i]);

  ReweightingResult out;
  out.weights = w;
  out.n_eff = std::exp(entropy);
  out.reweighted_value = g_values.transpose() * w;
  return out;
}

}  // namespace stabmd
