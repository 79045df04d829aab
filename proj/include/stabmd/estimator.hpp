#pragma once

#include <cstdint>
#include <memory>
#include <vector>

#include "stabmd/system.hpp"

namespace stabmd {

// Samples feeding one Jacobian estimate: per-sample observable values and
// per-sample parameter gradients of the potential energy. The gradient
// matrix is shared between the batches of different observables.
struct EstimatorBatch {
  MatXd g_values;                            // N x G
  std::shared_ptr<const MatXd> param_grads;  // N x P
  double temperature = 300.0;                // K
  int batch_size = 0;                        // minibatch size B; 0 = all

  int n_samples() const { return static_cast<int>(g_values.rows()); }
  void validate() const;
};

struct JacobianEstimate {
  MatXd jacobian;  // G x P
  int n_samples = 0;
};

// Unbiased covariance estimate:
// (1/(N-1)) sum_i X_i Y_i^T - (1/(N(N-1))) (sum_i X_i)(sum_j Y_j)^T.
MatXd covariance_unbiased(const MatXd& x, const MatXd& y);

// Jacobian of the ensemble-averaged observable w.r.t. the potential
// parameters: (N / (k_B T (N-1))) [E^[g] E^[dU]^T - E^[g dU^T]].
JacobianEstimate boltzmann_jacobian(const EstimatorBatch& batch);

// Mean of N/B independent B-sample estimates over a seeded permutation of
// the samples. B == N reproduces boltzmann_jacobian bit-exactly.
JacobianEstimate minibatched_jacobian(const EstimatorBatch& batch, int b,
                                      std::uint64_t seed = 0);

struct LossAndGradient {
  double loss = 0.0;
  VecXd gradient;           // length P
  std::vector<VecXd> residuals;  // per observable, E^[g] - g_ref
};

// Observable loss sum_o ||E^[g_o] - g_ref_o||^2 and its parameter gradient
// 2 (E^[g_o] - g_ref_o)^T J_o summed over observables. The Jacobians are
// never materialized; the residual is contracted against the covariance
// terms minibatch by minibatch.
LossAndGradient observable_loss_and_gradient(
    const std::vector<EstimatorBatch>& batches,
    const std::vector<VecXd>& g_refs, std::uint64_t seed = 0);

}  // namespace stabmd
