#include "stabmd/estimator.hpp"

#include <algorithm>
#include <numeric>
#include <random>

#include "stabmd/errors.hpp"
#include "stabmd/units.hpp"

namespace stabmd {

namespace {

std::vector<int> minibatch_order(int n, int b, std::uint64_t seed) {
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  if (b < n) {
    std::mt19937_64 rng(seed);
    std::shuffle(order.begin(), order.end(), rng);
  }
  return order;
}

int checked_batch_size(const EstimatorBatch& batch, int b) {
  const int n = batch.n_samples();
  if (b < 2) throw ValidationError("estimator minibatch must hold >= 2 samples");
  if (n % b != 0)
    throw ValidationError("minibatch size must divide the sample count");
  return n / b;
}

}  // namespace

void EstimatorBatch::validate() const {
  if (!param_grads) throw ValidationError("estimator batch has no gradients");
  if (g_values.rows() != param_grads->rows())
    throw ValidationError("estimator batch row counts differ");
  if (n_samples() < 2)
    throw ValidationError("estimator needs at least two samples");
  if (!(temperature > 0.0))
    throw ValidationError("estimator temperature must be positive");
}

MatXd covariance_unbiased(const MatXd& x, const MatXd& y) {
  const int n = static_cast<int>(x.rows());
  if (y.rows() != n) throw ValidationError("covariance row counts differ");
  if (n < 2) throw ValidationError("covariance needs at least two samples");
  const VecXd sx = x.colwise().sum().transpose();
  const VecXd sy = y.colwise().sum().transpose();
  return (x.transpose() * y) / (n - 1.0) -
         sx * sy.transpose() / (static_cast<double>(n) * (n - 1.0));
}

JacobianEstimate boltzmann_jacobian(const EstimatorBatch& batch) {
  batch.validate();
  const int n = batch.n_samples();
  const double kt = units::kBoltzmann * batch.temperature;
  const MatXd& g = batch.g_values;
  const MatXd& du = *batch.param_grads;
  const VecXd gbar = g.colwise().mean().transpose();
  const VecXd ubar = du.colwise().mean().transpose();
  const MatXd cross = (g.transpose() * du) / static_cast<double>(n);
  JacobianEstimate est;
  est.n_samples = n;
  est.jacobian =
      n / (kt * (n - 1.0)) * (gbar * ubar.transpose() - cross);
  return est;
}

JacobianEstimate minibatched_jacobian(const EstimatorBatch& batch, int b,
                                      std::uint64_t seed) {
  batch.validate();
  const int n = batch.n_samples();
  if (b == n) return boltzmann_jacobian(batch);
  const int chunks = checked_batch_size(batch, b);
  const std::vector<int> order = minibatch_order(n, b, seed);

  JacobianEstimate est;
  est.n_samples = n;
  est.jacobian = MatXd::Zero(batch.g_values.cols(), batch.param_grads->cols());
  EstimatorBatch sub;
  sub.temperature = batch.temperature;
  for (int c = 0; c < chunks; ++c) {
    MatXd g(b, batch.g_values.cols());
    auto du = std::make_shared<MatXd>(b, batch.param_grads->cols());
    for (int i = 0; i < b; ++i) {
      const int src = order[c * b + i];
      g.row(i) = batch.g_values.row(src);
      du->row(i) = batch.param_grads->row(src);
    }
    sub.g_values = std::move(g);
    sub.param_grads = std::move(du);
    est.jacobian += boltzmann_jacobian(sub).jacobian;
  }
  est.jacobian /= static_cast<double>(chunks);
  return est;
}

LossAndGradient observable_loss_and_gradient(
    const std::vector<EstimatorBatch>& batches,
    const std::vector<VecXd>& g_refs, std::uint64_t seed) {
  if (batches.empty()) throw ValidationError("no estimator batches");
  if (batches.size() != g_refs.size())
    throw ValidationError("batch/reference count mismatch");

  LossAndGradient out;
  out.gradient = VecXd::Zero(batches.front().param_grads->cols());

  for (std::size_t o = 0; o < batches.size(); ++o) {
    const EstimatorBatch& batch = batches[o];
    batch.validate();
    const int n = batch.n_samples();
    const int b = batch.batch_size > 0 ? batch.batch_size : n;
    const int chunks = b == n ? 1 : checked_batch_size(batch, b);
    if (g_refs[o].size() != batch.g_values.cols())
      throw ValidationError("reference length does not match observable");

    const double kt = units::kBoltzmann * batch.temperature;
    const VecXd residual =
        batch.g_values.colwise().mean().transpose() - g_refs[o];
    out.loss += residual.squaredNorm();
    out.residuals.push_back(residual);
    const VecXd e = 2.0 * residual;

    // Contract e against each minibatch covariance on the fly: a per-sample
    // scalar s_i = e . g_i replaces the full G x P Jacobian.
    const VecXd s = batch.g_values * e;
    const std::vector<int> order = minibatch_order(n, b, seed);
    VecXd acc = VecXd::Zero(out.gradient.size());
    for (int c = 0; c < chunks; ++c) {
      double sbar = 0.0;
      VecXd ubar = VecXd::Zero(out.gradient.size());
      VecXd su = VecXd::Zero(out.gradient.size());
      for (int i = 0; i < b; ++i) {
        const int src = order[c * b + i];
        sbar += s[src];
        ubar += batch.param_grads->row(src).transpose();
        su += s[src] * batch.param_grads->row(src).transpose();
      }
      sbar /= b;
      ubar /= b;
      su /= b;
      acc += b / (kt * (b - 1.0)) * (sbar * ubar - su);
    }
    out.gradient += acc / static_cast<double>(chunks);
  }
  return out;
}

}  // namespace stabmd
