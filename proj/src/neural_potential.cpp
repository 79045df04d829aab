#include "stabmd/neural_potential.hpp"

#include <cmath>
#include <numeric>
#include <random>

#include "stabmd/errors.hpp"
#include "stabmd/neighbor_list.hpp"

namespace stabmd {

using Eigen::ArrayXXd;
using Eigen::Map;
using Eigen::MatrixXd;

// Cached forward pass over one state: pair geometry, per-pair basis values,
// per-atom features, and MLP activations. One column per atom.
struct NeuralPotential::Workspace {
  std::vector<AtomPair> pairs;
  MatrixXd rho;     // n_pairs x K, basis value per pair
  MatrixXd drho;    // n_pairs x K, d(basis)/d(distance)
  MatrixXd phi;     // F x n_atoms
  MatrixXd h1, h2;  // H x n_atoms, post-tanh activations
  VecXd atomic;     // n_atoms
  MatrixXd a;       // F x n_atoms, d(atomic energy)/d(features)
};

NeuralPotential::NeuralPotential(NeuralArch arch, std::uint64_t init_seed)
    : arch_(arch), theta_(VecXd::Zero(arch.param_count())) {
  const int f = arch_.feature_dim(), h = arch_.hidden;
  w1_ = 0;
  b1_ = w1_ + h * f;
  w2_ = b1_ + h;
  b2_ = w2_ + h * h;
  w3_ = b2_ + h;
  b3_ = w3_ + h;

  std::mt19937_64 rng(init_seed);
  auto fill = [&](int offset, int count, double bound, double scale) {
    std::uniform_real_distribution<double> dist(-bound, bound);
    for (int i = 0; i < count; ++i) theta_[offset + i] = scale * dist(rng);
  };
  const double bf = 1.0 / std::sqrt(static_cast<double>(f));
  const double bh = 1.0 / std::sqrt(static_cast<double>(h));
  fill(w1_, h * f, bf, 1.0);
  fill(b1_, h, bf, 1.0);
  fill(w2_, h * h, bh, 1.0);
  fill(b2_, h, bh, 1.0);
  // Output layer scaled down so an untrained potential is nearly flat.
  fill(w3_, h, bh, 0.1);
  fill(b3_, 1, bh, 0.1);
}

NeuralPotential::NeuralPotential(NeuralArch arch, VecXd params)
    : NeuralPotential(arch, std::uint64_t{0}) {
  set_params(std::move(params));
}

void NeuralPotential::set_params(VecXd theta) {
  if (theta.size() != arch_.param_count())
    throw ValidationError("parameter vector length does not match architecture");
  theta_ = std::move(theta);
}

void NeuralPotential::forward(const SimState& state, const SystemSpec& spec,
                              Workspace& ws) const {
  validate_shapes(state, spec);
  if (spec.n_species() != arch_.n_species)
    throw ValidationError("system species count does not match architecture");

  const int n = spec.n_atoms;
  const int K = arch_.n_basis;
  const int F = arch_.feature_dim();
  const int H = arch_.hidden;
  const double rmax = arch_.r_max;
  const double width = rmax / K;
  const double inv2w2 = 1.0 / (2.0 * width * width);

  ws.pairs = build_pair_list(state.positions, spec, rmax);
  const int np = static_cast<int>(ws.pairs.size());
  ws.rho.resize(np, K);
  ws.drho.resize(np, K);
  for (int p = 0; p < np; ++p) {
    const double d = ws.pairs[p].dist;
    const double fcut = 0.5 * (std::cos(M_PI * d / rmax) + 1.0);
    const double dfcut = -0.5 * M_PI / rmax * std::sin(M_PI * d / rmax);
    for (int k = 0; k < K; ++k) {
      const double mu = K > 1 ? k * rmax / (K - 1) : 0.0;
      const double g = std::exp(-(d - mu) * (d - mu) * inv2w2);
      ws.rho(p, k) = g * fcut;
      ws.drho(p, k) = g * (dfcut - 2.0 * (d - mu) * inv2w2 * fcut);
    }
  }

  ws.phi.setZero(F, n);
  for (int p = 0; p < np; ++p) {
    const AtomPair& pr = ws.pairs[p];
    const int si = spec.species[pr.i], sj = spec.species[pr.j];
    ws.phi.block(sj * K, pr.i, K, 1) += ws.rho.row(p).transpose();
    ws.phi.block(si * K, pr.j, K, 1) += ws.rho.row(p).transpose();
  }

  const Map<const MatrixXd> W1(theta_.data() + w1_, H, F);
  const Map<const VecXd> B1(theta_.data() + b1_, H);
  const Map<const MatrixXd> W2(theta_.data() + w2_, H, H);
  const Map<const VecXd> B2(theta_.data() + b2_, H);
  const Map<const VecXd> W3(theta_.data() + w3_, H);
  const double B3 = theta_[b3_];

  ws.h1 = ((W1 * ws.phi).colwise() + B1).array().tanh().matrix();
  ws.h2 = ((W2 * ws.h1).colwise() + B2).array().tanh().matrix();
  ws.atomic = ((W3.transpose() * ws.h2).transpose().array() + B3).matrix();
}

void NeuralPotential::compute_input_grads(Workspace& ws) const {
  const int F = arch_.feature_dim(), H = arch_.hidden;
  const Map<const MatrixXd> W1(theta_.data() + w1_, H, F);
  const Map<const MatrixXd> W2(theta_.data() + w2_, H, H);
  const Map<const VecXd> W3(theta_.data() + w3_, H);

  const ArrayXXd s2 = 1.0 - ws.h2.array().square();
  const MatrixXd d2 = (s2.colwise() * W3.array()).matrix();
  const ArrayXXd s1 = 1.0 - ws.h1.array().square();
  const MatrixXd d1 = (s1 * (W2.transpose() * d2).array()).matrix();
  ws.a = W1.transpose() * d1;
}

double NeuralPotential::energy(const SimState& state,
                               const SystemSpec& spec) const {
  Workspace ws;
  forward(state, spec, ws);
  // Sequential sum in atom order, so a whole-system neighborhood reproduces
  // the global energy bit-exactly.
  double e = 0.0;
  for (int i = 0; i < ws.atomic.size(); ++i) e += ws.atomic[i];
  return e;
}

VecXd NeuralPotential::per_atom_energies(const SimState& state,
                                         const SystemSpec& spec) const {
  Workspace ws;
  forward(state, spec, ws);
  return ws.atomic;
}

double NeuralPotential::local_energy(const SimState& state,
                                     const SystemSpec& spec,
                                     const LocalNeighborhood& nbhd) const {
  return stabmd::local_energy(*this, state, spec, nbhd);
}

MatX3 NeuralPotential::forces(const SimState& state,
                              const SystemSpec& spec) const {
  Workspace ws;
  forward(state, spec, ws);
  compute_input_grads(ws);

  const int K = arch_.n_basis;
  MatX3 f = MatX3::Zero(spec.n_atoms, 3);
  for (std::size_t p = 0; p < ws.pairs.size(); ++p) {
    const AtomPair& pr = ws.pairs[p];
    const int si = spec.species[pr.i], sj = spec.species[pr.j];
    double dUdd = 0.0;
    for (int k = 0; k < K; ++k)
      dUdd += (ws.a(sj * K + k, pr.i) + ws.a(si * K + k, pr.j)) * ws.drho(p, k);
    const Vec3 u = pr.dr / pr.dist;
    f.row(pr.i) += dUdd * u;
    f.row(pr.j) -= dUdd * u;
  }
  return f;
}

void NeuralPotential::backprop_params(const Workspace& ws,
                                      const std::vector<int>& atoms,
                                      VecXd& grad) const {
  const int F = arch_.feature_dim(), H = arch_.hidden;
  const Map<const MatrixXd> W2(theta_.data() + w2_, H, H);
  const Map<const VecXd> W3(theta_.data() + w3_, H);

  Map<MatrixXd> gW1(grad.data() + w1_, H, F);
  Map<VecXd> gB1(grad.data() + b1_, H);
  Map<MatrixXd> gW2(grad.data() + w2_, H, H);
  Map<VecXd> gB2(grad.data() + b2_, H);
  Map<VecXd> gW3(grad.data() + w3_, H);

  for (int i : atoms) {
    const VecXd h1 = ws.h1.col(i);
    const VecXd h2 = ws.h2.col(i);
    const VecXd phi = ws.phi.col(i);
    gW3 += h2;
    grad[b3_] += 1.0;
    const VecXd d2 =
        ((1.0 - h2.array().square()) * W3.array()).matrix();
    gW2 += d2 * h1.transpose();
    gB2 += d2;
    const VecXd d1 =
        ((1.0 - h1.array().square()) * (W2.transpose() * d2).array()).matrix();
    gW1 += d1 * phi.transpose();
    gB1 += d1;
  }
}

VecXd NeuralPotential::param_gradient(const SimState& state,
                                      const SystemSpec& spec) const {
  Workspace ws;
  forward(state, spec, ws);
  VecXd grad = VecXd::Zero(param_count());
  std::vector<int> all(spec.n_atoms);
  std::iota(all.begin(), all.end(), 0);
  backprop_params(ws, all, grad);
  return grad;
}

VecXd NeuralPotential::local_param_gradient(const SimState& state,
                                            const SystemSpec& spec,
                                            const LocalNeighborhood& nbhd) const {
  if (nbhd.atom_indices.empty())
    throw ValidationError("empty local neighborhood");
  for (int i : nbhd.atom_indices)
    if (i < 0 || i >= spec.n_atoms)
      throw ValidationError("neighborhood index out of range");
  Workspace ws;
  forward(state, spec, ws);
  VecXd grad = VecXd::Zero(param_count());
  backprop_params(ws, nbhd.atom_indices, grad);
  return grad;
}

VecXd NeuralPotential::force_contraction_gradient(const SimState& state,
                                                  const SystemSpec& spec,
                                                  const MatX3& weights) const {
  if (weights.rows() != spec.n_atoms)
    throw ValidationError("weight matrix shape does not match atom count");

  Workspace ws;
  forward(state, spec, ws);

  const int F = arch_.feature_dim(), H = arch_.hidden, K = arch_.n_basis;
  const int n = spec.n_atoms;

  // u_i = d(features_i)/d(positions) contracted with the weight field.
  MatrixXd u = MatrixXd::Zero(F, n);
  for (std::size_t p = 0; p < ws.pairs.size(); ++p) {
    const AtomPair& pr = ws.pairs[p];
    const int si = spec.species[pr.i], sj = spec.species[pr.j];
    const Vec3 uh = pr.dr / pr.dist;
    const double proj =
        uh.dot(Vec3(weights.row(pr.j)) - Vec3(weights.row(pr.i)));
    u.block(sj * K, pr.i, K, 1) += (ws.drho.row(p) * proj).transpose();
    u.block(si * K, pr.j, K, 1) += (ws.drho.row(p) * proj).transpose();
  }

  const Map<const MatrixXd> W1(theta_.data() + w1_, H, F);
  const Map<const MatrixXd> W2(theta_.data() + w2_, H, H);
  const Map<const VecXd> W3(theta_.data() + w3_, H);

  VecXd grad = VecXd::Zero(param_count());
  Map<MatrixXd> gW1(grad.data() + w1_, H, F);
  Map<VecXd> gB1(grad.data() + b1_, H);
  Map<MatrixXd> gW2(grad.data() + w2_, H, H);
  Map<VecXd> gB2(grad.data() + b2_, H);
  Map<VecXd> gW3(grad.data() + w3_, H);

  // Directional-derivative graph per atom: v1 = W1 u, t1 = s1 .* v1,
  // v2 = W2 t1, t2 = s2 .* v2, ydot = W3 . t2, with s = 1 - h^2.
  // Reverse pass of ydot w.r.t. parameters, accumulated over atoms.
  for (int i = 0; i < n; ++i) {
    const VecXd h1 = ws.h1.col(i);
    const VecXd h2 = ws.h2.col(i);
    const VecXd phi = ws.phi.col(i);
    const VecXd ui = u.col(i);
    const VecXd s1 = (1.0 - h1.array().square()).matrix();
    const VecXd s2 = (1.0 - h2.array().square()).matrix();

    const VecXd v1 = W1 * ui;
    const VecXd t1 = s1.cwiseProduct(v1);
    const VecXd v2 = W2 * t1;
    const VecXd t2 = s2.cwiseProduct(v2);

    gW3 += t2;
    const VecXd dt2 = W3;
    const VecXd dv2 = s2.cwiseProduct(dt2);
    const VecXd dh2 =
        (-2.0 * h2.array() * v2.array() * dt2.array()).matrix();
    gW2 += dv2 * t1.transpose();
    const VecXd dt1 = W2.transpose() * dv2;
    const VecXd dz2 = s2.cwiseProduct(dh2);
    gW2 += dz2 * h1.transpose();
    gB2 += dz2;
    VecXd dh1 = W2.transpose() * dz2;
    const VecXd dv1 = s1.cwiseProduct(dt1);
    dh1 += (-2.0 * h1.array() * v1.array() * dt1.array()).matrix();
    gW1 += dv1 * ui.transpose();
    const VecXd dz1 = s1.cwiseProduct(dh1);
    gW1 += dz1 * phi.transpose();
    gB1 += dz1;
  }

  // Forces are minus the position gradient of the energy.
  return -grad;
}

}  // namespace stabmd
