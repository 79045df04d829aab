#include "stabmd/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

#include "stabmd/errors.hpp"
#include "stabmd/parallel.hpp"

namespace stabmd {

namespace {
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
}

// ------------------------------------------------------- energy/forces loss

QmLossResult qm_loss(const PotentialModel& model,
                     std::span<const Dataset::Frame> frames,
                     const SystemSpec& spec, double lambda_u, double lambda_f,
                     bool want_gradient) {
  if (frames.empty()) throw ValidationError("QM loss needs at least one frame");
  const bool learnable = model.param_count() > 0 && want_gradient;

  QmLossResult out;
  if (learnable) out.gradient = VecXd::Zero(model.param_count());
  for (const Dataset::Frame& frame : frames) {
    const double u = model.energy(frame.state, spec);
    const double du = u - frame.energy;
    out.loss += lambda_u * du * du;
    if (lambda_f != 0.0 || learnable) {
      const MatX3 f = model.forces(frame.state, spec);
      const MatX3 residual = f - frame.forces;
      out.loss += lambda_f * residual.squaredNorm();
      if (learnable) {
        out.gradient +=
            lambda_u * 2.0 * du * model.param_gradient(frame.state, spec);
        if (lambda_f != 0.0)
          out.gradient += lambda_f * model.force_contraction_gradient(
                                         frame.state, spec, 2.0 * residual);
      }
    }
  }
  const double n = static_cast<double>(frames.size());
  out.loss /= n;
  if (learnable) out.gradient /= n;
  return out;
}

// ----------------------------------------------------------------- pretrain

namespace {

class SgdStepper {
 public:
  SgdStepper(Optimizer opt, double momentum, int dim)
      : opt_(opt), momentum_(momentum) {
    if (opt_ == Optimizer::SgdMomentum) velocity_ = VecXd::Zero(dim);
  }

  void apply(NeuralPotential& model, const VecXd& gradient, double lr) {
    VecXd theta = model.params();
    if (opt_ == Optimizer::SgdMomentum) {
      velocity_ = momentum_ * velocity_ - lr * gradient;
      theta += velocity_;
    } else {
      theta -= lr * gradient;
    }
    model.set_params(std::move(theta));
  }

 private:
  Optimizer opt_;
  double momentum_;
  VecXd velocity_;
};

}  // namespace

PretrainResult pretrain(NeuralPotential& model, const Dataset& dataset,
                        const PretrainConfig& cfg) {
  if (dataset.frames.empty()) throw ValidationError("empty training dataset");
  if (cfg.batch_size < 1) throw ValidationError("batch size must be positive");

  std::mt19937_64 rng(cfg.seed);
  std::vector<int> order(dataset.frames.size());
  std::iota(order.begin(), order.end(), 0);

  SgdStepper stepper(cfg.optimizer, cfg.momentum, model.param_count());
  PretrainResult result;
  std::vector<Dataset::Frame> batch;

  for (int epoch = 0; epoch < cfg.max_epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t start = 0; start < order.size();
         start += cfg.batch_size) {
      batch.clear();
      for (std::size_t i = start;
           i < std::min(order.size(), start + cfg.batch_size); ++i)
        batch.push_back(dataset.frames[order[i]]);
      const QmLossResult step =
          qm_loss(model, batch, dataset.spec, cfg.lambda_u, cfg.lambda_f);
      stepper.apply(model, step.gradient, cfg.learning_rate);
    }

    const QmLossResult full = qm_loss(model, dataset.frames, dataset.spec,
                                      cfg.lambda_u, cfg.lambda_f, false);
    if (!std::isfinite(full.loss) || full.loss > cfg.divergence_loss)
      throw NumericalError("pretraining diverged (loss " +
                           std::to_string(full.loss) + ")");
    result.loss_curve.emplace_back(cfg.start_epoch + epoch, full.loss);
    result.epochs_run = epoch + 1;
    result.final_loss = full.loss;

    if (epoch >= cfg.plateau_window) {
      const double before =
          result.loss_curve[epoch - cfg.plateau_window].second;
      const double rel =
          (before - full.loss) / std::max(std::abs(before), 1e-300);
      if (rel < cfg.plateau_rel) break;
    }
  }
  return result;
}

// --------------------------------------------- local neighborhood sampling

std::vector<LocalNeighborhood> sample_local_neighborhoods(
    std::span<const SimState> states, const SystemSpec& spec, int bins,
    int per_bin, std::uint64_t seed) {
  if (bins < 1 || per_bin < 1)
    throw ValidationError("bins and per-bin count must be positive");
  const auto molecules = spec.molecules();
  if (spec.bonds.empty())
    throw ValidationError("local sampling needs a bonded topology");

  struct Candidate {
    int state = 0;
    int molecule = 0;
    double deviation = 0.0;
  };
  std::vector<Candidate> pool;
  for (std::size_t s = 0; s < states.size(); ++s) {
    for (std::size_t m = 0; m < molecules.size(); ++m) {
      double dev = 0.0;
      bool has_bond = false;
      for (const Bond& b : spec.bonds) {
        const bool inside =
            std::find(molecules[m].begin(), molecules[m].end(), b.i) !=
            molecules[m].end();
        if (!inside) continue;
        has_bond = true;
        const double d =
            minimum_image_displacement(states[s].positions.row(b.i),
                                       states[s].positions.row(b.j), spec)
                .norm();
        dev = std::max(dev, std::abs(d - b.length));
      }
      if (has_bond)
        pool.push_back({static_cast<int>(s), static_cast<int>(m), dev});
    }
  }
  if (pool.empty()) return {};

  double max_dev = 0.0;
  for (const Candidate& c : pool) max_dev = std::max(max_dev, c.deviation);

  std::vector<std::vector<int>> by_bin(bins);
  for (std::size_t i = 0; i < pool.size(); ++i) {
    // A spread below fp noise means every molecule sits at equilibrium.
    int b = max_dev > 1e-12
                ? std::min(bins - 1, static_cast<int>(pool[i].deviation /
                                                      max_dev * bins))
                : 0;
    by_bin[b].push_back(static_cast<int>(i));
  }

  std::mt19937_64 rng(seed);
  std::vector<LocalNeighborhood> out;
  for (auto& members : by_bin) {
    if (members.empty()) continue;
    std::shuffle(members.begin(), members.end(), rng);
    const int take = std::min<int>(per_bin, static_cast<int>(members.size()));
    for (int i = 0; i < take; ++i) {
      const Candidate& c = pool[members[i]];
      LocalNeighborhood nbhd;
      nbhd.atom_indices = molecules[c.molecule];
      nbhd.state_index = c.state;
      out.push_back(std::move(nbhd));
    }
  }
  return out;
}

VecXd local_reference_observable(std::span<const SimState> states,
                                 const SystemSpec& spec,
                                 const ObservableSpec& obs) {
  if (states.empty()) throw ValidationError("empty dataset");
  const auto molecules = spec.molecules();
  VecXd mean = VecXd::Zero(obs.output_length());
  int count = 0;
  for (const SimState& s : states) {
    for (const auto& mol : molecules) {
      LocalNeighborhood nbhd;
      nbhd.atom_indices = mol;
      mean += evaluate_local_observable(s, spec, nbhd, obs);
      ++count;
    }
  }
  if (count == 0) throw ValidationError("no molecules found");
  return mean / static_cast<double>(count);
}

// ------------------------------------------------------------- StABlE loop

void TrainConfig::validate() const {
  if (!(alpha > 0.0)) throw ValidationError("learning rate must be positive");
  if (!(lr_decay > 0.0 && lr_decay <= 1.0))
    throw ValidationError("lr decay must lie in (0, 1]");
  if (!(f_min >= 0.0 && f_min < f_max && f_max <= 1.0))
    throw ValidationError("need 0 <= f_min < f_max <= 1");
  if (t_steps < 1 || sample_stride < 1 || t_steps % sample_stride != 0)
    throw ValidationError("sampling stride must divide the segment length");
  if (replicas < 1) throw ValidationError("need at least one replica");
  if (minibatch < 2) throw ValidationError("estimator minibatch must be >= 2");
  if (max_cycles < 1) throw ValidationError("need at least one cycle");
}

namespace {

// Stability verdict for one replica's freshly simulated segment.
bool segment_stable(const std::vector<SimState>& samples,
                    const SystemSpec& spec,
                    const StabilityCriterion& criterion) {
  if (samples.empty()) return true;
  if (criterion.kind == CriterionKind::RdfMae) {
    StabilityMonitor monitor(criterion, spec);
    bool ok = true;
    for (const SimState& s : samples) ok = monitor.push(s) && ok;
    return ok;
  }
  StabilityMonitor monitor(criterion, spec);
  return monitor.check(samples.back());
}

struct LearnBatches {
  std::vector<EstimatorBatch> batches;
  std::vector<VecXd> g_refs;
};

LearnBatches assemble_batches(const NeuralPotential& model,
                              const SystemSpec& spec,
                              const std::vector<SimState>& pooled,
                              const std::vector<ObservableSpec>& observables,
                              const TrainConfig& cfg, double temperature,
                              std::uint64_t seed) {
  LearnBatches out;
  const int p = model.param_count();

  if (cfg.estimator == EstimatorType::Global) {
    const int n = static_cast<int>(pooled.size());
    auto grads = std::make_shared<MatXd>(n, p);
    parallel_for(n, cfg.workers, [&](int i) {
      grads->row(i) = model.param_gradient(pooled[i], spec).transpose();
    });
    for (const ObservableSpec& obs : observables) {
      EstimatorBatch batch;
      batch.param_grads = grads;
      batch.temperature = temperature;
      batch.batch_size = cfg.minibatch;
      batch.g_values.resize(n, obs.output_length());
      parallel_for(n, cfg.workers, [&](int i) {
        batch.g_values.row(i) =
            evaluate_observable(pooled[i], spec, obs).transpose();
      });
      out.batches.push_back(std::move(batch));
      out.g_refs.push_back(obs.g_ref);
    }
    return out;
  }

  const std::vector<LocalNeighborhood> nbhds = sample_local_neighborhoods(
      pooled, spec, cfg.local_bins, cfg.local_per_bin, seed);
  const int n = static_cast<int>(nbhds.size());
  if (n < 2)
    throw ValidationError("too few local neighborhoods for the estimator");
  auto grads = std::make_shared<MatXd>(n, p);
  parallel_for(n, cfg.workers, [&](int i) {
    grads->row(i) = model
                        .local_param_gradient(pooled[nbhds[i].state_index],
                                              spec, nbhds[i])
                        .transpose();
  });
  for (const ObservableSpec& obs : observables) {
    EstimatorBatch batch;
    batch.param_grads = grads;
    batch.temperature = temperature;
    batch.batch_size = cfg.minibatch;
    batch.g_values.resize(n, obs.output_length());
    parallel_for(n, cfg.workers, [&](int i) {
      batch.g_values.row(i) =
          evaluate_local_observable(pooled[nbhds[i].state_index], spec,
                                    nbhds[i], obs)
              .transpose();
    });
    out.batches.push_back(std::move(batch));
    out.g_refs.push_back(obs.g_ref);
  }
  return out;
}

}  // namespace

StableTrainResult stable_train(NeuralPotential& model, const Dataset& dataset,
                               std::vector<ObservableSpec> observables,
                               const StabilityCriterion& criterion,
                               const IntegratorConfig& integrator,
                               const TrainConfig& cfg,
                               const CheckpointSink& sink) {
  cfg.validate();
  criterion.validate();
  integrator.validate();
  if (observables.empty())
    throw ValidationError("training needs at least one observable");
  for (const ObservableSpec& obs : observables) {
    obs.validate();
    if (!is_static_observable(obs.kind))
      throw ValidationError("dynamical observables cannot be trained on");
    if (obs.g_ref.size() == 0)
      throw ValidationError("training observable has no reference value");
  }
  if (dataset.size() < cfg.replicas)
    throw ValidationError("dataset smaller than the replica count");

  const SystemSpec& spec = dataset.spec;

  // Initial replica states: dataset frames without replacement.
  std::mt19937_64 rng(cfg.seed);
  std::vector<int> frame_order(dataset.size());
  std::iota(frame_order.begin(), frame_order.end(), 0);
  std::shuffle(frame_order.begin(), frame_order.end(), rng);

  ReplicaSet rs;
  rs.spec = std::make_shared<SystemSpec>(spec);
  for (int i = 0; i < cfg.replicas; ++i) {
    SimState s = dataset.frames[frame_order[i]].state;
    s.time = 0.0;
    rs.replicas.push_back(std::move(s));
    rs.thermostats.push_back({});
    rs.active.push_back(true);
    rs.total_time_fs.push_back(0.0);
  }

  std::vector<SimState> rewind_states = rs.replicas;
  std::vector<ThermostatState> rewind_th = rs.thermostats;

  StableTrainResult result;
  SgdStepper stepper(cfg.optimizer, cfg.momentum, model.param_count());
  double f_unst = unstable_fraction(rs);

  for (int cycle = 1; cycle <= cfg.max_cycles; ++cycle) {
    // ---- Simulation phase: seek out instabilities.
    int segments = 0;
    while (f_unst < cfg.f_max && segments < cfg.max_segments_per_phase) {
      for (int i = 0; i < rs.size(); ++i) {
        if (!rs.active[i]) continue;
        rewind_states[i] = rs.replicas[i];
        rewind_th[i] = rs.thermostats[i];
      }
      const auto samples = simulate_replicas(model, rs, integrator,
                                             cfg.t_steps, cfg.sample_stride,
                                             cfg.workers);
      for (int i = 0; i < rs.size(); ++i) {
        if (!rs.active[i]) continue;
        if (!segment_stable(samples[i], spec, criterion))
          rs.active[i] = false;
      }
      f_unst = unstable_fraction(rs);
      ++segments;
      result.metrics.push_back(
          {cycle, "sim", segments, f_unst, kNaN, kNaN, 0.0});
    }
    result.phases.push_back({cycle, "sim", segments, f_unst});
    if (sink) sink("cycle" + std::to_string(cycle) + "_sim", model);

    // ---- Learning phase: correct them from the rewound states.
    int epochs = 0;
    if (f_unst >= cfg.f_max) {
      double alpha = cfg.alpha;
      std::vector<bool> last_verdict(rs.size(), true);
      while (f_unst > cfg.f_min && epochs < cfg.max_learning_epochs) {
        for (int i = 0; i < rs.size(); ++i) {
          rs.replicas[i] = rewind_states[i];
          rs.thermostats[i] = rewind_th[i];
          rs.active[i] = true;
        }
        const auto samples = simulate_replicas(model, rs, integrator,
                                               cfg.t_steps, cfg.sample_stride,
                                               cfg.workers);
        int unstable = 0;
        std::vector<SimState> pooled;
        for (int i = 0; i < rs.size(); ++i) {
          last_verdict[i] = segment_stable(samples[i], spec, criterion);
          if (!last_verdict[i]) ++unstable;
          pooled.insert(pooled.end(), samples[i].begin(), samples[i].end());
        }
        f_unst = static_cast<double>(unstable) / rs.size();

        const std::uint64_t epoch_seed =
            derive_seed(cfg.seed, 1000000u * cycle + epochs);
        LearnBatches lb =
            assemble_batches(model, spec, pooled, observables, cfg,
                             integrator.temperature, epoch_seed);
        const LossAndGradient obs_part =
            observable_loss_and_gradient(lb.batches, lb.g_refs, epoch_seed);
        const QmLossResult qm_part =
            cfg.lambda_qm != 0.0
                ? qm_loss(model, dataset.frames, spec, cfg.lambda_u,
                          cfg.lambda_f)
                : QmLossResult{0.0, VecXd::Zero(model.param_count())};

        VecXd gradient = obs_part.gradient;
        if (cfg.lambda_qm != 0.0)
          gradient += cfg.lambda_qm * qm_part.gradient;
        if (!gradient.allFinite())
          throw NumericalError("non-finite training gradient");
        stepper.apply(model, gradient, alpha);

        ++epochs;
        result.metrics.push_back({cycle, "learn", epochs, f_unst,
                                  obs_part.loss, qm_part.loss, alpha});
        alpha *= cfg.lr_decay;
      }
      for (int i = 0; i < rs.size(); ++i) rs.active[i] = last_verdict[i];
      result.phases.push_back({cycle, "learn", epochs, f_unst});
      if (sink) sink("cycle" + std::to_string(cycle) + "_learn", model);
    }
    result.cycles_run = cycle;
  }
  return result;
}

// ----------------------------------------------------------------- evaluate

double median_value(std::vector<double> values) {
  if (values.empty()) throw ValidationError("median of an empty list");
  std::sort(values.begin(), values.end());
  return values[(values.size() - 1) / 2];
}

EvalResult evaluate(const PotentialModel& model, const SystemSpec& spec,
                    const StabilityCriterion& criterion,
                    const IntegratorConfig& integrator, const EvalConfig& cfg,
                    std::span<const SimState> initial_states) {
  criterion.validate();
  integrator.validate();
  if (cfg.n_replicas < 1) throw ValidationError("need at least one replica");
  if (static_cast<int>(initial_states.size()) < cfg.n_replicas)
    throw ValidationError("not enough held-out initial states");
  if (cfg.check_every_steps < 1)
    throw ValidationError("check interval must be positive");

  const double max_time_fs = cfg.max_time_ps * 1000.0;
  const int total_checks = std::max(
      1, static_cast<int>(max_time_fs / (integrator.dt * cfg.check_every_steps)));

  EvalResult result;
  result.stable_time_ps.assign(cfg.n_replicas, cfg.max_time_ps);
  std::vector<std::vector<SimState>> frames(cfg.n_replicas);

  parallel_for(cfg.n_replicas, cfg.workers, [&](int i) {
    SimState init = initial_states[i];
    init.time = 0.0;
    Simulation sim(model, spec, integrator, init);
    StabilityMonitor monitor(criterion, spec);
    frames[i].push_back(sim.state());
    for (int c = 0; c < total_checks; ++c) {
      sim.run(cfg.check_every_steps);
      const SimState& s = sim.state();
      if (!monitor.push(s)) {
        result.stable_time_ps[i] = s.time / 1000.0;
        return;
      }
      frames[i].push_back(s);
    }
  });

  // Unstable-fraction step curve over time.
  std::vector<double> trips;
  for (int i = 0; i < cfg.n_replicas; ++i)
    if (result.stable_time_ps[i] < cfg.max_time_ps)
      trips.push_back(result.stable_time_ps[i]);
  std::sort(trips.begin(), trips.end());
  result.fraction_curve.emplace_back(0.0, 0.0);
  for (std::size_t k = 0; k < trips.size(); ++k)
    result.fraction_curve.emplace_back(
        trips[k], static_cast<double>(k + 1) / cfg.n_replicas);
  result.fraction_curve.emplace_back(
      cfg.max_time_ps, static_cast<double>(trips.size()) / cfg.n_replicas);

  // Median replica (lower median) supplies the reported observables.
  std::vector<int> idx(cfg.n_replicas);
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(), [&](int a, int b) {
    return result.stable_time_ps[a] != result.stable_time_ps[b]
               ? result.stable_time_ps[a] < result.stable_time_ps[b]
               : a < b;
  });
  result.median_replica = idx[(cfg.n_replicas - 1) / 2];
  result.median_stable_time_ps = result.stable_time_ps[result.median_replica];
  result.median_frames = std::move(frames[result.median_replica]);
  return result;
}

}  // namespace stabmd
