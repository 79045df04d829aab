#pragma once

#include <functional>
#include <string>

#include "stabmd/dataset.hpp"
#include "stabmd/estimator.hpp"
#include "stabmd/neural_potential.hpp"
#include "stabmd/observables.hpp"
#include "stabmd/replica.hpp"
#include "stabmd/stability.hpp"

namespace stabmd {

// ------------------------------------------------------- energy/forces loss

struct QmLossResult {
  double loss = 0.0;
  VecXd gradient;  // empty when not requested or not learnable
};

// Mean over frames of lambda_u (U_ref - U_theta)^2 + lambda_f ||F_ref -
// F_theta||^2, with the parameter gradient including the second-order path
// through the predicted forces.
QmLossResult qm_loss(const PotentialModel& model,
                     std::span<const Dataset::Frame> frames,
                     const SystemSpec& spec, double lambda_u, double lambda_f,
                     bool want_gradient = true);

// ----------------------------------------------------------------- pretrain

enum class Optimizer { Sgd, SgdMomentum };

struct PretrainConfig {
  double lambda_u = 1.0;
  double lambda_f = 100.0;
  double learning_rate = 1e-4;
  int batch_size = 16;
  int max_epochs = 500;
  int start_epoch = 0;  // resume offset; loss curve continues from here
  double plateau_rel = 1e-4;
  int plateau_window = 10;
  double divergence_loss = 1e6;
  Optimizer optimizer = Optimizer::Sgd;
  double momentum = 0.9;
  std::uint64_t seed = 0;
};

struct PretrainResult {
  std::vector<std::pair<int, double>> loss_curve;  // (epoch, dataset loss)
  int epochs_run = 0;
  double final_loss = 0.0;
};

PretrainResult pretrain(NeuralPotential& model, const Dataset& dataset,
                        const PretrainConfig& cfg);

// ------------------------------------------------------------- StABlE loop

enum class EstimatorType { Global, Local };

struct TrainConfig {
  double lambda_u = 1.0;    // energy weight inside the QM loss
  double lambda_f = 100.0;  // force weight inside the QM loss
  double lambda_qm = 10.0;  // QM regularizer weight in the combined loss
  double alpha = 0.001;     // learning rate, reset at each learning phase
  double lr_decay = 0.95;   // per learning epoch
  int t_steps = 2000;       // simulation segment length
  int sample_stride = 20;   // S; t_steps must be divisible by it
  int replicas = 32;
  int minibatch = 40;       // estimator minibatch B
  double f_min = 0.2;
  double f_max = 0.6;
  int max_cycles = 4;
  int max_segments_per_phase = 100;
  int max_learning_epochs = 200;
  Optimizer optimizer = Optimizer::Sgd;
  double momentum = 0.9;
  EstimatorType estimator = EstimatorType::Global;
  int local_bins = 100;
  int local_per_bin = 5;
  int workers = 1;
  std::uint64_t seed = 0;

  void validate() const;
};

struct MetricsRow {
  int cycle = 0;
  std::string phase;  // "sim" or "learn"
  int epoch = 0;      // segment index within a sim phase / epoch within learn
  double f_unst = 0.0;
  double loss_obs = 0.0;  // NaN for sim rows
  double loss_qm = 0.0;   // NaN for sim rows
  double alpha = 0.0;
};

struct PhaseBoundary {
  int cycle = 0;
  std::string phase;
  int epochs = 0;
  double f_unst_end = 0.0;
};

struct StableTrainResult {
  std::vector<MetricsRow> metrics;
  std::vector<PhaseBoundary> phases;
  int cycles_run = 0;
};

// Called at every phase boundary with a tag like "cycle1_sim".
using CheckpointSink =
    std::function<void(const std::string& tag, const NeuralPotential&)>;

// Alternating simulation/learning loop. Simulation phases advance active
// replicas in t-step segments and freeze those that trip the criterion;
// once the unstable fraction reaches f_max, unstable replicas are rewound
// one segment and learning epochs (simulate all replicas from the rewound
// states, one gradient step on L_obs + lambda L_QM, reset) repeat until the
// fraction falls to f_min. Initial replica states are dataset frames drawn
// without replacement.
StableTrainResult stable_train(NeuralPotential& model, const Dataset& dataset,
                               std::vector<ObservableSpec> observables,
                               const StabilityCriterion& criterion,
                               const IntegratorConfig& integrator,
                               const TrainConfig& cfg,
                               const CheckpointSink& sink = {});

// --------------------------------------------- local neighborhood sampling

// Enumerates all single-molecule neighborhoods of the given states, bins
// molecules by their largest deviation from the equilibrium bond length,
// and picks up to per_bin from each bin (seeded, deterministic). Empty bins
// are skipped.
std::vector<LocalNeighborhood> sample_local_neighborhoods(
    std::span<const SimState> states, const SystemSpec& spec, int bins = 100,
    int per_bin = 5, std::uint64_t seed = 0);

// Mean local observable over every single-molecule neighborhood of every
// state; reference value for localized training.
VecXd local_reference_observable(std::span<const SimState> states,
                                 const SystemSpec& spec,
                                 const ObservableSpec& obs);

// ----------------------------------------------------------------- evaluate

struct EvalConfig {
  int n_replicas = 32;
  double max_time_ps = 50.0;
  int check_every_steps = 2000;  // criterion checks and frame sampling
  int workers = 1;
  std::uint64_t seed = 0;
};

struct EvalResult {
  std::vector<double> stable_time_ps;  // per replica
  // Non-decreasing step curve: (time_ps, fraction unstable by that time).
  std::vector<std::pair<double, double>> fraction_curve;
  int median_replica = 0;  // index with the median stable time
  double median_stable_time_ps = 0.0;
  // Frames of the median replica sampled every check interval while stable.
  std::vector<SimState> median_frames;
};

// Constant-temperature simulations from held-out initial states; per-replica
// stable time is the first criterion trip at evaluation thresholds.
EvalResult evaluate(const PotentialModel& model, const SystemSpec& spec,
                    const StabilityCriterion& criterion,
                    const IntegratorConfig& integrator, const EvalConfig& cfg,
                    std::span<const SimState> initial_states);

// Lower median of a non-empty list (helper shared with reporting).
double median_value(std::vector<double> values);

}  // namespace stabmd
