// Command-line driver: dataset generation, energy/forces pretraining, the
// alternating stability training loop, evaluation runs, and temperature
// reweighting. All outputs are deterministic given (config, seed, inputs);
// timestamps go to a sidecar run.log only.

#include <CLI11.hpp>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "stabmd/checkpoint.hpp"
#include "stabmd/config.hpp"
#include "stabmd/errors.hpp"
#include "stabmd/reweight.hpp"
#include "stabmd/xyz_io.hpp"

namespace fs = std::filesystem;
using namespace stabmd;

namespace {

constexpr int kExitValidation = 2;
constexpr int kExitNumerical = 3;
constexpr int kExitReweight = 4;

struct CommonArgs {
  std::string config_path;
  std::string out_dir = ".";
  std::string resume;
  long long seed = -1;  // overrides [run] seed when >= 0
  int workers = 0;      // overrides [run] workers when > 0
};

void add_common(CLI::App* cmd, CommonArgs& args) {
  cmd->add_option("--config", args.config_path, "Run configuration file")
      ->required();
  cmd->add_option("--out", args.out_dir, "Output directory");
  cmd->add_option("--seed", args.seed, "Override the configured seed");
  cmd->add_option("--workers", args.workers, "Override the worker count");
}

RunConfig load_config(const CommonArgs& args) {
  RunConfig cfg = RunConfig::load(args.config_path);
  if (args.seed >= 0) {
    cfg.seed = static_cast<std::uint64_t>(args.seed);
    cfg.training.seed = cfg.seed;
    cfg.pretrain.seed = cfg.seed;
    cfg.data.seed = cfg.seed;
    cfg.evaluate.seed = cfg.seed;
  }
  if (args.workers > 0) {
    cfg.workers = args.workers;
    cfg.training.workers = args.workers;
    cfg.evaluate.workers = args.workers;
  }
  fs::create_directories(args.out_dir);
  return cfg;
}

std::ofstream open_out(const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot write " + path.string());
  return out;
}

// Timestamps live here and nowhere else.
void log_line(const fs::path& out_dir, const std::string& message) {
  std::ofstream log(out_dir / "run.log", std::ios::app);
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  char stamp[64];
  std::strftime(stamp, sizeof(stamp), "%F %T", std::localtime(&t));
  log << stamp << " " << message << "\n";
}

Checkpoint model_checkpoint(const RunConfig& cfg, const NeuralPotential& model,
                            int epoch, double lr) {
  Checkpoint ckpt;
  ckpt.arch = model.arch();
  ckpt.species_symbols = cfg.system.spec.species_symbols;
  ckpt.params = model.params();
  ckpt.epoch = epoch;
  ckpt.learning_rate = lr;
  return ckpt;
}

NeuralPotential model_from_checkpoint(const RunConfig& cfg,
                                      const std::string& path) {
  const Checkpoint ckpt = load_checkpoint(path);
  if (ckpt.species_symbols != cfg.system.spec.species_symbols)
    throw ValidationError(
        "checkpoint species map does not match the configured system");
  if (!(ckpt.arch == cfg.arch))
    throw ValidationError(
        "checkpoint architecture does not match the configured model");
  return NeuralPotential(ckpt.arch, ckpt.params);
}

void write_observable_csv(const fs::path& path, const ObservableSpec& obs,
                          const VecXd& value) {
  std::ofstream out = open_out(path);
  if (value.size() == 1) {
    out << "value\n" << format_double(value[0]) << "\n";
    return;
  }
  const VecXd centers = obs.bin_centers();
  out << "bin_center,value\n";
  for (int b = 0; b < value.size(); ++b)
    out << format_double(centers[b]) << "," << format_double(value[b]) << "\n";
}

// ------------------------------------------------------------- subcommands

int cmd_gen_data(const CommonArgs& args) {
  const RunConfig cfg = load_config(args);
  const fs::path out_dir(args.out_dir);
  log_line(out_dir, "gen-data start");

  GenerateConfig gen = cfg.data;
  gen.seed = cfg.seed;
  const Dataset ds =
      generate_dataset(*cfg.system.reference, cfg.system.spec,
                       cfg.system.initial_positions, cfg.integrator, gen);
  std::map<std::string, std::string> meta;
  meta["seed"] = std::to_string(cfg.seed);
  meta["generator"] = "reference_potential";
  write_dataset((out_dir / "dataset.xyz").string(), ds, meta);
  log_line(out_dir, "gen-data done: " + std::to_string(ds.size()) + " frames");
  std::cout << "wrote " << (out_dir / "dataset.xyz").string() << " ("
            << ds.size() << " frames)\n";
  return 0;
}

int cmd_pretrain(const CommonArgs& args, const std::string& dataset_path) {
  const RunConfig cfg = load_config(args);
  const fs::path out_dir(args.out_dir);
  log_line(out_dir, "pretrain start");

  const Dataset ds = dataset_from_file(dataset_path, cfg.system.spec);
  PretrainConfig pc = cfg.pretrain;
  NeuralPotential model(cfg.arch, derive_seed(cfg.seed, 0xA11));
  if (!args.resume.empty()) {
    const Checkpoint ckpt = load_checkpoint(args.resume);
    model = model_from_checkpoint(cfg, args.resume);
    pc.start_epoch = ckpt.epoch;
    pc.seed = derive_seed(cfg.seed, static_cast<std::uint64_t>(ckpt.epoch));
  }

  const PretrainResult result = pretrain(model, ds, pc);

  save_checkpoint((out_dir / "model.ckpt").string(),
                  model_checkpoint(cfg, model,
                                   pc.start_epoch + result.epochs_run,
                                   pc.learning_rate));
  std::ofstream curve = open_out(out_dir / "loss_curve.csv");
  curve << "epoch,loss\n";
  for (const auto& [epoch, loss] : result.loss_curve)
    curve << epoch << "," << format_double(loss) << "\n";
  log_line(out_dir, "pretrain done");
  std::cout << "pretrained " << result.epochs_run << " epochs, final loss "
            << result.final_loss << "\n";
  return 0;
}

int cmd_stable_train(const CommonArgs& args, const std::string& dataset_path,
                     const std::string& checkpoint_path) {
  const RunConfig cfg = load_config(args);
  const fs::path out_dir(args.out_dir);
  log_line(out_dir, "stable-train start");

  const Dataset ds = dataset_from_file(dataset_path, cfg.system.spec);
  NeuralPotential model = model_from_checkpoint(cfg, checkpoint_path);

  const std::vector<SimState> states = ds.states();
  const StabilityCriterion criterion = cfg.make_criterion(false, states);

  std::vector<ObservableSpec> observables;
  for (const ObservableSpec& o : cfg.observables) {
    if (!is_static_observable(o.kind)) continue;
    ObservableSpec obs = o;
    obs.g_ref = cfg.training.estimator == EstimatorType::Local
                    ? local_reference_observable(states, cfg.system.spec, obs)
                    : reference_observable(states, cfg.system.spec, obs);
    observables.push_back(std::move(obs));
  }
  if (observables.empty())
    throw ValidationError("no static observables configured for training");

  CheckpointSink sink = [&](const std::string& tag,
                            const NeuralPotential& m) {
    save_checkpoint((out_dir / ("model_" + tag + ".ckpt")).string(),
                    model_checkpoint(cfg, m, 0, cfg.training.alpha));
  };

  const StableTrainResult result =
      stable_train(model, ds, observables, criterion, cfg.integrator,
                   cfg.training, sink);

  save_checkpoint((out_dir / "model.ckpt").string(),
                  model_checkpoint(cfg, model, 0, cfg.training.alpha));

  std::ofstream metrics = open_out(out_dir / "metrics.csv");
  metrics << "cycle,phase,epoch,f_unst,loss_obs,loss_qm,alpha\n";
  for (const MetricsRow& row : result.metrics) {
    metrics << row.cycle << "," << row.phase << "," << row.epoch << ","
            << format_double(row.f_unst) << ",";
    if (std::isfinite(row.loss_obs)) metrics << format_double(row.loss_obs);
    metrics << ",";
    if (std::isfinite(row.loss_qm)) metrics << format_double(row.loss_qm);
    metrics << "," << format_double(row.alpha) << "\n";
  }
  std::ofstream phases = open_out(out_dir / "phases.csv");
  phases << "cycle,phase,epochs,f_unst_end\n";
  for (const PhaseBoundary& p : result.phases)
    phases << p.cycle << "," << p.phase << "," << p.epochs << ","
           << format_double(p.f_unst_end) << "\n";

  log_line(out_dir, "stable-train done");
  std::cout << "ran " << result.cycles_run << " cycles, "
            << result.metrics.size() << " logged epochs\n";
  return 0;
}

int cmd_evaluate(const CommonArgs& args, const std::string& dataset_path,
                 const std::string& checkpoint_path) {
  const RunConfig cfg = load_config(args);
  const fs::path out_dir(args.out_dir);
  log_line(out_dir, "evaluate start");

  const Dataset ds = dataset_from_file(dataset_path, cfg.system.spec);
  NeuralPotential model = model_from_checkpoint(cfg, checkpoint_path);
  const std::vector<SimState> states = ds.states();
  const StabilityCriterion criterion = cfg.make_criterion(true, states);

  const EvalResult result = evaluate(model, cfg.system.spec, criterion,
                                     cfg.integrator, cfg.evaluate, states);

  std::ofstream stability = open_out(out_dir / "stability.csv");
  stability << "replica,stable_time_ps\n";
  for (std::size_t i = 0; i < result.stable_time_ps.size(); ++i)
    stability << i << "," << format_double(result.stable_time_ps[i]) << "\n";

  std::ofstream curve = open_out(out_dir / "fraction_curve.csv");
  curve << "time_ps,f_unst\n";
  for (const auto& [t, f] : result.fraction_curve)
    curve << format_double(t) << "," << format_double(f) << "\n";

  // Observables over the median replica's sampled frames.
  for (const ObservableSpec& obs : cfg.observables) {
    const std::string name = to_string(obs.kind);
    if (is_static_observable(obs.kind)) {
      const VecXd value = reference_observable(result.median_frames,
                                               cfg.system.spec, obs);
      write_observable_csv(out_dir / ("obs_" + name + ".csv"), obs, value);
    } else if (obs.kind == ObservableKind::Diffusivity &&
               result.median_frames.size() >= 4) {
      const double span =
          result.median_frames.back().time - result.median_frames.front().time;
      VecXd value(1);
      value[0] = diffusivity(result.median_frames, cfg.system.spec,
                             {0.25 * span, 0.75 * span});
      write_observable_csv(out_dir / ("obs_" + name + ".csv"), obs, value);
    }
    // VACF needs consecutive per-step frames, which evaluation does not
    // retain at the sampling stride; it is available through the library.
  }

  std::ofstream summary = open_out(out_dir / "summary.csv");
  summary << "median_replica,median_stable_time_ps\n";
  summary << result.median_replica << ","
          << format_double(result.median_stable_time_ps) << "\n";

  log_line(out_dir, "evaluate done");
  std::cout << "median stable time: " << result.median_stable_time_ps
            << " ps\n";
  return 0;
}

int cmd_reweight(const CommonArgs& args, const std::string& dataset_path,
                 double t2_override) {
  const RunConfig cfg = load_config(args);
  const fs::path out_dir(args.out_dir);
  log_line(out_dir, "reweight start");

  const Dataset ds = dataset_from_file(dataset_path, cfg.system.spec);
  const double t1 = ds.source_temperature;
  const double t2 = t2_override > 0.0 ? t2_override : cfg.reweight.t2;

  const ObservableSpec* obs = nullptr;
  for (const ObservableSpec& o : cfg.observables)
    if (is_static_observable(o.kind)) {
      obs = &o;
      break;
    }
  if (!obs) throw ValidationError("no static observable to reweight");

  VecXd energies(ds.size());
  MatXd g_values(ds.size(), obs->output_length());
  for (int i = 0; i < ds.size(); ++i) {
    energies[i] = ds.frames[i].energy;
    if (cfg.reweight.use_kinetic)
      energies[i] += kinetic_energy(ds.frames[i].state, cfg.system.spec);
    g_values.row(i) =
        evaluate_observable(ds.frames[i].state, cfg.system.spec, *obs)
            .transpose();
  }

  const ReweightingResult result = reweight(energies, g_values, t1, t2);
  if (result.n_eff < cfg.reweight.min_n_eff)
    throw DegenerateReweightError(
        "effective sample size " + std::to_string(result.n_eff) +
        " below the floor " + std::to_string(cfg.reweight.min_n_eff));

  write_observable_csv(out_dir / "reweighted.csv", *obs,
                       result.reweighted_value);
  std::ofstream summary = open_out(out_dir / "reweight_summary.csv");
  summary << "n_samples,n_eff,t1,t2\n";
  summary << ds.size() << "," << format_double(result.n_eff) << ","
          << format_double(t1) << "," << format_double(t2) << "\n";

  log_line(out_dir, "reweight done");
  std::cout << "n_eff = " << result.n_eff << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"MD-in-the-loop observable training for neural potentials"};
  app.require_subcommand(1);

  CommonArgs gen_args, pre_args, train_args, eval_args, rew_args;
  std::string dataset_path, checkpoint_path;
  double t2 = -1.0;

  CLI::App* gen = app.add_subcommand("gen-data",
                                     "Generate a labeled reference dataset");
  add_common(gen, gen_args);

  CLI::App* pre = app.add_subcommand(
      "pretrain", "Train a model on reference energies and forces");
  add_common(pre, pre_args);
  pre->add_option("--dataset", dataset_path, "Dataset file")->required();
  pre->add_option("--resume", pre_args.resume, "Continue from a checkpoint");

  CLI::App* train = app.add_subcommand(
      "stable-train",
      "Alternate MD instability discovery with observable-matching updates");
  add_common(train, train_args);
  train->add_option("--dataset", dataset_path, "Dataset file")->required();
  train->add_option("--checkpoint", checkpoint_path, "Pretrained model")
      ->required();

  CLI::App* ev = app.add_subcommand(
      "evaluate", "Measure stable simulation time over held-out replicas");
  add_common(ev, eval_args);
  ev->add_option("--dataset", dataset_path,
                 "Held-out dataset providing initial states")
      ->required();
  ev->add_option("--checkpoint", checkpoint_path, "Model to evaluate")
      ->required();

  CLI::App* rew = app.add_subcommand(
      "reweight", "Reweight a dataset observable to another temperature");
  add_common(rew, rew_args);
  rew->add_option("--dataset", dataset_path, "Dataset file")->required();
  rew->add_option("--t2", t2, "Target temperature (K)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitValidation;
  }

  try {
    if (gen->parsed()) return cmd_gen_data(gen_args);
    if (pre->parsed()) return cmd_pretrain(pre_args, dataset_path);
    if (train->parsed())
      return cmd_stable_train(train_args, dataset_path, checkpoint_path);
    if (ev->parsed())
      return cmd_evaluate(eval_args, dataset_path, checkpoint_path);
    if (rew->parsed()) return cmd_reweight(rew_args, dataset_path, t2);
  } catch (const DegenerateReweightError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitReweight;
  } catch (const NumericalError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
