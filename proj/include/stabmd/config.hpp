#pragma once

#include <map>
#include <string>
#include <vector>

#include "stabmd/dataset.hpp"
#include "stabmd/neural_potential.hpp"
#include "stabmd/systems.hpp"
#include "stabmd/trainer.hpp"

namespace stabmd {

// Sectioned key=value file. Sections other than [observable] may appear
// once; [observable] repeats. Unknown sections or keys are errors.
struct IniSection {
  std::string name;
  std::vector<std::pair<std::string, std::string>> entries;
};

std::vector<IniSection> parse_ini(const std::string& text);

enum class SystemKind { Harmonic, DoubleWellDimer, LjCluster, ToyWater };

struct ReweightConfig {
  double t2 = 300.0;
  double min_n_eff = 1000.0;
  bool use_kinetic = false;  // include kinetic energy in the sample energies
};

// Everything a CLI run needs, validated at load time.
struct RunConfig {
  SystemKind system_kind = SystemKind::DoubleWellDimer;
  BuiltSystem system;

  NeuralArch arch;
  IntegratorConfig integrator;
  GenerateConfig data;
  PretrainConfig pretrain;
  TrainConfig training;

  CriterionKind criterion_kind = CriterionKind::BondDeviation;
  double train_threshold = 0.25;
  double eval_threshold = 0.5;
  double rdf_window_ps = 1.0;
  int rdf_bins = 200;
  double rdf_sigma = 0.05;

  std::vector<ObservableSpec> observables;
  EvalConfig evaluate;
  ReweightConfig reweight;

  std::uint64_t seed = 0;
  int workers = 1;

  static RunConfig load(const std::string& path);
  static RunConfig from_text(const std::string& text);

  // Train- or eval-threshold criterion; RdfMae reference curves are
  // computed from the given dataset states.
  StabilityCriterion make_criterion(bool eval,
                                    std::span<const SimState> reference_states)
      const;

  // Element-conditioned RDF specs for every unordered species pair, using
  // the [stability] binning. r_max capped at half the box.
  std::vector<ObservableSpec> element_rdf_specs() const;
};

}  // namespace stabmd
