#include "stabmd/config.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include "stabmd/errors.hpp"

namespace stabmd {

namespace {

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

// Tracks key consumption so leftovers can be reported as unknown keys.
class SectionReader {
 public:
  SectionReader(const IniSection* section, std::string name)
      : section_(section), name_(std::move(name)) {}

  bool present() const { return section_ != nullptr; }

  std::string get(const std::string& key, const std::string& fallback) {
    consumed_.insert(key);
    if (!section_) return fallback;
    for (const auto& [k, v] : section_->entries)
      if (k == key) return v;
    return fallback;
  }

  double get_double(const std::string& key, double fallback) {
    const std::string v = get(key, "");
    if (v.empty()) return fallback;
    try {
      std::size_t pos = 0;
      const double x = std::stod(v, &pos);
      if (pos != v.size()) throw std::invalid_argument(v);
      return x;
    } catch (const std::exception&) {
      throw ValidationError("[" + name_ + "] " + key + ": not a number: " + v);
    }
  }

  long long get_int(const std::string& key, long long fallback) {
    const std::string v = get(key, "");
    if (v.empty()) return fallback;
    try {
      std::size_t pos = 0;
      const long long x = std::stoll(v, &pos);
      if (pos != v.size()) throw std::invalid_argument(v);
      return x;
    } catch (const std::exception&) {
      throw ValidationError("[" + name_ + "] " + key +
                            ": not an integer: " + v);
    }
  }

  void finish() const {
    if (!section_) return;
    for (const auto& [k, v] : section_->entries)
      if (!consumed_.count(k))
        throw ValidationError("[" + name_ + "] unknown key: " + k);
  }

 private:
  const IniSection* section_;
  std::string name_;
  std::set<std::string> consumed_;
};

Optimizer parse_optimizer(const std::string& s) {
  if (s == "sgd") return Optimizer::Sgd;
  if (s == "sgd_momentum") return Optimizer::SgdMomentum;
  throw ValidationError("unknown optimizer: " + s);
}

int species_code(const SystemSpec& spec, const std::string& symbol) {
  for (int i = 0; i < spec.n_species(); ++i)
    if (spec.species_symbols[i] == symbol) return i;
  throw ValidationError("species symbol not in system: " + symbol);
}

}  // namespace

std::vector<IniSection> parse_ini(const std::string& text) {
  std::vector<IniSection> sections;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  IniSection* current = nullptr;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find_first_of("#;");
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']')
        throw ValidationError("config line " + std::to_string(lineno) +
                              ": malformed section header");
      sections.push_back({trim(line.substr(1, line.size() - 2)), {}});
      current = &sections.back();
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos || !current)
      throw ValidationError("config line " + std::to_string(lineno) +
                            ": expected key = value inside a section");
    current->entries.emplace_back(trim(line.substr(0, eq)),
                                  trim(line.substr(eq + 1)));
  }
  return sections;
}

RunConfig RunConfig::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open config file: " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return from_text(buf.str());
}

RunConfig RunConfig::from_text(const std::string& text) {
  const std::vector<IniSection> sections = parse_ini(text);

  static const std::set<std::string> known = {
      "system",   "integrator", "model",    "data",     "pretrain",
      "training", "stability",  "observable", "evaluate", "reweight", "run"};
  std::map<std::string, const IniSection*> once;
  std::vector<const IniSection*> observables;
  for (const IniSection& s : sections) {
    if (!known.count(s.name))
      throw ValidationError("unknown config section: [" + s.name + "]");
    if (s.name == "observable") {
      observables.push_back(&s);
      continue;
    }
    if (once.count(s.name))
      throw ValidationError("duplicate config section: [" + s.name + "]");
    once[s.name] = &s;
  }
  auto section = [&](const std::string& name) {
    auto it = once.find(name);
    return SectionReader(it == once.end() ? nullptr : it->second, name);
  };

  RunConfig cfg;

  {
    SectionReader sys = section("system");
    if (!sys.present())
      throw ValidationError("config needs a [system] section");
    const std::string kind = sys.get("kind", "");
    if (kind == "harmonic") {
      cfg.system_kind = SystemKind::Harmonic;
      cfg.system = build_harmonic(
          static_cast<int>(sys.get_int("n_atoms", 1)),
          sys.get_double("k", 100.0), sys.get_double("mass", 1.0));
    } else if (kind == "double_well_dimer") {
      cfg.system_kind = SystemKind::DoubleWellDimer;
      cfg.system = build_double_well_dimer(sys.get_double("a", 19.0),
                                           sys.get_double("d0", 1.5),
                                           sys.get_double("mass", 12.0));
    } else if (kind == "lj_cluster") {
      cfg.system_kind = SystemKind::LjCluster;
      cfg.system = build_lj_cluster(
          static_cast<int>(sys.get_int("n_atoms", 13)),
          sys.get_double("epsilon", 0.238), sys.get_double("sigma", 3.4),
          sys.get_double("cutoff", 8.5));
    } else if (kind == "toy_water") {
      cfg.system_kind = SystemKind::ToyWater;
      ToyWater::Params p;
      p.bond_k = sys.get_double("bond_k", p.bond_k);
      p.bond_length = sys.get_double("bond_length", p.bond_length);
      p.angle_k = sys.get_double("angle_k", p.angle_k);
      p.angle_deg = sys.get_double("angle_deg", p.angle_deg);
      p.lj_epsilon = sys.get_double("lj_epsilon", p.lj_epsilon);
      p.lj_sigma = sys.get_double("lj_sigma", p.lj_sigma);
      p.lj_cutoff = sys.get_double("lj_cutoff", p.lj_cutoff);
      cfg.system =
          build_toy_water(static_cast<int>(sys.get_int("n_molecules", 8)),
                          sys.get_double("box", 8.0), p);
    } else {
      throw ValidationError("unknown system kind: " + kind);
    }
    sys.finish();
  }

  {
    SectionReader s = section("integrator");
    cfg.integrator.dt = s.get_double("dt", 0.5);
    const std::string ens = s.get("ensemble", "nvt");
    if (ens == "nve")
      cfg.integrator.ensemble = Ensemble::NVE;
    else if (ens == "nvt")
      cfg.integrator.ensemble = Ensemble::NVT;
    else
      throw ValidationError("unknown ensemble: " + ens);
    cfg.integrator.temperature = s.get_double("temperature", 300.0);
    cfg.integrator.thermostat_frequency_cm =
        s.get_double("thermostat_frequency_cm", 2000.0);
    s.finish();
    cfg.integrator.validate();
  }

  {
    SectionReader s = section("model");
    cfg.arch.n_species = cfg.system.spec.n_species();
    cfg.arch.n_basis = static_cast<int>(s.get_int("n_basis", 32));
    cfg.arch.hidden = static_cast<int>(s.get_int("hidden", 64));
    cfg.arch.r_max = s.get_double("r_max", 5.0);
    if (cfg.arch.n_basis < 1 || cfg.arch.hidden < 1 ||
        !(cfg.arch.r_max > 0.0))
      throw ValidationError("invalid model architecture");
    s.finish();
  }

  {
    SectionReader s = section("data");
    cfg.data.n_frames = static_cast<int>(s.get_int("n_frames", 200));
    cfg.data.equilibration_steps =
        static_cast<int>(s.get_int("equilibration_steps", 2000));
    cfg.data.stride = static_cast<int>(s.get_int("stride", 50));
    if (cfg.data.n_frames < 1 || cfg.data.stride < 1 ||
        cfg.data.equilibration_steps < 0)
      throw ValidationError("invalid [data] settings");
    s.finish();
  }

  {
    SectionReader s = section("pretrain");
    cfg.pretrain.lambda_u = s.get_double("lambda_u", 1.0);
    cfg.pretrain.lambda_f = s.get_double("lambda_f", 100.0);
    cfg.pretrain.learning_rate = s.get_double("learning_rate", 1e-4);
    cfg.pretrain.batch_size = static_cast<int>(s.get_int("batch_size", 16));
    cfg.pretrain.max_epochs = static_cast<int>(s.get_int("max_epochs", 500));
    cfg.pretrain.optimizer = parse_optimizer(s.get("optimizer", "sgd"));
    cfg.pretrain.momentum = s.get_double("momentum", 0.9);
    if (cfg.pretrain.batch_size < 1 || cfg.pretrain.max_epochs < 1 ||
        !(cfg.pretrain.learning_rate > 0.0))
      throw ValidationError("invalid [pretrain] settings");
    s.finish();
  }

  {
    SectionReader s = section("training");
    TrainConfig& t = cfg.training;
    t.lambda_u = cfg.pretrain.lambda_u;
    t.lambda_f = cfg.pretrain.lambda_f;
    t.lambda_qm = s.get_double("lambda_qm", 10.0);
    t.alpha = s.get_double("alpha", 0.001);
    t.lr_decay = s.get_double("lr_decay", 0.95);
    t.t_steps = static_cast<int>(s.get_int("t_steps", 2000));
    t.sample_stride = static_cast<int>(s.get_int("sample_stride", 20));
    t.replicas = static_cast<int>(s.get_int("replicas", 32));
    t.minibatch = static_cast<int>(s.get_int("minibatch", 40));
    t.f_min = s.get_double("f_min", 0.2);
    t.f_max = s.get_double("f_max", 0.6);
    t.max_cycles = static_cast<int>(s.get_int("max_cycles", 4));
    t.max_segments_per_phase =
        static_cast<int>(s.get_int("max_segments_per_phase", 100));
    t.max_learning_epochs =
        static_cast<int>(s.get_int("max_learning_epochs", 200));
    t.optimizer = parse_optimizer(s.get("optimizer", "sgd"));
    t.momentum = s.get_double("momentum", 0.9);
    const std::string est = s.get("estimator", "global");
    if (est == "global")
      t.estimator = EstimatorType::Global;
    else if (est == "local")
      t.estimator = EstimatorType::Local;
    else
      throw ValidationError("unknown estimator type: " + est);
    t.local_bins = static_cast<int>(s.get_int("local_bins", 100));
    t.local_per_bin = static_cast<int>(s.get_int("local_per_bin", 5));
    s.finish();
    t.validate();
  }

  {
    SectionReader s = section("stability");
    const std::string kind = s.get("kind", "bond_deviation");
    if (kind == "bond_deviation")
      cfg.criterion_kind = CriterionKind::BondDeviation;
    else if (kind == "min_intermolecular")
      cfg.criterion_kind = CriterionKind::MinIntermolecularDistance;
    else if (kind == "rdf_mae")
      cfg.criterion_kind = CriterionKind::RdfMae;
    else
      throw ValidationError("unknown stability criterion: " + kind);
    cfg.train_threshold = s.get_double("train_threshold", 0.25);
    cfg.eval_threshold = s.get_double("eval_threshold", 0.5);
    cfg.rdf_window_ps = s.get_double("window_ps", 1.0);
    cfg.rdf_bins = static_cast<int>(s.get_int("rdf_bins", 200));
    cfg.rdf_sigma = s.get_double("rdf_sigma", 0.05);
    if (!(cfg.train_threshold > 0.0) || !(cfg.eval_threshold > 0.0))
      throw ValidationError("stability thresholds must be positive");
    s.finish();
  }

  for (const IniSection* osec : observables) {
    SectionReader s(osec, "observable");
    ObservableSpec obs;
    obs.kind = observable_kind_from_string(s.get("kind", "hofr"));
    obs.bins = static_cast<int>(s.get_int("bins", 500));
    obs.r_max_hist = s.get_double("r_max_hist", 10.0);
    obs.smear_sigma = s.get_double("smear_sigma", 0.05);
    obs.vacf_lags = static_cast<int>(s.get_int("vacf_lags", 100));
    const std::string sa = s.get("species_a", "");
    const std::string sb = s.get("species_b", "");
    if (!sa.empty() != !sb.empty())
      throw ValidationError("species_a and species_b must come together");
    if (!sa.empty())
      obs.pair = SpeciesPair{species_code(cfg.system.spec, sa),
                             species_code(cfg.system.spec, sb)};
    s.finish();
    obs.validate();
    cfg.observables.push_back(std::move(obs));
  }
  if (cfg.observables.empty()) {
    ObservableSpec obs;  // distribution of interatomic distances
    cfg.observables.push_back(obs);
  }

  {
    SectionReader s = section("evaluate");
    cfg.evaluate.n_replicas = static_cast<int>(s.get_int("n_replicas", 32));
    cfg.evaluate.max_time_ps = s.get_double("max_time_ps", 50.0);
    cfg.evaluate.check_every_steps =
        static_cast<int>(s.get_int("check_every_steps", 2000));
    if (cfg.evaluate.n_replicas < 1 || !(cfg.evaluate.max_time_ps > 0.0) ||
        cfg.evaluate.check_every_steps < 1)
      throw ValidationError("invalid [evaluate] settings");
    s.finish();
  }

  {
    SectionReader s = section("reweight");
    cfg.reweight.t2 = s.get_double("t2", cfg.integrator.temperature);
    cfg.reweight.min_n_eff = s.get_double("min_n_eff", 1000.0);
    const std::string mode = s.get("mode", "potential_only");
    if (mode == "potential_only")
      cfg.reweight.use_kinetic = false;
    else if (mode == "full_hamiltonian")
      cfg.reweight.use_kinetic = true;
    else
      throw ValidationError("unknown reweight mode: " + mode);
    if (!(cfg.reweight.t2 > 0.0))
      throw ValidationError("reweight target temperature must be positive");
    s.finish();
  }

  {
    SectionReader s = section("run");
    cfg.seed = static_cast<std::uint64_t>(s.get_int("seed", 0));
    cfg.workers = static_cast<int>(s.get_int("workers", 1));
    if (cfg.workers < 1) throw ValidationError("workers must be positive");
    s.finish();
  }

  cfg.training.workers = cfg.workers;
  cfg.training.seed = cfg.seed;
  cfg.pretrain.seed = cfg.seed;
  cfg.data.seed = cfg.seed;
  cfg.evaluate.workers = cfg.workers;
  cfg.evaluate.seed = cfg.seed;
  return cfg;
}

std::vector<ObservableSpec> RunConfig::element_rdf_specs() const {
  const SystemSpec& spec = system.spec;
  if (!spec.periodic())
    throw ValidationError("element RDFs need a periodic system");
  std::vector<ObservableSpec> out;
  const double half = spec.box->minCoeff() / 2.0;
  for (int a = 0; a < spec.n_species(); ++a) {
    for (int b = a; b < spec.n_species(); ++b) {
      ObservableSpec o;
      o.kind = ObservableKind::Rdf;
      o.bins = rdf_bins;
      o.r_max_hist = half;
      o.smear_sigma = rdf_sigma;
      o.pair = SpeciesPair{a, b};
      out.push_back(std::move(o));
    }
  }
  return out;
}

StabilityCriterion RunConfig::make_criterion(
    bool eval, std::span<const SimState> reference_states) const {
  StabilityCriterion c;
  c.kind = criterion_kind;
  c.threshold = eval ? eval_threshold : train_threshold;
  c.window_ps = rdf_window_ps;
  if (c.kind == CriterionKind::RdfMae) {
    if (reference_states.empty())
      throw ValidationError("RDF criterion needs reference states");
    c.reference_rdfs = element_rdf_specs();
    for (ObservableSpec& o : c.reference_rdfs)
      o.g_ref = rdf(reference_states, system.spec, o);
  }
  return c;
}

}  // namespace stabmd
