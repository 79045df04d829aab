#include <doctest.h>

#include <cmath>
#include <random>

#include "stabmd/errors.hpp"
#include "stabmd/integrator.hpp"
#include "stabmd/replica.hpp"
#include "stabmd/systems.hpp"
#include "stabmd/units.hpp"
#include "support/test_support.hpp"

using namespace stabmd;
using namespace stabmd::testing;

namespace {

SystemSpec free_atoms(int n, double mass = 1.0) {
  SystemSpec spec;
  spec.n_atoms = n;
  spec.species.assign(n, 0);
  spec.species_symbols = {"X"};
  spec.masses = VecXd::Constant(n, mass);
  spec.validate();
  return spec;
}

}  // namespace

TEST_CASE("free particle advances ballistically") {
  const SystemSpec spec = free_atoms(1, 2.0);
  ZeroPotential flat;
  IntegratorConfig cfg;
  cfg.dt = 0.5;
  cfg.ensemble = Ensemble::NVE;
  SimState s{MatX3::Zero(1, 3), MatX3::Zero(1, 3), 0.0};
  s.momenta(0, 0) = 1.4;
  const SimState next = step_nve(flat, s, spec, cfg);
  CHECK(next.positions(0, 0) ==
        doctest::Approx(1.4 / 2.0 * 0.5).epsilon(1e-15));
  CHECK(next.momenta(0, 0) == 1.4);
  CHECK(next.time == 0.5);
}

TEST_CASE("NVE conserves the harmonic oscillator energy over 1e4 steps") {
  const double k = 1.0, m = 1.0;
  BuiltSystem sys = build_harmonic(1, k, m);
  // Mechanical frequency uses forces in amu A/fs^2.
  const double omega = std::sqrt(k / units::kKcalPerMechanical / m);
  const double period = 2.0 * M_PI / omega;
  IntegratorConfig cfg;
  cfg.dt = period / 1000.0;
  cfg.ensemble = Ensemble::NVE;

  SimState s{sys.initial_positions, MatX3::Zero(1, 3), 0.0};
  s.positions(0, 0) += 0.5;
  const double e0 = sys.reference->energy(s, sys.spec) +
                    kinetic_energy(s, sys.spec);
  Simulation sim(*sys.reference, sys.spec, cfg, s);
  double worst = 0.0;
  for (int chunk = 0; chunk < 100; ++chunk) {
    sim.run(100);
    const double e = sys.reference->energy(sim.state(), sys.spec) +
                     kinetic_energy(sim.state(), sys.spec);
    worst = std::max(worst, std::abs(e - e0) / std::abs(e0));
  }
  CHECK(worst < 1e-4);
}

TEST_CASE("velocity Verlet is time reversible") {
  BuiltSystem sys = build_double_well_dimer();
  IntegratorConfig cfg;
  cfg.dt = 0.5;
  cfg.ensemble = Ensemble::NVE;
  std::mt19937_64 rng(5);
  SimState a{jittered(sys.initial_positions, 0.1, rng),
             jittered(MatX3::Zero(2, 3), 0.01, rng), 0.0};
  SimState b = step_nve(*sys.reference, a, sys.spec, cfg);
  b.momenta = -b.momenta;
  SimState back = step_nve(*sys.reference, b, sys.spec, cfg);
  back.momenta = -back.momenta;
  CHECK((back.positions - a.positions).cwiseAbs().maxCoeff() < 1e-10);
  CHECK((back.momenta - a.momenta).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("thermostat at its fixed point leaves momenta unscaled") {
  const SystemSpec spec = free_atoms(4);
  ZeroPotential flat;
  std::mt19937_64 rng(7);
  SimState s{MatX3::Zero(4, 3), jittered(MatX3::Zero(4, 3), 0.05, rng), 0.0};
  IntegratorConfig cfg;
  cfg.dt = 0.5;
  cfg.ensemble = Ensemble::NVT;
  cfg.temperature = instantaneous_temperature(s, spec);  // exact target
  const auto [next, th] = step_nvt(flat, s, ThermostatState{}, spec, cfg);
  CHECK((next.momenta - s.momenta).cwiseAbs().maxCoeff() < 1e-12);
  CHECK(std::abs(th.xi) < 1e-15);
}

TEST_CASE("Nose-Hoover conserves its extended invariant") {
  BuiltSystem sys = build_double_well_dimer();
  IntegratorConfig cfg;
  cfg.dt = 0.25;
  cfg.ensemble = Ensemble::NVT;
  cfg.temperature = 300.0;
  cfg.thermostat_frequency_cm = 2000.0;
  std::mt19937_64 rng(11);
  SimState s{sys.initial_positions,
             maxwell_boltzmann_momenta(sys.spec, 300.0, rng), 0.0};
  Simulation sim(*sys.reference, sys.spec, cfg, s);
  const double h0 =
      nose_hoover_invariant(*sys.reference, sim.state(), sim.thermostat(),
                            sys.spec, cfg);
  double worst = 0.0;
  for (int chunk = 0; chunk < 100; ++chunk) {
    sim.run(100);
    const double h = nose_hoover_invariant(*sys.reference, sim.state(),
                                           sim.thermostat(), sys.spec, cfg);
    worst = std::max(worst, std::abs(h - h0) / std::abs(h0));
  }
  CHECK(worst < 1e-3);
}

TEST_CASE("Nose-Hoover holds the LJ cluster near the target temperature") {
  BuiltSystem sys = build_lj_cluster(13);
  IntegratorConfig cfg;
  cfg.dt = 2.0;  // argon-like masses support a larger step
  cfg.ensemble = Ensemble::NVT;
  cfg.temperature = 30.0;
  std::mt19937_64 rng(13);
  SimState s{sys.initial_positions,
             maxwell_boltzmann_momenta(sys.spec, 30.0, rng), 0.0};
  Simulation sim(*sys.reference, sys.spec, cfg, s);
  sim.run(2000);  // equilibrate
  double mean_t = 0.0;
  const int n = 10000;
  for (int i = 0; i < n; ++i) {
    sim.step();
    mean_t += instantaneous_temperature(sim.state(), sys.spec);
  }
  mean_t /= n;
  CHECK(mean_t == doctest::Approx(30.0).epsilon(0.05));
}

TEST_CASE("Maxwell-Boltzmann momenta satisfy equipartition") {
  const SystemSpec spec = free_atoms(200, 3.7);
  std::mt19937_64 rng(17);
  const MatX3 p = maxwell_boltzmann_momenta(spec, 250.0, rng);
  // Total momentum removed.
  CHECK(p.colwise().sum().norm() < 1e-9);
  SimState s{MatX3::Zero(200, 3), p, 0.0};
  const double ke = kinetic_energy(s, spec);
  const int dof = 3 * 200 - 3;
  const double per_dof = ke / dof;
  const double expected = 0.5 * units::kBoltzmann * 250.0;
  // KE/dof is chi-square distributed; 3 sigma of the per-dof mean.
  const double sigma = expected * std::sqrt(2.0 / dof);
  CHECK(std::abs(per_dof - expected) < 3.0 * sigma);
}

TEST_CASE("stateless steps and the cached-force stepper agree bitwise") {
  BuiltSystem sys = build_double_well_dimer();
  IntegratorConfig cfg;
  cfg.dt = 0.5;
  cfg.ensemble = Ensemble::NVT;
  cfg.temperature = 400.0;
  std::mt19937_64 rng(19);
  SimState s{sys.initial_positions,
             maxwell_boltzmann_momenta(sys.spec, 400.0, rng), 0.0};
  ThermostatState th;

  Simulation sim(*sys.reference, sys.spec, cfg, s, th);
  SimState loose = s;
  ThermostatState loose_th = th;
  for (int i = 0; i < 100; ++i) {
    sim.step();
    std::tie(loose, loose_th) =
        step_nvt(*sys.reference, loose, loose_th, sys.spec, cfg);
  }
  CHECK((sim.state().positions - loose.positions).cwiseAbs().maxCoeff() == 0.0);
  CHECK((sim.state().momenta - loose.momenta).cwiseAbs().maxCoeff() == 0.0);
  CHECK(sim.thermostat().xi == loose_th.xi);
}

TEST_CASE("simulate_replicas samples, freezes, and validates strides") {
  BuiltSystem sys = build_double_well_dimer();
  IntegratorConfig cfg;
  cfg.dt = 0.5;
  cfg.ensemble = Ensemble::NVT;
  cfg.temperature = 300.0;

  ReplicaSet rs;
  rs.spec = std::make_shared<SystemSpec>(sys.spec);
  std::mt19937_64 rng(23);
  for (int i = 0; i < 3; ++i) {
    rs.replicas.push_back(SimState{
        sys.initial_positions,
        maxwell_boltzmann_momenta(sys.spec, 300.0, rng), 0.0});
    rs.thermostats.push_back({});
    rs.active.push_back(true);
    rs.total_time_fs.push_back(0.0);
  }

  SUBCASE("sampling stride equal to the step count yields the endpoint") {
    auto samples = simulate_replicas(*sys.reference, rs, cfg, 100, 100);
    for (int i = 0; i < 3; ++i) {
      REQUIRE(samples[i].size() == 1);
      CHECK((samples[i][0].positions - rs.replicas[i].positions)
                .cwiseAbs()
                .maxCoeff() == 0.0);
    }
  }
  SUBCASE("inactive replicas are untouched and produce no samples") {
    const SimState before = rs.replicas[1];
    rs.active[1] = false;
    auto samples = simulate_replicas(*sys.reference, rs, cfg, 50, 10);
    CHECK(samples[1].empty());
    CHECK((rs.replicas[1].positions - before.positions).cwiseAbs().maxCoeff() ==
          0.0);
    CHECK(rs.total_time_fs[1] == 0.0);
    CHECK(rs.total_time_fs[0] == doctest::Approx(25.0));
    CHECK(unstable_fraction(rs) == doctest::Approx(1.0 / 3.0));
  }
  SUBCASE("all replicas inactive is a no-op") {
    rs.active = {false, false, false};
    const auto before = rs.replicas;
    auto samples = simulate_replicas(*sys.reference, rs, cfg, 50, 10);
    for (int i = 0; i < 3; ++i) {
      CHECK(samples[i].empty());
      CHECK((rs.replicas[i].positions - before[i].positions)
                .cwiseAbs()
                .maxCoeff() == 0.0);
    }
  }
  SUBCASE("indivisible stride is an error") {
    CHECK_THROWS_AS(simulate_replicas(*sys.reference, rs, cfg, 100, 33),
                    ValidationError);
  }
  SUBCASE("replicas with identical initial states follow identical paths") {
    rs.replicas[1] = rs.replicas[0];
    rs.thermostats[1] = rs.thermostats[0];
    simulate_replicas(*sys.reference, rs, cfg, 200, 50);
    CHECK((rs.replicas[0].positions - rs.replicas[1].positions)
              .cwiseAbs()
              .maxCoeff() == 0.0);
  }
  SUBCASE("worker count does not change the result") {
    ReplicaSet copy = rs;
    auto s1 = simulate_replicas(*sys.reference, rs, cfg, 100, 20, 1);
    auto s4 = simulate_replicas(*sys.reference, copy, cfg, 100, 20, 4);
    for (int i = 0; i < 3; ++i) {
      CHECK((rs.replicas[i].positions - copy.replicas[i].positions)
                .cwiseAbs()
                .maxCoeff() == 0.0);
      REQUIRE(s1[i].size() == s4[i].size());
      for (std::size_t f = 0; f < s1[i].size(); ++f)
        CHECK((s1[i][f].positions - s4[i][f].positions)
                  .cwiseAbs()
                  .maxCoeff() == 0.0);
    }
  }
}

TEST_CASE("per-replica seed streams are independent of replica count") {
  CHECK(derive_seed(42, 0) == derive_seed(42, 0));
  CHECK(derive_seed(42, 0) != derive_seed(42, 1));
  CHECK(derive_seed(42, 1) != derive_seed(43, 1));
}

TEST_CASE("NaN positions abort integration") {
  const SystemSpec spec = free_atoms(1);
  ZeroPotential flat;
  IntegratorConfig cfg;
  cfg.ensemble = Ensemble::NVE;
  SimState s{MatX3::Zero(1, 3), MatX3::Zero(1, 3), 0.0};
  s.positions(0, 0) = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(step_nve(flat, s, spec, cfg), NumericalError);
}
