#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "stabmd/checkpoint.hpp"
#include "stabmd/config.hpp"
#include "stabmd/errors.hpp"
#include "stabmd/xyz_io.hpp"
#include "support/test_support.hpp"

using namespace stabmd;
using namespace stabmd::testing;

namespace {

std::filesystem::path scratch_file(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / "stabmd_io_tests";
  std::filesystem::create_directories(dir);
  return dir / name;
}

}  // namespace

TEST_CASE("trajectory frames round-trip bit-exactly") {
  BuiltSystem sys = build_toy_water(2, 8.0);
  std::mt19937_64 rng(3);
  std::vector<XyzFrame> frames;
  for (int f = 0; f < 4; ++f) {
    XyzFrame frame;
    frame.state.positions = jittered(sys.initial_positions, 1.0, rng);
    frame.state.momenta = jittered(MatX3::Zero(6, 3), 1e-3, rng);
    frame.state.time = f * (1.0 / 3.0);  // not exactly representable
    frame.energy = -17.0 / 7.0 + f * 1e-13;
    frame.forces = jittered(MatX3::Zero(6, 3), 123.456, rng);
    frames.push_back(std::move(frame));
  }
  // Awkward values on purpose.
  frames[0].state.positions(0, 0) = -0.0;
  frames[0].state.momenta(1, 2) = 1e-17;
  frames[1].state.positions(2, 1) = M_PI * 1e8;

  std::stringstream buf;
  write_xyz(buf, sys.spec, frames, {{"temperature", "300"}});
  const XyzFile back = read_xyz(buf, sys.spec);

  REQUIRE(back.frames.size() == frames.size());
  CHECK(back.metadata.at("temperature") == "300");
  for (std::size_t f = 0; f < frames.size(); ++f) {
    CHECK(back.frames[f].state.time == frames[f].state.time);
    CHECK(*back.frames[f].energy == *frames[f].energy);
    CHECK((back.frames[f].state.positions - frames[f].state.positions)
              .cwiseAbs()
              .maxCoeff() == 0.0);
    CHECK((back.frames[f].state.momenta - frames[f].state.momenta)
              .cwiseAbs()
              .maxCoeff() == 0.0);
    CHECK((*back.frames[f].forces - *frames[f].forces)
              .cwiseAbs()
              .maxCoeff() == 0.0);
  }
}

TEST_CASE("trajectory reader validates structure") {
  BuiltSystem sys = build_double_well_dimer();
  std::vector<XyzFrame> frames = {XyzFrame{
      SimState{sys.initial_positions, MatX3::Zero(2, 3), 0.0}, {}, {}}};
  std::stringstream buf;
  write_xyz(buf, sys.spec, frames);
  const std::string good = buf.str();

  SUBCASE("wrong atom count") {
    BuiltSystem other = build_toy_water(1, 8.0);
    std::stringstream in(good);
    CHECK_THROWS_AS(read_xyz(in, other.spec), ValidationError);
  }
  SUBCASE("wrong symbol") {
    std::string bad = good;
    bad.replace(bad.find("\nC "), 3, "\nN ");
    std::stringstream in(bad);
    CHECK_THROWS_AS(read_xyz(in, sys.spec), ValidationError);
  }
  SUBCASE("unsupported format version") {
    std::string bad = good;
    bad.replace(bad.find("format_version=1"), 16, "format_version=9");
    std::stringstream in(bad);
    CHECK_THROWS_AS(read_xyz(in, sys.spec), ValidationError);
  }
  SUBCASE("truncated frame") {
    std::string bad = good.substr(0, good.rfind('\n', good.size() - 2));
    std::stringstream in(bad);
    CHECK_THROWS_AS(read_xyz(in, sys.spec), ValidationError);
  }
  SUBCASE("empty file") {
    std::stringstream in("");
    CHECK_THROWS_AS(read_xyz(in, sys.spec), ValidationError);
  }
}

TEST_CASE("dataset files carry labels and temperature") {
  BuiltSystem sys = build_double_well_dimer();
  GenerateConfig gen;
  gen.n_frames = 5;
  gen.equilibration_steps = 100;
  gen.stride = 20;
  gen.seed = 5;
  IntegratorConfig integ;
  integ.dt = 0.5;
  integ.temperature = 450.0;
  const Dataset ds = generate_dataset(*sys.reference, sys.spec,
                                      sys.initial_positions, integ, gen);
  const auto path = scratch_file("dataset.xyz");
  write_dataset(path.string(), ds);
  const Dataset back = dataset_from_file(path.string(), sys.spec);
  CHECK(back.source_temperature == 450.0);
  REQUIRE(back.size() == ds.size());
  for (int i = 0; i < ds.size(); ++i) {
    CHECK(back.frames[i].energy == ds.frames[i].energy);
    CHECK((back.frames[i].forces - ds.frames[i].forces)
              .cwiseAbs()
              .maxCoeff() == 0.0);
    CHECK((back.frames[i].state.positions - ds.frames[i].state.positions)
              .cwiseAbs()
              .maxCoeff() == 0.0);
  }
}

TEST_CASE("checkpoints round-trip bit-exactly with checksum protection") {
  NeuralArch arch;
  arch.n_species = 2;
  arch.n_basis = 8;
  arch.hidden = 12;
  NeuralPotential model(arch, 7);

  Checkpoint ckpt;
  ckpt.arch = arch;
  ckpt.species_symbols = {"O", "H"};
  ckpt.params = model.params();
  ckpt.epoch = 42;
  ckpt.learning_rate = 3.14e-4;

  const auto path = scratch_file("model.ckpt");
  save_checkpoint(path.string(), ckpt);
  const Checkpoint back = load_checkpoint(path.string());
  CHECK(back.arch == arch);
  CHECK(back.species_symbols == ckpt.species_symbols);
  CHECK((back.params - ckpt.params).cwiseAbs().maxCoeff() == 0.0);
  CHECK(back.epoch == 42);
  CHECK(back.learning_rate == 3.14e-4);

  SUBCASE("a corrupted byte is rejected") {
    std::fstream f(path, std::ios::in | std::ios::out | std::ios::binary);
    f.seekp(64);
    char byte;
    f.seekg(64);
    f.read(&byte, 1);
    byte ^= 0x40;
    f.seekp(64);
    f.write(&byte, 1);
    f.close();
    CHECK_THROWS_AS(load_checkpoint(path.string()), ValidationError);
  }
  SUBCASE("an unknown version is rejected even with a valid checksum") {
    std::ifstream in(path, std::ios::binary);
    std::string data((std::istreambuf_iterator<char>(in)),
                     std::istreambuf_iterator<char>());
    in.close();
    data[8] = 9;  // version field follows the 8-byte magic
    const std::uint32_t crc =
        crc32(reinterpret_cast<const unsigned char*>(data.data()),
              data.size() - 4);
    for (int i = 0; i < 4; ++i)
      data[data.size() - 4 + i] = static_cast<char>(crc >> (8 * i));
    const auto bad = scratch_file("bad_version.ckpt");
    std::ofstream out(bad, std::ios::binary);
    out.write(data.data(), static_cast<std::streamsize>(data.size()));
    out.close();
    CHECK_THROWS_WITH_AS(load_checkpoint(bad.string()),
                         doctest::Contains("version"), ValidationError);
  }
  SUBCASE("truncation is rejected") {
    std::ifstream in(path, std::ios::binary);
    std::string data((std::istreambuf_iterator<char>(in)),
                     std::istreambuf_iterator<char>());
    in.close();
    const auto bad = scratch_file("short.ckpt");
    std::ofstream out(bad, std::ios::binary);
    out.write(data.data(), static_cast<std::streamsize>(data.size() / 2));
    out.close();
    CHECK_THROWS_AS(load_checkpoint(bad.string()), ValidationError);
  }
}

TEST_CASE("config parsing: sections, defaults, and strictness") {
  const std::string text = R"(
# a minimal run
[system]
kind = double_well_dimer
a = 19.0
d0 = 1.5

[integrator]
dt = 0.5
temperature = 500

[training]
replicas = 8
minibatch = 4

[observable]
kind = hofr
bins = 100
r_max_hist = 6.0

[observable]
kind = mean_bond_length
species_a = C
species_b = C

[run]
seed = 7
)";
  const RunConfig cfg = RunConfig::from_text(text);
  CHECK(cfg.system_kind == SystemKind::DoubleWellDimer);
  CHECK(cfg.integrator.temperature == 500.0);
  CHECK(cfg.training.replicas == 8);
  CHECK(cfg.training.minibatch == 4);
  CHECK(cfg.training.alpha == 0.001);  // default
  REQUIRE(cfg.observables.size() == 2);
  CHECK(cfg.observables[0].bins == 100);
  CHECK(cfg.observables[1].kind == ObservableKind::MeanBondLength);
  CHECK(cfg.seed == 7);

  SUBCASE("unknown keys are rejected") {
    CHECK_THROWS_WITH_AS(
        RunConfig::from_text(text + "\n[integrator2]\nx = 1\n"),
        doctest::Contains("unknown config section"), ValidationError);
    CHECK_THROWS_WITH_AS(
        RunConfig::from_text(std::string(text) +
                             "\n[reweight]\nbananas = 3\n"),
        doctest::Contains("unknown key"), ValidationError);
  }
  SUBCASE("duplicate sections are rejected") {
    CHECK_THROWS_WITH_AS(
        RunConfig::from_text(std::string(text) + "\n[run]\nseed = 9\n"),
        doctest::Contains("duplicate"), ValidationError);
  }
  SUBCASE("invariants are enforced at load time") {
    CHECK_THROWS_AS(RunConfig::from_text(std::string(text) +
                                         "\n[stability]\ntrain_threshold = "
                                         "-1\n"),
                    ValidationError);
    CHECK_THROWS_AS(
        RunConfig::from_text(
            "[system]\nkind = double_well_dimer\n[training]\nf_min = 0.8\n"
            "f_max = 0.5\n"),
        ValidationError);
    CHECK_THROWS_AS(RunConfig::from_text("[system]\nkind = warp_drive\n"),
                    ValidationError);
  }
  SUBCASE("values must parse cleanly") {
    CHECK_THROWS_AS(
        RunConfig::from_text(
            "[system]\nkind = double_well_dimer\n[run]\nseed = banana\n"),
        ValidationError);
  }
}

TEST_CASE("format_double survives a round trip at full precision") {
  std::mt19937_64 rng(11);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (int i = 0; i < 200; ++i) {
    const double x = normal(rng) * std::pow(10.0, (i % 40) - 20);
    CHECK(std::stod(format_double(x)) == x);
  }
  CHECK(std::stod(format_double(0.0)) == 0.0);
  CHECK(std::stod(format_double(1.0 / 3.0)) == 1.0 / 3.0);
}
