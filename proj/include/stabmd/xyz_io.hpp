#pragma once

#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "stabmd/dataset.hpp"

namespace stabmd {

// Extended-XYZ style text frames: a count line, a key=value comment line
// (time, energy, box, column layout, free metadata on the first frame),
// then one line per atom with symbol, position, and optional momentum and
// force columns. Numbers carry 17 significant digits so doubles round-trip
// bit-exactly.
struct XyzFrame {
  SimState state;
  std::optional<double> energy;
  std::optional<MatX3> forces;
};

struct XyzFile {
  std::vector<XyzFrame> frames;
  std::map<std::string, std::string> metadata;  // first-frame extras
};

void write_xyz(std::ostream& out, const SystemSpec& spec,
               const std::vector<XyzFrame>& frames,
               const std::map<std::string, std::string>& metadata = {});

// Parses and validates against the expected system (atom count, symbols,
// box). Rejects unknown format versions.
XyzFile read_xyz(std::istream& in, const SystemSpec& spec);

void write_xyz_file(const std::string& path, const SystemSpec& spec,
                    const std::vector<XyzFrame>& frames,
                    const std::map<std::string, std::string>& metadata = {});
XyzFile read_xyz_file(const std::string& path, const SystemSpec& spec);

// Dataset <-> frame conversion (frames carry energy + forces + momenta).
std::vector<XyzFrame> dataset_to_frames(const Dataset& dataset);
Dataset dataset_from_file(const std::string& path, const SystemSpec& spec);
void write_dataset(const std::string& path, const Dataset& dataset,
                   const std::map<std::string, std::string>& extra = {});

// Deterministic number formatting shared by every writer (17 significant
// digits; round-trips IEEE doubles).
std::string format_double(double x);

}  // namespace stabmd
