#pragma once

#include <string>
#include <vector>

#include "stabmd/neural_potential.hpp"

namespace stabmd {

// Binary model checkpoint: magic + version, architecture metadata including
// the species map, the flat parameter vector as little-endian 64-bit
// floats, optional training progress, and a CRC32 integrity checksum.
struct Checkpoint {
  NeuralArch arch;
  std::vector<std::string> species_symbols;
  VecXd params;
  int epoch = 0;         // pretraining progress, for resume
  double learning_rate = 0.0;
};

void save_checkpoint(const std::string& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::string& path);

std::uint32_t crc32(const unsigned char* data, std::size_t size);

}  // namespace stabmd
