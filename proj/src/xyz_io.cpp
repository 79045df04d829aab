#include "stabmd/xyz_io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "stabmd/errors.hpp"

namespace stabmd {

namespace {

constexpr const char* kFormatVersion = "1";

// Splits a comment line into key=value tokens; quoted values may hold
// spaces.
std::map<std::string, std::string> parse_comment(const std::string& line) {
  std::map<std::string, std::string> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && std::isspace(line[i])) ++i;
    if (i >= line.size()) break;
    const std::size_t eq = line.find('=', i);
    if (eq == std::string::npos)
      throw ValidationError("malformed frame comment: " + line);
    const std::string key = line.substr(i, eq - i);
    std::string value;
    i = eq + 1;
    if (i < line.size() && line[i] == '"') {
      const std::size_t close = line.find('"', i + 1);
      if (close == std::string::npos)
        throw ValidationError("unterminated quote in frame comment");
      value = line.substr(i + 1, close - i - 1);
      i = close + 1;
    } else {
      std::size_t end = i;
      while (end < line.size() && !std::isspace(line[end])) ++end;
      value = line.substr(i, end - i);
      i = end;
    }
    out[key] = value;
  }
  return out;
}

double parse_double(const std::string& s, const char* what) {
  try {
    std::size_t pos = 0;
    const double x = std::stod(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(s);
    return x;
  } catch (const std::exception&) {
    throw ValidationError(std::string("bad number for ") + what + ": " + s);
  }
}

}  // namespace

std::string format_double(double x) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

void write_xyz(std::ostream& out, const SystemSpec& spec,
               const std::vector<XyzFrame>& frames,
               const std::map<std::string, std::string>& metadata) {
  bool first = true;
  for (const XyzFrame& f : frames) {
    validate_shapes(f.state, spec);
    out << spec.n_atoms << "\n";
    out << "time=" << format_double(f.state.time);
    if (f.energy) out << " energy=" << format_double(*f.energy);
    out << " props=pos:mom" << (f.forces ? ":frc" : "");
    if (spec.periodic())
      out << " box=\"" << format_double(spec.box->x()) << " "
          << format_double(spec.box->y()) << " "
          << format_double(spec.box->z()) << "\"";
    if (first) {
      out << " format_version=" << kFormatVersion;
      for (const auto& [k, v] : metadata) out << " " << k << "=" << v;
      first = false;
    }
    out << "\n";
    for (int i = 0; i < spec.n_atoms; ++i) {
      out << spec.species_symbols[spec.species[i]];
      for (int k = 0; k < 3; ++k)
        out << " " << format_double(f.state.positions(i, k));
      for (int k = 0; k < 3; ++k)
        out << " " << format_double(f.state.momenta(i, k));
      if (f.forces)
        for (int k = 0; k < 3; ++k)
          out << " " << format_double((*f.forces)(i, k));
      out << "\n";
    }
  }
}

XyzFile read_xyz(std::istream& in, const SystemSpec& spec) {
  XyzFile file;
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    int count = 0;
    try {
      count = std::stoi(line);
    } catch (const std::exception&) {
      throw ValidationError("expected an atom count line, got: " + line);
    }
    if (count != spec.n_atoms)
      throw ValidationError("frame atom count does not match the system");
    if (!std::getline(in, line))
      throw ValidationError("truncated frame: missing comment line");
    auto kv = parse_comment(line);

    if (first) {
      auto it = kv.find("format_version");
      if (it == kv.end() || it->second != kFormatVersion)
        throw ValidationError("unsupported trajectory format version");
    }

    XyzFrame frame;
    frame.state.time = kv.count("time") ? parse_double(kv["time"], "time") : 0;
    if (kv.count("energy"))
      frame.energy = parse_double(kv["energy"], "energy");
    const std::string props = kv.count("props") ? kv["props"] : "pos:mom";
    const bool has_forces = props == "pos:mom:frc";
    if (!has_forces && props != "pos:mom")
      throw ValidationError("unsupported column layout: " + props);
    if (spec.periodic() != (kv.count("box") > 0))
      throw ValidationError("periodicity of file and system disagree");
    if (kv.count("box")) {
      std::istringstream bs(kv["box"]);
      Vec3 box;
      if (!(bs >> box[0] >> box[1] >> box[2]))
        throw ValidationError("malformed box: " + kv["box"]);
      if ((box - *spec.box).cwiseAbs().maxCoeff() > 1e-9)
        throw ValidationError("file box does not match the system box");
    }
    if (first) {
      for (auto& [k, v] : kv)
        if (k != "time" && k != "energy" && k != "props" && k != "box" &&
            k != "format_version")
          file.metadata[k] = v;
      first = false;
    }

    frame.state.positions.resize(spec.n_atoms, 3);
    frame.state.momenta.resize(spec.n_atoms, 3);
    if (has_forces) frame.forces = MatX3(spec.n_atoms, 3);
    for (int i = 0; i < spec.n_atoms; ++i) {
      if (!std::getline(in, line))
        throw ValidationError("truncated frame: missing atom line");
      std::istringstream ls(line);
      std::string symbol;
      ls >> symbol;
      if (symbol != spec.species_symbols[spec.species[i]])
        throw ValidationError("atom symbol mismatch at index " +
                              std::to_string(i) + ": " + symbol);
      for (int k = 0; k < 3; ++k)
        if (!(ls >> frame.state.positions(i, k)))
          throw ValidationError("malformed atom line: " + line);
      for (int k = 0; k < 3; ++k)
        if (!(ls >> frame.state.momenta(i, k)))
          throw ValidationError("malformed atom line: " + line);
      if (has_forces)
        for (int k = 0; k < 3; ++k)
          if (!(ls >> (*frame.forces)(i, k)))
            throw ValidationError("malformed atom line: " + line);
    }
    file.frames.push_back(std::move(frame));
  }
  if (file.frames.empty()) throw ValidationError("empty trajectory file");
  return file;
}

void write_xyz_file(const std::string& path, const SystemSpec& spec,
                    const std::vector<XyzFrame>& frames,
                    const std::map<std::string, std::string>& metadata) {
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot write file: " + path);
  write_xyz(out, spec, frames, metadata);
}

XyzFile read_xyz_file(const std::string& path, const SystemSpec& spec) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open file: " + path);
  return read_xyz(in, spec);
}

std::vector<XyzFrame> dataset_to_frames(const Dataset& dataset) {
  std::vector<XyzFrame> frames;
  frames.reserve(dataset.frames.size());
  for (const Dataset::Frame& f : dataset.frames)
    frames.push_back(XyzFrame{f.state, f.energy, f.forces});
  return frames;
}

Dataset dataset_from_file(const std::string& path, const SystemSpec& spec) {
  const XyzFile file = read_xyz_file(path, spec);
  Dataset ds;
  ds.spec = spec;
  auto it = file.metadata.find("temperature");
  if (it == file.metadata.end())
    throw ValidationError("dataset file lacks a temperature field");
  ds.source_temperature = parse_double(it->second, "temperature");
  for (const XyzFrame& f : file.frames) {
    if (!f.energy || !f.forces)
      throw ValidationError("dataset frames need energy and force labels");
    ds.frames.push_back(Dataset::Frame{f.state, *f.energy, *f.forces});
  }
  return ds;
}

void write_dataset(const std::string& path, const Dataset& dataset,
                   const std::map<std::string, std::string>& extra) {
  std::map<std::string, std::string> meta = extra;
  meta["temperature"] = format_double(dataset.source_temperature);
  write_xyz_file(path, dataset.spec, dataset_to_frames(dataset), meta);
}

}  // namespace stabmd
