#include "stabmd/checkpoint.hpp"

#include <array>
#include <bit>
#include <cstring>
#include <fstream>

#include "stabmd/errors.hpp"

namespace stabmd {

namespace {

constexpr std::array<char, 8> kMagic = {'S', 'M', 'D', 'C', 'K', 'P', 'T', '1'};
constexpr std::uint32_t kVersion = 1;

void put_u32(std::string& buf, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) buf.push_back(static_cast<char>(v >> (8 * i)));
}

void put_u64(std::string& buf, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) buf.push_back(static_cast<char>(v >> (8 * i)));
}

void put_f64(std::string& buf, double x) {
  put_u64(buf, std::bit_cast<std::uint64_t>(x));
}

class Reader {
 public:
  Reader(const std::string& data) : data_(data) {}

  std::uint32_t u32() {
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= std::uint32_t(byte()) << (8 * i);
    return v;
  }
  std::uint64_t u64() {
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= std::uint64_t(byte()) << (8 * i);
    return v;
  }
  double f64() { return std::bit_cast<double>(u64()); }
  std::string bytes(std::size_t n) {
    if (pos_ + n > data_.size())
      throw ValidationError("truncated checkpoint file");
    std::string out = data_.substr(pos_, n);
    pos_ += n;
    return out;
  }
  std::size_t pos() const { return pos_; }

 private:
  unsigned char byte() {
    if (pos_ >= data_.size())
      throw ValidationError("truncated checkpoint file");
    return static_cast<unsigned char>(data_[pos_++]);
  }
  const std::string& data_;
  std::size_t pos_ = 0;
};

}  // namespace

std::uint32_t crc32(const unsigned char* data, std::size_t size) {
  static const auto table = [] {
    std::array<std::uint32_t, 256> t{};
    for (std::uint32_t i = 0; i < 256; ++i) {
      std::uint32_t c = i;
      for (int k = 0; k < 8; ++k)
        c = (c & 1) ? 0xEDB88320u ^ (c >> 1) : c >> 1;
      t[i] = c;
    }
    return t;
  }();
  std::uint32_t c = 0xFFFFFFFFu;
  for (std::size_t i = 0; i < size; ++i)
    c = table[(c ^ data[i]) & 0xFFu] ^ (c >> 8);
  return c ^ 0xFFFFFFFFu;
}

void save_checkpoint(const std::string& path, const Checkpoint& ckpt) {
  if (ckpt.params.size() != ckpt.arch.param_count())
    throw ValidationError("checkpoint parameter length mismatch");
  if (static_cast<int>(ckpt.species_symbols.size()) != ckpt.arch.n_species)
    throw ValidationError("checkpoint species map length mismatch");

  std::string buf(kMagic.begin(), kMagic.end());
  put_u32(buf, kVersion);
  put_u32(buf, static_cast<std::uint32_t>(ckpt.arch.n_species));
  for (const std::string& s : ckpt.species_symbols) {
    put_u32(buf, static_cast<std::uint32_t>(s.size()));
    buf += s;
  }
  put_u32(buf, static_cast<std::uint32_t>(ckpt.arch.n_basis));
  put_u32(buf, static_cast<std::uint32_t>(ckpt.arch.hidden));
  put_f64(buf, ckpt.arch.r_max);
  put_u64(buf, static_cast<std::uint64_t>(ckpt.params.size()));
  for (int i = 0; i < ckpt.params.size(); ++i) put_f64(buf, ckpt.params[i]);
  put_u32(buf, static_cast<std::uint32_t>(ckpt.epoch));
  put_f64(buf, ckpt.learning_rate);
  put_u32(buf, crc32(reinterpret_cast<const unsigned char*>(buf.data()),
                     buf.size()));

  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError("cannot write checkpoint: " + path);
  out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open checkpoint: " + path);
  std::string data((std::istreambuf_iterator<char>(in)),
                   std::istreambuf_iterator<char>());
  if (data.size() < kMagic.size() + 8)
    throw ValidationError("checkpoint file too small");

  Reader r(data);
  const std::string magic = r.bytes(kMagic.size());
  if (!std::equal(magic.begin(), magic.end(), kMagic.begin()))
    throw ValidationError("not a checkpoint file");
  const std::uint32_t version = r.u32();
  if (version != kVersion)
    throw ValidationError("unsupported checkpoint version " +
                          std::to_string(version));

  Checkpoint ckpt;
  const std::uint32_t n_species = r.u32();
  if (n_species == 0 || n_species > 128)
    throw ValidationError("implausible species count in checkpoint");
  ckpt.arch.n_species = static_cast<int>(n_species);
  for (std::uint32_t i = 0; i < n_species; ++i) {
    const std::uint32_t len = r.u32();
    if (len > 16) throw ValidationError("implausible species symbol length");
    ckpt.species_symbols.push_back(r.bytes(len));
  }
  ckpt.arch.n_basis = static_cast<int>(r.u32());
  ckpt.arch.hidden = static_cast<int>(r.u32());
  ckpt.arch.r_max = r.f64();
  const std::uint64_t p = r.u64();
  if (p != static_cast<std::uint64_t>(ckpt.arch.param_count()))
    throw ValidationError("parameter count does not match architecture");
  ckpt.params.resize(static_cast<int>(p));
  for (std::uint64_t i = 0; i < p; ++i)
    ckpt.params[static_cast<int>(i)] = r.f64();
  ckpt.epoch = static_cast<int>(r.u32());
  ckpt.learning_rate = r.f64();

  const std::size_t payload = r.pos();
  const std::uint32_t expect = r.u32();
  if (r.pos() != data.size())
    throw ValidationError("trailing bytes in checkpoint file");
  const std::uint32_t actual =
      crc32(reinterpret_cast<const unsigned char*>(data.data()), payload);
  if (expect != actual)
    throw ValidationError("checkpoint checksum mismatch (corrupt file)");
  return ckpt;
}

}  // namespace stabmd
