//
// Project UniMoMo - Copyright 2026 UniMoMo Developers.
// SPDX-License-Identifier: Apache-2.0
//

#include <cstdint>
#include <cstring>

#include "unimomo/errors.hpp"
#include "unimomo/molio.hpp"

namespace unimomo::molio {
namespace {

constexpr char kMagic[8] = {'U', 'N', 'I', 'M', 'O', 'M', 'O', '1'};
constexpr std::uint32_t kFormatVersion = 1;

std::uint64_t fnv1a64(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i)
    out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_u64(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i)
    out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_f64(std::string& out, double v) {
  std::uint64_t bits;
  std::memcpy(&bits, &v, sizeof bits);
  put_u64(out, bits);
}

class Reader {
 public:
  Reader(const std::string& bytes, const std::string& context)
      : bytes_(bytes), context_(context) {}

  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i)
      v |= static_cast<std::uint32_t>(
               static_cast<unsigned char>(bytes_[pos_ + i]))
           << (8 * i);
    pos_ += 4;
    return v;
  }
  std::uint64_t u64() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i)
      v |= static_cast<std::uint64_t>(
               static_cast<unsigned char>(bytes_[pos_ + i]))
           << (8 * i);
    pos_ += 8;
    return v;
  }
  double f64() {
    const std::uint64_t bits = u64();
    double v;
    std::memcpy(&v, &bits, sizeof v);
    return v;
  }
  std::string str(std::size_t n) {
    need(n);
    std::string s = bytes_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  std::size_t pos() const { return pos_; }

 private:
  void need(std::size_t n) {
    if (pos_ + n > bytes_.size())
      throw DataError("checkpoint truncated: " + context_);
  }
  const std::string& bytes_;
  std::string context_;
  std::size_t pos_ = 0;
};

}  // namespace

void save_checkpoint(const std::map<std::string, Tensor>& tensors,
                     const std::filesystem::path& path) {
  std::string out(kMagic, sizeof kMagic);
  put_u32(out, kFormatVersion);
  put_u32(out, static_cast<std::uint32_t>(tensors.size()));
  for (const auto& [name, t] : tensors) {  // std::map: deterministic order
    put_u32(out, static_cast<std::uint32_t>(name.size()));
    out += name;
    put_u32(out, static_cast<std::uint32_t>(t.rows()));
    put_u32(out, static_cast<std::uint32_t>(t.cols()));
    for (double v : t.vec())
      put_f64(out, v);
  }
  put_u64(out, fnv1a64(out));
  write_file(path, out);
}

std::map<std::string, Tensor> load_checkpoint(
    const std::filesystem::path& path) {
  const std::string bytes = read_file(path);
  const std::string context = path.string();
  if (bytes.size() < sizeof kMagic + 8 ||
      std::memcmp(bytes.data(), kMagic, sizeof kMagic) != 0)
    throw DataError("not a checkpoint file (bad magic): " + context);
  const std::string payload = bytes.substr(0, bytes.size() - 8);
  Reader tail(bytes.substr(bytes.size() - 8), context);
  if (fnv1a64(payload) != tail.u64())
    throw DataError("checkpoint checksum mismatch: " + context);

  Reader r(payload, context);
  r.str(sizeof kMagic);  // skip magic
  const std::uint32_t version = r.u32();
  if (version != kFormatVersion)
    throw DataError("incompatible checkpoint format version " +
                    std::to_string(version) + " (expected " +
                    std::to_string(kFormatVersion) + "): " + context);
  const std::uint32_t count = r.u32();
  std::map<std::string, Tensor> tensors;
  for (std::uint32_t i = 0; i < count; ++i) {
    const std::uint32_t name_len = r.u32();
    const std::string name = r.str(name_len);
    const std::uint32_t rows = r.u32();
    const std::uint32_t cols = r.u32();
    Tensor t(rows, cols);
    for (double& v : t.vec())
      v = r.f64();
    if (!tensors.emplace(name, std::move(t)).second)
      throw DataError("duplicate tensor name in checkpoint: " + name);
  }
  if (r.pos() != payload.size())
    throw DataError("trailing bytes in checkpoint: " + context);
  return tensors;
}

}  // namespace unimomo::molio
