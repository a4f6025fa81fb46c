// SPDX-License-Identifier: Apache-2.0
#include "triage/nn/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <map>

#include "triage/error.hpp"

namespace triage::nn {

namespace {

template <typename T>
void put(std::ostream& out, T value) {
  static_assert(sizeof(T) == 4 || sizeof(T) == 8);
  using U = std::conditional_t<sizeof(T) == 4, std::uint32_t, std::uint64_t>;
  const U bits = std::bit_cast<U>(value);
  char bytes[sizeof(T)];
  for (std::size_t i = 0; i < sizeof(T); ++i) bytes[i] = static_cast<char>((bits >> (8 * i)) & 0xFF);
  out.write(bytes, sizeof(T));
}

template <typename T>
T get(std::istream& in) {
  using U = std::conditional_t<sizeof(T) == 4, std::uint32_t, std::uint64_t>;
  unsigned char bytes[sizeof(T)];
  if (!in.read(reinterpret_cast<char*>(bytes), sizeof(T))) throw Error("checkpoint truncated");
  U bits = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) bits |= static_cast<U>(bytes[i]) << (8 * i);
  return std::bit_cast<T>(bits);
}

}  // namespace

void write_checkpoint(std::ostream& out, std::span<const Parameter* const> params) {
  out.write(kCheckpointMagic, 4);
  put<std::uint32_t>(out, kCheckpointVersion);
  put<std::uint32_t>(out, static_cast<std::uint32_t>(params.size()));
  for (const auto* p : params) {
    put<std::uint32_t>(out, static_cast<std::uint32_t>(p->name.size()));
    out.write(p->name.data(), static_cast<std::streamsize>(p->name.size()));
    put<std::uint32_t>(out, static_cast<std::uint32_t>(p->value.rank()));
    for (std::size_t d : p->value.shape()) put<std::uint64_t>(out, d);
    for (double v : p->value.data()) put<double>(out, v);
  }
  if (!out) throw Error("failed writing checkpoint");
}

std::vector<NamedTensor> read_checkpoint(std::istream& in) {
  char magic[4];
  if (!in.read(magic, 4) || std::memcmp(magic, kCheckpointMagic, 4) != 0) {
    throw Error("not a TBNK checkpoint");
  }
  if (const auto version = get<std::uint32_t>(in); version != kCheckpointVersion) {
    throw Error("unsupported checkpoint version " + std::to_string(version));
  }
  const auto count = get<std::uint32_t>(in);
  std::vector<NamedTensor> out;
  out.reserve(count);
  for (std::uint32_t i = 0; i < count; ++i) {
    const auto name_len = get<std::uint32_t>(in);
    if (name_len > (1u << 16)) throw Error("checkpoint name too long");
    std::string name(name_len, '\0');
    if (!in.read(name.data(), name_len)) throw Error("checkpoint truncated");
    const auto rank = get<std::uint32_t>(in);
    if (rank > 8) throw Error("checkpoint rank too large");
    Shape shape(rank);
    for (auto& d : shape) d = static_cast<std::size_t>(get<std::uint64_t>(in));
    Tensor t(shape);
    for (double& v : t.data()) v = get<double>(in);
    out.push_back({std::move(name), std::move(t)});
  }
  return out;
}

void save_checkpoint(const std::filesystem::path& path, std::span<const Parameter* const> params) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  write_checkpoint(out, params);
}

std::vector<NamedTensor> load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  return read_checkpoint(in);
}

void restore_parameters(std::span<Parameter* const> params, const std::vector<NamedTensor>& stored) {
  std::map<std::string, const Tensor*> by_name;
  for (const auto& s : stored) by_name[s.name] = &s.tensor;
  for (auto* p : params) {
    auto it = by_name.find(p->name);
    if (it == by_name.end()) throw Error("checkpoint lacks parameter " + p->name);
    require_shape(*it->second, p->value.shape(), p->name.c_str());
    p->value = *it->second;
    p->zero_grad();
  }
}

}  // namespace triage::nn
