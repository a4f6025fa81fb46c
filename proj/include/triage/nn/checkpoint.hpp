// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "triage/nn/tensor.hpp"

namespace triage::nn {

inline constexpr char kCheckpointMagic[4] = {'T', 'B', 'N', 'K'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

struct NamedTensor {
  std::string name;
  Tensor tensor;
};

/// Binary layout, all integers and floats little-endian:
///   "TBNK" | version u32 | count u32 |
///   per tensor: name length u32 | name bytes | rank u32 | dims u64[rank] | f64[size]
void write_checkpoint(std::ostream& out, std::span<const Parameter* const> params);
std::vector<NamedTensor> read_checkpoint(std::istream& in);

void save_checkpoint(const std::filesystem::path& path, std::span<const Parameter* const> params);
std::vector<NamedTensor> load_checkpoint(const std::filesystem::path& path);

/// Copies stored values into `params` by name; every parameter must be
/// present with a matching shape.
void restore_parameters(std::span<Parameter* const> params, const std::vector<NamedTensor>& stored);

}  // namespace triage::nn
