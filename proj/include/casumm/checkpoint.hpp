#pragma once

#include <string>
#include <utility>
#include <vector>

#include "casumm/graph.hpp"

namespace casumm::nn {

// Binary checkpoint: 8-byte magic "CASUMMCK", u32 format version, u32 entry
// count, then per entry (u32 name length, name bytes, u32 ndim, u32 dims...,
// u64 value offset in the data block), then u64 data byte count and the raw
// 64-bit little-endian values. Round-trips values bit-exactly.
constexpr std::uint32_t kCheckpointVersion = 1;

void save_checkpoint(const std::string& path, const ParameterStore& params);

// Loads into an existing store; every stored entry must match a parameter
// with the same name and shape, and vice versa. Throws DataError otherwise.
void load_checkpoint(const std::string& path, ParameterStore& params);

// Reads raw (name, tensor) entries, e.g. to recover model configuration
// stored as a tensor before constructing the model.
std::vector<std::pair<std::string, Tensor>> read_checkpoint(const std::string& path);

}  // namespace casumm::nn
