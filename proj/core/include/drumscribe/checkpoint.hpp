#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "drumscribe/tensor.hpp"

namespace drumscribe {

constexpr uint8_t kArchVit = 1;
constexpr uint8_t kArchCnn = 2;
constexpr uint8_t kArchRnn = 3;

/// Serialized model state: architecture id, a key=value configuration blob,
/// and the parameter tensors in declaration order. The DRTR1 encoding is
/// little-endian: magic "DRTR", u8 version, u8 arch id, u32 config length +
/// UTF-8 key=value lines, u32 tensor count, then per tensor u16 name length,
/// name, u8 rank, u32 dims, float32 data.
struct Checkpoint {
    uint8_t arch_id = 0;
    std::map<std::string, std::string> config;  // sorted => deterministic bytes
    std::vector<std::pair<std::string, Tensor<float>>> tensors;
};

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace drumscribe
