#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "advdga/model.hpp"
#include "advdga/tensor.hpp"

namespace advdga {

// Little-endian binary tensor container, also used for adversarial
// embedding batches:
//   magic "DGAF" | version u16 | meta count u16 | meta (key,str i64 value)
//   | tensor count u32 | per tensor: name, rank u8, dims u32*, f32 payload
//   | CRC32 of all preceding bytes.
struct TensorFile {
  std::map<std::string, std::int64_t> meta;
  std::vector<std::pair<std::string, Tensor>> tensors;
};

inline constexpr std::uint16_t kTensorFileVersion = 1;

void save_tensor_file(const std::string& path, const TensorFile& file);
TensorFile load_tensor_file(const std::string& path);

void save_model(const Model& m, const std::string& path);
Model load_model(const std::string& path);

std::uint32_t crc32(const void* data, std::size_t len, std::uint32_t seed = 0);

}  // namespace advdga
