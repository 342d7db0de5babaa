#pragma once

#include <filesystem>

#include "irattn/masks.hpp"
#include "irattn/tensor.hpp"

namespace irattn {

// Binary tensor container. Layout, all integers little-endian:
//   bytes 0-3   magic "IRAT"
//   bytes 4-7   format version (u32, currently 1)
//   byte  8     dtype (u8, 0 = float32)
//   byte  9     rank (u8)
//   then        one u64 extent per axis
//   then        row-major float32 payload
// Malformed input raises FormatError carrying the offending byte offset.
Tensor read_tensor(const std::filesystem::path& path);

// Writes atomically: the bytes land in a temporary sibling which is renamed
// over the destination.
void write_tensor(const Tensor& t, const std::filesystem::path& path);

// Occupancy grids travel as binary PGM (P5, maxval 255); a pixel at or
// above 128 counts as set.
Bitmap read_mask(const std::filesystem::path& path);
void write_mask(const Bitmap& mask, const std::filesystem::path& path);

}  // namespace irattn
