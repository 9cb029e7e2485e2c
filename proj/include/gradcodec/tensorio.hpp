#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "gradcodec/tensor.hpp"

namespace gradcodec::io {

// Tensor files: magic "GRD1", u32 version (=1), u64 element count, raw
// little-endian float32 payload.  An optional sidecar "<path>.json" carries
// layer_id / metadata.  NaN and infinities are rejected on load.
TensorDump read_tensor(const std::filesystem::path& path);
void write_tensor(const TensorDump& dump, const std::filesystem::path& path);

// Bit masks: magic "MSK1", u32 version (=1), u64 bit count, packed bits
// (most significant bit first within each byte).
ZeroMask read_mask(const std::filesystem::path& path);
void write_mask(const ZeroMask& mask, const std::filesystem::path& path);

// Writes content to a temporary file in the destination directory and
// renames it into place; nothing is left behind on failure.
void atomic_write(const std::filesystem::path& path, const std::string& content);

}  // namespace gradcodec::io
