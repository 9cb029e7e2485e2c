#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

namespace gradcodec::encode {

// Prefix code over the post-pruning alphabet:
//   0        -> "0"
//   +alpha   -> "100"
//   -alpha   -> "101"
//   anything -> "11" + payload_width bits
// Symbol classification is by exact 32-bit pattern; bits are packed most
// significant first and the final byte is zero-padded.
struct EncodedStream {
    float alpha = 0.0f;
    int payload_width = 32;  // 16 or 32
    std::uint64_t count = 0;
    std::uint64_t bit_length = 0;
    std::vector<std::uint8_t> bytes;

    std::uint64_t zero_count = 0;
    std::uint64_t alpha_count = 0;
    std::uint64_t passthrough_count = 0;
};

EncodedStream encode_stream(std::span<const float> values, float alpha, int payload_width = 32);

std::vector<float> decode_stream(const EncodedStream& stream);

// Average code length in bits per value for the given symbol counts.
double compression_ratio(std::uint64_t zeros, std::uint64_t alphas, std::uint64_t passthrough,
                         int payload_width);

// Stream files: magic "ENC1", alpha as 4 little-endian float bits, width as
// u8, element count as u64, packed payload.
void write_stream(const EncodedStream& stream, const std::filesystem::path& path);
EncodedStream read_stream(const std::filesystem::path& path);

}  // namespace gradcodec::encode
