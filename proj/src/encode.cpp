#include "gradcodec/encode.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <stdexcept>
#include <string>

#include "gradcodec/tensorio.hpp"

namespace gradcodec::encode {

namespace {

struct BitWriter {
    std::vector<std::uint8_t>& bytes;
    std::uint64_t bit_pos = 0;

    void push(std::uint32_t value, int nbits) {  // most significant bit first
        for (int i = nbits - 1; i >= 0; --i) {
            if (bit_pos % 8 == 0) bytes.push_back(0);
            if ((value >> i) & 1u) bytes.back() |= static_cast<std::uint8_t>(0x80u >> (bit_pos % 8));
            ++bit_pos;
        }
    }
};

struct BitReader {
    const std::vector<std::uint8_t>& bytes;
    std::uint64_t bit_pos = 0;

    std::uint32_t take(int nbits) {
        std::uint32_t v = 0;
        for (int i = 0; i < nbits; ++i) {
            std::uint64_t p = bit_pos + static_cast<std::uint64_t>(i);
            if (p >= 8 * bytes.size()) throw std::runtime_error("decode: truncated stream");
            v = (v << 1) | ((bytes[p / 8] >> (7 - p % 8)) & 1u);
        }
        bit_pos += static_cast<std::uint64_t>(nbits);
        return v;
    }
};

// float32 <-> IEEE binary16, round to nearest even.  Used for 16-bit
// payloads; encoding requires exact representability.
std::uint16_t f32_to_f16(float f) {
    std::uint32_t b = std::bit_cast<std::uint32_t>(f);
    std::uint16_t sign = static_cast<std::uint16_t>((b >> 16) & 0x8000u);
    int e = static_cast<int>((b >> 23) & 0xff) - 127;
    std::uint32_t mant = b & 0x7fffffu;
    if (e == 128) return static_cast<std::uint16_t>(sign | 0x7c00u | (mant ? 0x200u : 0u));
    if (e > 15) return static_cast<std::uint16_t>(sign | 0x7c00u);  // overflows to inf
    if (e >= -14) {
        std::uint32_t rounded = mant + 0xfffu + ((mant >> 13) & 1u);
        std::uint16_t h = static_cast<std::uint16_t>(((e + 15) << 10) + (rounded >> 13));
        return static_cast<std::uint16_t>(sign | h);
    }
    if (e >= -24) {  // subnormal half
        std::uint32_t full = mant | 0x800000u;
        int shift = -e - 14 + 13;
        std::uint32_t h = full >> shift;
        std::uint32_t rem = full & ((1u << shift) - 1u);
        std::uint32_t half = 1u << (shift - 1);
        if (rem > half || (rem == half && (h & 1u))) ++h;
        return static_cast<std::uint16_t>(sign | h);
    }
    return sign;
}

float f16_to_f32(std::uint16_t h) {
    std::uint32_t sign = static_cast<std::uint32_t>(h & 0x8000u) << 16;
    int e = (h >> 10) & 0x1f;
    std::uint32_t mant = h & 0x3ffu;
    std::uint32_t b;
    if (e == 0) {
        if (mant == 0) {
            b = sign;
        } else {
            int t = 31 - std::countl_zero(mant);  // msb position of the subnormal mantissa
            std::uint32_t rest = mant ^ (1u << t);
            b = sign | static_cast<std::uint32_t>(t - 24 + 127) << 23 | (rest << (23 - t));
        }
    } else if (e == 31) {
        b = sign | 0x7f800000u | (mant << 13);
    } else {
        b = sign | static_cast<std::uint32_t>(e - 15 + 127) << 23 | (mant << 13);
    }
    return std::bit_cast<float>(b);
}

}  // namespace

EncodedStream encode_stream(std::span<const float> values, float alpha, int payload_width) {
    if (!(alpha > 0.0f) || !std::isfinite(alpha))
        throw std::invalid_argument("encode_stream: alpha must be positive and finite");
    if (payload_width != 16 && payload_width != 32)
        throw std::invalid_argument("encode_stream: payload width must be 16 or 32");

    EncodedStream s;
    s.alpha = alpha;
    s.payload_width = payload_width;
    s.count = values.size();

    const std::uint32_t pos_bits = std::bit_cast<std::uint32_t>(alpha);
    const std::uint32_t neg_bits = pos_bits | 0x80000000u;
    BitWriter w{s.bytes};
    for (float v : values) {
        std::uint32_t b = std::bit_cast<std::uint32_t>(v);
        if (b == 0u) {
            w.push(0u, 1);
            s.zero_count++;
        } else if (b == pos_bits) {
            w.push(0b100u, 3);
            s.alpha_count++;
        } else if (b == neg_bits) {
            w.push(0b101u, 3);
            s.alpha_count++;
        } else {
            s.passthrough_count++;
            if (payload_width == 32) {
                w.push(0b11u, 2);
                w.push(b, 32);
            } else {
                std::uint16_t h = f32_to_f16(v);
                if (f16_to_f32(h) != v)
                    throw std::invalid_argument("encode_stream: value " + std::to_string(v) +
                                                " is not exactly representable at width 16");
                w.push(0b11u, 2);
                w.push(h, 16);
            }
        }
    }
    s.bit_length = w.bit_pos;
    return s;
}

std::vector<float> decode_stream(const EncodedStream& s) {
    if (s.bytes.size() != (s.bit_length + 7) / 8)
        throw std::runtime_error("decode: byte length disagrees with bit length");
    std::vector<float> out;
    out.reserve(s.count);
    BitReader r{s.bytes};
    const std::uint32_t pos_bits = std::bit_cast<std::uint32_t>(s.alpha);
    for (std::uint64_t i = 0; i < s.count; ++i) {
        if (r.take(1) == 0u) {
            out.push_back(0.0f);
            continue;
        }
        if (r.take(1) == 0u) {  // "10x": signed alpha
            std::uint32_t neg = r.take(1);
            out.push_back(std::bit_cast<float>(pos_bits | (neg << 31)));
            continue;
        }
        if (s.payload_width == 32)
            out.push_back(std::bit_cast<float>(r.take(32)));
        else
            out.push_back(f16_to_f32(static_cast<std::uint16_t>(r.take(16))));
    }
    if (r.bit_pos != s.bit_length) throw std::runtime_error("decode: bit length mismatch");
    // zero padding up to the final byte boundary
    for (std::uint64_t p = r.bit_pos; p < 8 * s.bytes.size(); ++p)
        if ((s.bytes[p / 8] >> (7 - p % 8)) & 1u)
            throw std::runtime_error("decode: nonzero padding after final code word");
    return out;
}

double compression_ratio(std::uint64_t zeros, std::uint64_t alphas, std::uint64_t passthrough,
                         int payload_width) {
    if (payload_width != 16 && payload_width != 32)
        throw std::invalid_argument("compression_ratio: payload width must be 16 or 32");
    std::uint64_t total = zeros + alphas + passthrough;
    if (total == 0) throw std::invalid_argument("compression_ratio: zero total count");
    double bits = static_cast<double>(zeros) + 3.0 * static_cast<double>(alphas) +
                  (2.0 + payload_width) * static_cast<double>(passthrough);
    return bits / static_cast<double>(total);
}

void write_stream(const EncodedStream& s, const std::filesystem::path& path) {
    std::string data;
    data.append("ENC1", 4);
    std::uint32_t ab = std::bit_cast<std::uint32_t>(s.alpha);
    for (int i = 0; i < 4; ++i) data.push_back(static_cast<char>((ab >> (8 * i)) & 0xff));
    data.push_back(static_cast<char>(s.payload_width));
    for (int i = 0; i < 8; ++i) data.push_back(static_cast<char>((s.count >> (8 * i)) & 0xff));
    data.append(reinterpret_cast<const char*>(s.bytes.data()), s.bytes.size());
    io::atomic_write(path, data);
}

EncodedStream read_stream(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    std::string data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (data.size() < 17 || std::memcmp(data.data(), "ENC1", 4) != 0)
        throw std::runtime_error(path.string() + ": bad magic (not an ENC1 stream)");
    EncodedStream s;
    std::uint32_t ab = 0;
    for (int i = 0; i < 4; ++i) ab |= static_cast<std::uint32_t>(static_cast<unsigned char>(data[4 + i])) << (8 * i);
    s.alpha = std::bit_cast<float>(ab);
    s.payload_width = static_cast<unsigned char>(data[8]);
    for (int i = 0; i < 8; ++i)
        s.count |= static_cast<std::uint64_t>(static_cast<unsigned char>(data[9 + i])) << (8 * i);
    s.bytes.assign(data.begin() + 17, data.end());
    // bit length is implied by the symbol stream; recover it by decoding counts
    if (s.payload_width != 16 && s.payload_width != 32)
        throw std::runtime_error(path.string() + ": bad payload width");
    BitReader r{s.bytes};
    for (std::uint64_t i = 0; i < s.count; ++i) {
        if (r.take(1) == 0u) { s.zero_count++; continue; }
        if (r.take(1) == 0u) { r.take(1); s.alpha_count++; continue; }
        r.take(s.payload_width);
        s.passthrough_count++;
    }
    s.bit_length = r.bit_pos;
    if (s.bytes.size() != (s.bit_length + 7) / 8)
        throw std::runtime_error(path.string() + ": trailing bytes after encoded payload");
    return s;
}

}  // namespace gradcodec::encode
