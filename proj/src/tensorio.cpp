#include "gradcodec/tensorio.hpp"

#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <random>
#include <stdexcept>

#include "json.hpp"

namespace gradcodec::io {

namespace {

constexpr char kTensorMagic[4] = {'G', 'R', 'D', '1'};
constexpr char kMaskMagic[4] = {'M', 'S', 'K', '1'};

void put_u32(std::string& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_u64(std::string& out, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

std::uint32_t get_u32(const std::string& s, std::size_t off) {
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(static_cast<unsigned char>(s[off + i])) << (8 * i);
    return v;
}

std::uint64_t get_u64(const std::string& s, std::size_t off) {
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(static_cast<unsigned char>(s[off + i])) << (8 * i);
    return v;
}

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    std::string data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return data;
}

std::filesystem::path sidecar_path(const std::filesystem::path& path) {
    return std::filesystem::path(path.string() + ".json");
}

}  // namespace

void atomic_write(const std::filesystem::path& path, const std::string& content) {
    auto dir = path.parent_path();
    if (dir.empty()) dir = ".";
    std::random_device rd;
    auto tmp = dir / (path.filename().string() + ".tmp" + std::to_string(rd()));
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("cannot create " + tmp.string());
        out.write(content.data(), static_cast<std::streamsize>(content.size()));
        if (!out) {
            out.close();
            std::filesystem::remove(tmp);
            throw std::runtime_error("write failed for " + tmp.string());
        }
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) {
        std::filesystem::remove(tmp);
        throw std::runtime_error("rename failed for " + path.string() + ": " + ec.message());
    }
}

TensorDump read_tensor(const std::filesystem::path& path) {
    std::string data = read_file(path);
    if (data.size() < 16 || std::memcmp(data.data(), kTensorMagic, 4) != 0)
        throw std::runtime_error(path.string() + ": bad magic (not a GRD1 tensor file)");
    std::uint32_t version = get_u32(data, 4);
    if (version != 1)
        throw std::runtime_error(path.string() + ": unsupported version " + std::to_string(version));
    std::uint64_t count = get_u64(data, 8);
    std::uint64_t expected = 16 + 4 * count;
    if (data.size() < expected)
        throw std::runtime_error(path.string() + ": truncated payload (header says " +
                                 std::to_string(count) + " elements, file holds " +
                                 std::to_string((data.size() - 16) / 4) + ")");
    if (data.size() > expected)
        throw std::runtime_error(path.string() + ": trailing bytes after payload (count mismatch)");

    TensorDump dump;
    dump.values.resize(count);
    if (count > 0) std::memcpy(dump.values.data(), data.data() + 16, 4 * count);
    for (std::uint64_t i = 0; i < count; ++i) {
        float v = dump.values[i];
        if (std::isnan(v) || std::isinf(v))
            throw std::runtime_error(path.string() + ": non-finite value at index " + std::to_string(i));
    }

    auto side = sidecar_path(path);
    if (std::filesystem::exists(side)) {
        auto j = nlohmann::json::parse(read_file(side));
        dump.layer_id = j.value("layer_id", "");
        if (j.contains("metadata"))
            for (auto& [k, v] : j.at("metadata").items()) dump.metadata[k] = v.get<std::string>();
    }
    return dump;
}

void write_tensor(const TensorDump& dump, const std::filesystem::path& path) {
    std::string data;
    data.reserve(16 + 4 * dump.values.size());
    data.append(kTensorMagic, 4);
    put_u32(data, 1);
    put_u64(data, dump.values.size());
    std::size_t payload_off = data.size();
    data.resize(payload_off + 4 * dump.values.size());
    if (!dump.values.empty())
        std::memcpy(data.data() + payload_off, dump.values.data(), 4 * dump.values.size());
    atomic_write(path, data);

    if (!dump.layer_id.empty() || !dump.metadata.empty()) {
        nlohmann::json j;
        j["schema"] = "gradcodec.tensor_meta/1";
        j["layer_id"] = dump.layer_id;
        j["metadata"] = dump.metadata;
        atomic_write(sidecar_path(path), j.dump(2) + "\n");
    }
}

ZeroMask read_mask(const std::filesystem::path& path) {
    std::string data = read_file(path);
    if (data.size() < 16 || std::memcmp(data.data(), kMaskMagic, 4) != 0)
        throw std::runtime_error(path.string() + ": bad magic (not a MSK1 mask file)");
    if (get_u32(data, 4) != 1) throw std::runtime_error(path.string() + ": unsupported mask version");
    std::uint64_t count = get_u64(data, 8);
    std::uint64_t bytes = (count + 7) / 8;
    if (data.size() != 16 + bytes) throw std::runtime_error(path.string() + ": mask size mismatch");
    ZeroMask mask;
    mask.bits.resize(count);
    for (std::uint64_t i = 0; i < count; ++i) {
        unsigned char byte = static_cast<unsigned char>(data[16 + i / 8]);
        mask.bits[i] = (byte >> (7 - i % 8)) & 1u;
    }
    return mask;
}

void write_mask(const ZeroMask& mask, const std::filesystem::path& path) {
    std::string data;
    data.append(kMaskMagic, 4);
    put_u32(data, 1);
    put_u64(data, mask.bits.size());
    std::string packed((mask.bits.size() + 7) / 8, '\0');
    for (std::size_t i = 0; i < mask.bits.size(); ++i)
        if (mask.bits[i]) packed[i / 8] = static_cast<char>(packed[i / 8] | (1u << (7 - i % 8)));
    data += packed;
    atomic_write(path, data);
}

}  // namespace gradcodec::io
