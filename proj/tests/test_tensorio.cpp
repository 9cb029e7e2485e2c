#include <bit>
#include <cstdint>
#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "gradcodec/rng.hpp"
#include "gradcodec/tensorio.hpp"

using namespace gradcodec;
namespace fs = std::filesystem;

namespace {

fs::path tmp_dir() {
    auto d = fs::temp_directory_path() / "gradcodec_io_test";
    fs::create_directories(d);
    return d;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace

TEST_CASE("tensor write/read round trip") {
    auto path = tmp_dir() / "t3.grd";
    TensorDump d;
    d.values = {1.0f, -2.0f, 0.0f};
    io::write_tensor(d, path);
    auto back = io::read_tensor(path);
    REQUIRE(back.element_count() == 3);
    CHECK(back.values[0] == 1.0f);
    CHECK(back.values[1] == -2.0f);
    CHECK(back.values[2] == 0.0f);
}

TEST_CASE("truncated payload is rejected") {
    auto path = tmp_dir() / "short.grd";
    TensorDump d;
    d.values = {1.0f, 2.0f, 3.0f, 4.0f};
    io::write_tensor(d, path);
    auto data = slurp(path);
    data.resize(data.size() - 4);  // header still says 4 elements
    std::ofstream(path, std::ios::binary).write(data.data(), static_cast<std::streamsize>(data.size()));
    CHECK_THROWS_WITH_AS(io::read_tensor(path), doctest::Contains("truncated"), std::runtime_error);
}

TEST_CASE("bad magic is rejected") {
    auto path = tmp_dir() / "bad.grd";
    std::ofstream(path, std::ios::binary) << "NOPExxxxxxxxxxxxxxxx";
    CHECK_THROWS_WITH_AS(io::read_tensor(path), doctest::Contains("magic"), std::runtime_error);
}

TEST_CASE("non-finite values are rejected with the offending index") {
    auto path = tmp_dir() / "nan.grd";
    TensorDump d;
    d.values = {1.0f, 2.0f, 3.0f};
    io::write_tensor(d, path);
    auto data = slurp(path);
    const std::uint32_t inf = 0x7f800000u;
    data[16 + 4] = static_cast<char>(inf & 0xff);
    data[17 + 4] = static_cast<char>((inf >> 8) & 0xff);
    data[18 + 4] = static_cast<char>((inf >> 16) & 0xff);
    data[19 + 4] = static_cast<char>((inf >> 24) & 0xff);
    std::ofstream(path, std::ios::binary).write(data.data(), static_cast<std::streamsize>(data.size()));
    CHECK_THROWS_WITH_AS(io::read_tensor(path), doctest::Contains("index 1"), std::runtime_error);
}

TEST_CASE("empty tensor round trips") {
    auto path = tmp_dir() / "empty.grd";
    io::write_tensor(TensorDump{}, path);
    CHECK(io::read_tensor(path).element_count() == 0);
}

TEST_CASE("subnormal float32 payload is preserved bit-exactly") {
    auto path = tmp_dir() / "sub.grd";
    TensorDump d;
    d.values = {std::bit_cast<float>(std::uint32_t{0x00000001}),
                std::bit_cast<float>(std::uint32_t{0x807fffff})};
    io::write_tensor(d, path);
    auto back = io::read_tensor(path);
    CHECK(std::bit_cast<std::uint32_t>(back.values[0]) == 0x00000001u);
    CHECK(std::bit_cast<std::uint32_t>(back.values[1]) == 0x807fffffu);
}

TEST_CASE("large random tensor: write(read(file)) is byte-identical") {
    auto p1 = tmp_dir() / "big1.grd";
    auto p2 = tmp_dir() / "big2.grd";
    TensorDump d;
    rng::Counter r(99);
    d.values.resize(1000000);
    for (std::size_t i = 0; i < d.values.size(); ++i)
        d.values[i] = static_cast<float>(r.normal(i) * 3.0);
    io::write_tensor(d, p1);
    io::write_tensor(io::read_tensor(p1), p2);
    CHECK(slurp(p1) == slurp(p2));
}

TEST_CASE("sidecar carries layer id and metadata") {
    auto path = tmp_dir() / "meta.grd";
    TensorDump d;
    d.values = {1.0f};
    d.layer_id = "conv3";
    d.metadata["mask"] = "conv3.msk";
    io::write_tensor(d, path);
    auto back = io::read_tensor(path);
    CHECK(back.layer_id == "conv3");
    CHECK(back.metadata.at("mask") == "conv3.msk");
}

TEST_CASE("mask round trip preserves every bit") {
    auto path = tmp_dir() / "m.msk";
    ZeroMask m;
    rng::Counter r(5);
    m.bits.resize(1003);
    for (std::size_t i = 0; i < m.bits.size(); ++i) m.bits[i] = r.bits(i) & 1;
    io::write_mask(m, path);
    auto back = io::read_mask(path);
    REQUIRE(back.size() == m.size());
    for (std::size_t i = 0; i < m.bits.size(); ++i) REQUIRE(back.bits[i] == m.bits[i]);
}

TEST_CASE("failed writes leave no partial file behind") {
    auto path = tmp_dir() / "no_such_dir" / "x.grd";
    TensorDump d;
    d.values = {1.0f};
    CHECK_THROWS(io::write_tensor(d, path));
    CHECK(!fs::exists(path));
}
