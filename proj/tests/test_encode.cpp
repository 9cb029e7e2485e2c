#include <bit>
#include <filesystem>
#include <fstream>
#include <vector>

#include "doctest.h"
#include "gradcodec/encode.hpp"
#include "gradcodec/mcsim.hpp"
#include "gradcodec/prune.hpp"

using namespace gradcodec;
using namespace gradcodec::encode;

TEST_CASE("the four-symbol example packs into one byte") {
    std::vector<float> x{0.0f, 0.0f, 2.5f, -2.5f};
    auto s = encode_stream(x, 2.5f, 32);
    CHECK(s.bit_length == 8);  // 0 0 100 101
    REQUIRE(s.bytes.size() == 1);
    CHECK(s.bytes[0] == 0x25);
    CHECK(s.zero_count == 2);
    CHECK(s.alpha_count == 2);
    CHECK(s.passthrough_count == 0);
    CHECK(decode_stream(s) == x);
}

TEST_CASE("an all-zero tensor costs one bit per element") {
    std::vector<float> x(1000, 0.0f);
    auto s = encode_stream(x, 1.0f, 32);
    CHECK(s.bit_length == 1000);
    CHECK(decode_stream(s) == x);
}

TEST_CASE("an empty tensor round trips through an empty stream") {
    std::vector<float> x;
    auto s = encode_stream(x, 1.0f, 32);
    CHECK(s.bit_length == 0);
    CHECK(decode_stream(s).empty());
}

TEST_CASE("pruned tensors round trip bit-exactly and honor the length formula") {
    mcsim::SimConfig cfg;
    cfg.sigma = 3.0;
    cfg.n = 100000;
    cfg.seed = 50;
    auto x = mcsim::sample_lognormal(cfg);
    for (double target : {0.8, 0.9}) {
        double alpha = prune::threshold_for_sparsity(target, 0.0, 3.0);
        auto pruned = prune::stochastic_prune(x, alpha, 51);
        auto s = encode_stream(pruned, static_cast<float>(alpha), 32);
        CHECK(s.bit_length == s.zero_count + 3 * s.alpha_count + 34 * s.passthrough_count);
        auto back = decode_stream(s);
        REQUIRE(back.size() == pruned.size());
        for (std::size_t i = 0; i < back.size(); ++i)
            REQUIRE(std::bit_cast<std::uint32_t>(back[i]) == std::bit_cast<std::uint32_t>(pruned[i]));
    }
}

TEST_CASE("negative zero is not folded into the zero symbol") {
    std::vector<float> x{-0.0f, 0.0f};
    auto s = encode_stream(x, 1.0f, 32);
    CHECK(s.zero_count == 1);
    CHECK(s.passthrough_count == 1);
    auto back = decode_stream(s);
    CHECK(std::bit_cast<std::uint32_t>(back[0]) == 0x80000000u);
    CHECK(std::bit_cast<std::uint32_t>(back[1]) == 0u);
}

TEST_CASE("16-bit payloads require exactly representable values") {
    std::vector<float> ok{0.0f, 1.5f, -0.25f, 3.0f};
    auto s = encode_stream(ok, 1.5f, 16);
    CHECK(s.bit_length == 1 + 3 + 18 + 18);
    CHECK(decode_stream(s) == ok);

    std::vector<float> bad{1.0000001f};
    CHECK_THROWS_WITH_AS(encode_stream(bad, 0.5f, 16), doctest::Contains("width 16"),
                         std::invalid_argument);
}

TEST_CASE("compression ratio arithmetic") {
    CHECK(compression_ratio(90, 8, 2, 32) == doctest::Approx(1.82).epsilon(1e-12));
    CHECK(compression_ratio(100, 0, 0, 32) == 1.0);
    CHECK_THROWS_AS(compression_ratio(0, 0, 0, 32), std::invalid_argument);
    CHECK_THROWS_AS(compression_ratio(1, 0, 0, 8), std::invalid_argument);
}

TEST_CASE("bits per value falls as zeros displace threshold hits") {
    double prev = 1e9;
    for (std::uint64_t zeros = 50; zeros <= 95; zeros += 5) {
        double bpv = compression_ratio(zeros, 98 - zeros, 2, 32);
        CHECK(bpv < prev);
        prev = bpv;
    }
}

TEST_CASE("alpha and width are validated") {
    std::vector<float> x{1.0f};
    CHECK_THROWS_AS(encode_stream(x, 0.0f, 32), std::invalid_argument);
    CHECK_THROWS_AS(encode_stream(x, -1.0f, 32), std::invalid_argument);
    CHECK_THROWS_AS(encode_stream(x, 1.0f, 24), std::invalid_argument);
}

TEST_CASE("malformed streams are rejected") {
    std::vector<float> x{0.0f, 7.25f, -7.25f, 1.5f};
    auto s = encode_stream(x, 7.25f, 32);

    auto truncated = s;
    truncated.bytes.pop_back();
    truncated.bit_length = 8 * truncated.bytes.size();
    CHECK_THROWS_WITH_AS(decode_stream(truncated), doctest::Contains("truncated"), std::runtime_error);

    auto padded = s;
    padded.bytes.back() |= 1;  // nonzero padding bit
    CHECK_THROWS_AS(decode_stream(padded), std::runtime_error);
}

TEST_CASE("stream files round trip") {
    auto dir = std::filesystem::temp_directory_path() / "gradcodec_enc_test";
    std::filesystem::create_directories(dir);
    auto path = dir / "s.enc";

    std::vector<float> x{0.0f, 2.0f, -2.0f, 123.456f, 0.0f};
    auto s = encode_stream(x, 2.0f, 32);
    write_stream(s, path);
    auto back = read_stream(path);
    CHECK(back.alpha == s.alpha);
    CHECK(back.payload_width == s.payload_width);
    CHECK(back.count == s.count);
    CHECK(back.bit_length == s.bit_length);
    CHECK(back.bytes == s.bytes);
    CHECK(decode_stream(back) == x);

    // trailing garbage in the file is detected
    {
        std::ofstream f(path, std::ios::binary | std::ios::app);
        f << "zz";
    }
    CHECK_THROWS_AS(read_stream(path), std::runtime_error);
}
