#pragma once

#include <cmath>
#include <stdexcept>
#include <string>

namespace gradcodec {

// Emulated floating-point layout: 1 sign bit, `exponent_bits` exponent bits,
// `mantissa_bits` mantissa bits.  String form is "1-e-m".
struct FpFormat {
    int exponent_bits = 0;
    int mantissa_bits = 0;

    FpFormat() = default;
    FpFormat(int exp_bits, int mant_bits) : exponent_bits(exp_bits), mantissa_bits(mant_bits) {
        if (exp_bits < 0 || mant_bits < 0)
            throw std::invalid_argument("FpFormat: negative bit width");
    }

    int total_bits() const { return 1 + exponent_bits + mantissa_bits; }

    // Largest representable binary exponent.  exponent_bits == 0 leaves only E = 0.
    int e_max() const { return exponent_bits == 0 ? 0 : 1 << (exponent_bits - 1); }

    // Mantissa grid spacing within a binade.
    double delta() const { return std::ldexp(1.0, -mantissa_bits); }

    std::string str() const {
        return "1-" + std::to_string(exponent_bits) + "-" + std::to_string(mantissa_bits);
    }

    static FpFormat parse(const std::string& text) {
        int sign = 0, e = 0, m = 0;
        char extra = 0;
        if (std::sscanf(text.c_str(), "%d-%d-%d%c", &sign, &e, &m, &extra) != 3 || sign != 1 ||
            e < 0 || m < 0)
            throw std::invalid_argument("bad format string '" + text + "' (expected 1-<exp>-<mant>)");
        return FpFormat(e, m);
    }

    bool operator==(const FpFormat& o) const {
        return exponent_bits == o.exponent_bits && mantissa_bits == o.mantissa_bits;
    }
};

}  // namespace gradcodec
