#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace gradcodec {

// In-memory gradient tensor: raw float32 payload plus optional identity.
struct TensorDump {
    std::vector<float> values;
    std::string layer_id;
    std::map<std::string, std::string> metadata;

    std::size_t element_count() const { return values.size(); }
};

// One bit per tensor element; marks entries whose upstream gradient was zero.
struct ZeroMask {
    std::vector<bool> bits;

    std::size_t size() const { return bits.size(); }
    std::uint64_t count_set() const {
        std::uint64_t c = 0;
        for (bool b : bits) c += b;
        return c;
    }
};

}  // namespace gradcodec
