// Independent reference implementations used as test oracles. These stay
// bit-level and table-free on purpose so they share nothing with the
// library implementations they check.
#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <vector>

namespace oracle {

/// CRC-32C computed bit by bit (reflected polynomial 0x82F63B78,
/// init/final XOR 0xFFFFFFFF).
inline uint32_t crc32c_bitwise(uint32_t seed, std::span<const std::byte> data) {
    uint32_t crc = seed ^ 0xFFFFFFFFu;
    for (std::byte b : data) {
        crc ^= static_cast<uint8_t>(b);
        for (int i = 0; i < 8; ++i)
            crc = (crc & 1) ? (crc >> 1) ^ 0x82F63B78u : crc >> 1;
    }
    return crc ^ 0xFFFFFFFFu;
}

/// CRC-16/T10-DIF computed bit by bit (polynomial 0x8BB7, init 0,
/// not reflected, no final XOR).
inline uint16_t crc16_t10_bitwise(std::span<const std::byte> data) {
    uint16_t crc = 0;
    for (std::byte b : data) {
        crc ^= static_cast<uint16_t>(static_cast<uint16_t>(static_cast<uint8_t>(b)) << 8);
        for (int i = 0; i < 8; ++i)
            crc = (crc & 0x8000) ? static_cast<uint16_t>((crc << 1) ^ 0x8BB7)
                                 : static_cast<uint16_t>(crc << 1);
    }
    return crc;
}

inline std::vector<std::byte> random_bytes(std::mt19937_64& rng, size_t n) {
    std::vector<std::byte> v(n);
    std::uniform_int_distribution<int> dist(0, 255);
    for (auto& b : v) b = static_cast<std::byte>(dist(rng));
    return v;
}

inline std::vector<std::byte> from_string(std::string_view s) {
    std::vector<std::byte> v(s.size());
    for (size_t i = 0; i < s.size(); ++i) v[i] = static_cast<std::byte>(s[i]);
    return v;
}

}  // namespace oracle
