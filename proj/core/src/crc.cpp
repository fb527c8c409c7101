#include "dsaemu/crc.hpp"

#include <array>

namespace dsaemu {
namespace {

constexpr uint32_t kCrc32cPoly = 0x82F63B78u;  // reflected Castagnoli
constexpr uint16_t kCrc16T10Poly = 0x8BB7u;

std::array<uint32_t, 256> make_crc32c_table() {
    std::array<uint32_t, 256> table{};
    for (uint32_t i = 0; i < 256; ++i) {
        uint32_t crc = i;
        for (int bit = 0; bit < 8; ++bit)
            crc = (crc & 1) ? (crc >> 1) ^ kCrc32cPoly : crc >> 1;
        table[i] = crc;
    }
    return table;
}

std::array<uint16_t, 256> make_crc16_table() {
    std::array<uint16_t, 256> table{};
    for (uint32_t i = 0; i < 256; ++i) {
        uint16_t crc = static_cast<uint16_t>(i << 8);
        for (int bit = 0; bit < 8; ++bit)
            crc = (crc & 0x8000) ? static_cast<uint16_t>((crc << 1) ^ kCrc16T10Poly)
                                 : static_cast<uint16_t>(crc << 1);
        table[i] = crc;
    }
    return table;
}

const std::array<uint32_t, 256> kCrc32cTable = make_crc32c_table();
const std::array<uint16_t, 256> kCrc16Table = make_crc16_table();

}  // namespace

uint32_t crc32c(uint32_t seed, std::span<const std::byte> data) {
    uint32_t crc = seed ^ 0xFFFFFFFFu;
    for (std::byte b : data)
        crc = kCrc32cTable[(crc ^ static_cast<uint8_t>(b)) & 0xFF] ^ (crc >> 8);
    return crc ^ 0xFFFFFFFFu;
}

uint16_t crc16_t10dif(uint16_t seed, std::span<const std::byte> data) {
    uint16_t crc = seed;
    for (std::byte b : data)
        crc = static_cast<uint16_t>(kCrc16Table[((crc >> 8) ^ static_cast<uint8_t>(b)) & 0xFF] ^
                                    (crc << 8));
    return crc;
}

}  // namespace dsaemu
