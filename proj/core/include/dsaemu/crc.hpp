// CRC primitives: CRC-32C (Castagnoli, reflected) and CRC-16/T10-DIF.
#pragma once

#include <cstddef>
#include <cstdint>
#include <span>

namespace dsaemu {

/// CRC-32C over `data`, seeded with a previous CRC value (0 for a fresh
/// computation). Internally the state is seed XOR 0xFFFFFFFF with the
/// reflected polynomial 0x82F63B78 and a final XOR of 0xFFFFFFFF, so
/// crc32c(crc32c(0, a), b) == crc32c(0, a || b).
uint32_t crc32c(uint32_t seed, std::span<const std::byte> data);

/// CRC-16/T10-DIF: polynomial 0x8BB7, init 0, not reflected, no final XOR.
/// Seeded form for incremental use; guard tags start from 0.
uint16_t crc16_t10dif(uint16_t seed, std::span<const std::byte> data);

}  // namespace dsaemu
