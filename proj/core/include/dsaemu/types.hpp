// Shared domain types: addresses, opcodes, flags, statuses, memory tiers.
#pragma once

#include <cstdint>
#include <string_view>

namespace dsaemu {

/// Handle into the emulated address space: (buffer_id, byte offset).
/// Buffer id 0 is the null buffer; ids are allocated from 1. The id
/// 0xFFFFFFFF names the completion-slot region.
struct Address {
    uint32_t buffer_id = 0;
    uint32_t offset = 0;

    constexpr bool is_null() const { return buffer_id == 0; }
    constexpr uint64_t pack() const {
        return (static_cast<uint64_t>(buffer_id) << 32) | offset;
    }
    static constexpr Address unpack(uint64_t v) {
        return Address{static_cast<uint32_t>(v >> 32), static_cast<uint32_t>(v)};
    }
    friend constexpr bool operator==(const Address&, const Address&) = default;
};

inline constexpr uint32_t kCompletionRegionId = 0xFFFFFFFFu;

/// The ten data-streaming operations plus the batch meta-opcode.
enum class Opcode : uint8_t {
    none = 0,
    mem_copy = 1,
    dualcast = 2,
    mem_fill = 3,
    mem_compare = 4,
    compare_pattern = 5,
    crc_gen = 6,
    dif = 7,
    delta_create = 8,
    delta_apply = 9,
    cache_flush = 10,
    batch = 11,
};

constexpr bool is_data_opcode(Opcode op) {
    return op >= Opcode::mem_copy && op <= Opcode::cache_flush;
}

std::string_view to_string(Opcode op);

/// Descriptor flag bits (bits 0-3 of the descriptor flags word).
/// Bits 8-27 of the same word carry the 20-bit client id; all other
/// bits are reserved and must be zero.
enum DescriptorFlag : uint32_t {
    kFlagRequestCompletion = 1u << 0,
    kFlagCacheControl = 1u << 1,  // 1 = steer destination writes to LLC
    kFlagFence = 1u << 2,         // within a batch: wait for prior sub-descriptors
    kFlagCheckResult = 1u << 3,   // compare ops report mismatch as an error status
};

inline constexpr uint32_t kFlagMask = 0xFu;
inline constexpr uint32_t kClientIdShift = 8;
inline constexpr uint32_t kClientIdMask = 0xFFFFFu;

enum class CompletionStatus : uint8_t {
    none = 0,
    success = 1,
    partial_page_fault = 2,
    invalid_descriptor = 3,
    compare_mismatch = 4,
    dif_error = 5,
    delta_overflow = 6,
};

std::string_view to_string(CompletionStatus s);

/// Memory tiers with distinct bandwidth/latency characteristics.
enum class MemTier : uint8_t {
    local_dram = 0,
    remote_dram = 1,
    cxl = 2,
    llc = 3,
};

inline constexpr int kNumTiers = 4;

std::string_view to_string(MemTier t);
bool tier_from_string(std::string_view name, MemTier& out);

}  // namespace dsaemu
