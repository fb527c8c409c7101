// Functional, bit-accurate implementations of the data-streaming operations.
// The device engine dispatches into these; they are also directly callable
// so tests can use them as oracles against the descriptor path.
#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "dsaemu/types.hpp"

namespace dsaemu::ops {

enum class OpStatus : uint8_t {
    ok = 0,
    invalid_descriptor,
    compare_mismatch,
    dif_error,
    delta_overflow,
};

CompletionStatus to_completion_status(OpStatus s);

/// Fixed fill pattern, 8 or 16 bytes.
struct FillParams {
    std::vector<std::byte> pattern;

    bool valid() const { return pattern.size() == 8 || pattern.size() == 16; }
    friend bool operator==(const FillParams&, const FillParams&) = default;
};

struct CrcParams {
    uint32_t seed = 0;
    friend bool operator==(const CrcParams&, const CrcParams&) = default;
};

enum class DifBlockSize : uint8_t { b512 = 0, b520 = 1, b4096 = 2, b4104 = 3 };
enum class DifMode : uint8_t { check = 0, insert = 1, strip = 2, update = 3 };

/// T10 protection-information parameters. Each protected block is the bare
/// block followed by an 8-byte footer: guard (CRC-16/T10-DIF over the bare
/// block, big-endian), application tag (big-endian), reference tag
/// (ref_tag_seed + block index, big-endian).
struct DifParams {
    DifBlockSize block_size = DifBlockSize::b512;
    DifMode mode = DifMode::check;
    uint16_t app_tag = 0;
    uint32_t ref_tag_seed = 0;

    uint32_t bare_block() const;       // 512 or 4096
    uint32_t protected_block() const;  // bare + 8
    friend bool operator==(const DifParams&, const DifParams&) = default;
};

inline constexpr size_t kDifFooterSize = 8;
inline constexpr size_t kDeltaChunkSize = 8;
inline constexpr size_t kDeltaEntrySize = 12;  // u32 chunk index + 8 data bytes

struct DeltaEntry {
    uint32_t chunk_offset = 0;  // index of an 8-byte chunk
    std::array<std::byte, kDeltaChunkSize> data{};

    friend bool operator==(const DeltaEntry&, const DeltaEntry&) = default;
};

/// Sparse difference record between two equal-length buffers.
/// Entries are strictly increasing in chunk_offset.
struct DeltaRecord {
    std::vector<DeltaEntry> entries;
    uint32_t max_size = 0;  // byte capacity the record was created under

    size_t byte_size() const { return entries.size() * kDeltaEntrySize; }
    std::vector<std::byte> serialize() const;  // 12 bytes per entry, LE index
    static std::optional<DeltaRecord> deserialize(std::span<const std::byte> bytes);
};

struct CompareResult {
    bool equal = true;
    size_t first_diff = 0;  // valid only when !equal
};

struct CrcResult {
    OpStatus status = OpStatus::ok;
    uint32_t crc = 0;
};

struct DifResult {
    OpStatus status = OpStatus::ok;
    size_t bytes_out = 0;
    uint32_t error_block = 0;  // first failing block index (check)
};

struct DeltaCreateResult {
    OpStatus status = OpStatus::ok;
    DeltaRecord record;
    size_t bytes_examined = 0;  // bytes fully processed before an overflow
};

// --- operations -----------------------------------------------------------

/// memmove semantics: dst gets the original contents of src even when the
/// spans overlap. Spans must be the same length.
size_t mem_copy(std::span<const std::byte> src, std::span<std::byte> dst);

/// Copy src to two disjoint destinations. Overlapping destinations are
/// rejected with invalid_descriptor.
OpStatus dualcast(std::span<const std::byte> src, std::span<std::byte> dst1,
                  std::span<std::byte> dst2);

/// dst[i] = pattern[i mod pattern.size()]; a trailing partial pattern is
/// written as its prefix.
size_t mem_fill(const FillParams& params, std::span<std::byte> dst);

CompareResult mem_compare(std::span<const std::byte> a, std::span<const std::byte> b);

/// Compare against the 8-byte pattern repeated; a trailing partial block is
/// compared against the pattern prefix.
CompareResult compare_pattern(std::span<const std::byte, 8> pattern,
                              std::span<const std::byte> a);

/// CRC-32C of src, optionally fused with a copy into dst (dst must then be
/// the same length as src).
CrcResult crc32_gen(const CrcParams& params, std::span<const std::byte> src,
                    std::span<std::byte> dst = {});

/// src is bare blocks; output is protected blocks (bare + footer).
DifResult dif_insert(const DifParams& params, std::span<const std::byte> src,
                     std::span<std::byte> dst);
/// src is protected blocks; verifies guard, app tag and reference tag.
DifResult dif_check(const DifParams& params, std::span<const std::byte> src);
/// src is protected blocks; dst gets the bare payload.
DifResult dif_strip(const DifParams& params, std::span<const std::byte> src,
                    std::span<std::byte> dst);
/// src is protected blocks; dst gets protected blocks with footers rewritten
/// from params (guard recomputed, new app/ref tags). The source footers are
/// not verified.
DifResult dif_update(const DifParams& params, std::span<const std::byte> src,
                     std::span<std::byte> dst);

/// Sizes required by the DIF modes for a given source length, or 0 when the
/// source length violates the block-multiple rule.
size_t dif_output_size(const DifParams& params, size_t src_len);

DeltaCreateResult delta_create(std::span<const std::byte> original,
                               std::span<const std::byte> modified, uint32_t max_size);

OpStatus delta_apply(std::span<const std::byte> original, const DeltaRecord& delta,
                     std::span<std::byte> dst);

/// Functional no-op on contents; bumps `counter` (when given) by the span
/// length and returns it. Timing is accounted by the device model.
size_t cache_flush(std::span<const std::byte> dst, uint64_t* counter = nullptr);

}  // namespace dsaemu::ops
