#include "dsaemu/data_ops.hpp"

#include <algorithm>
#include <cstring>

#include "dsaemu/crc.hpp"

namespace dsaemu::ops {

CompletionStatus to_completion_status(OpStatus s) {
    switch (s) {
        case OpStatus::ok: return CompletionStatus::success;
        case OpStatus::invalid_descriptor: return CompletionStatus::invalid_descriptor;
        case OpStatus::compare_mismatch: return CompletionStatus::compare_mismatch;
        case OpStatus::dif_error: return CompletionStatus::dif_error;
        case OpStatus::delta_overflow: return CompletionStatus::delta_overflow;
    }
    return CompletionStatus::invalid_descriptor;
}

uint32_t DifParams::bare_block() const {
    switch (block_size) {
        case DifBlockSize::b512:
        case DifBlockSize::b520: return 512;
        case DifBlockSize::b4096:
        case DifBlockSize::b4104: return 4096;
    }
    return 512;
}

uint32_t DifParams::protected_block() const { return bare_block() + kDifFooterSize; }

std::vector<std::byte> DeltaRecord::serialize() const {
    std::vector<std::byte> out(byte_size());
    std::byte* p = out.data();
    for (const DeltaEntry& e : entries) {
        uint32_t idx = e.chunk_offset;
        for (int i = 0; i < 4; ++i) *p++ = static_cast<std::byte>((idx >> (8 * i)) & 0xFF);
        std::memcpy(p, e.data.data(), kDeltaChunkSize);
        p += kDeltaChunkSize;
    }
    return out;
}

std::optional<DeltaRecord> DeltaRecord::deserialize(std::span<const std::byte> bytes) {
    if (bytes.size() % kDeltaEntrySize != 0) return std::nullopt;
    DeltaRecord rec;
    rec.max_size = static_cast<uint32_t>(bytes.size());
    const std::byte* p = bytes.data();
    uint32_t prev = 0;
    bool first = true;
    for (size_t n = 0; n < bytes.size() / kDeltaEntrySize; ++n) {
        DeltaEntry e;
        for (int i = 0; i < 4; ++i)
            e.chunk_offset |= static_cast<uint32_t>(static_cast<uint8_t>(p[i])) << (8 * i);
        std::memcpy(e.data.data(), p + 4, kDeltaChunkSize);
        p += kDeltaEntrySize;
        if (!first && e.chunk_offset <= prev) return std::nullopt;
        prev = e.chunk_offset;
        first = false;
        rec.entries.push_back(e);
    }
    return rec;
}

size_t mem_copy(std::span<const std::byte> src, std::span<std::byte> dst) {
    if (src.size() != dst.size()) return 0;
    if (!src.empty()) std::memmove(dst.data(), src.data(), src.size());
    return src.size();
}

namespace {
bool spans_overlap(std::span<const std::byte> a, std::span<const std::byte> b) {
    if (a.empty() || b.empty()) return false;
    const std::byte* a0 = a.data();
    const std::byte* b0 = b.data();
    return a0 < b0 + b.size() && b0 < a0 + a.size();
}
}  // namespace

OpStatus dualcast(std::span<const std::byte> src, std::span<std::byte> dst1,
                  std::span<std::byte> dst2) {
    if (src.size() != dst1.size() || src.size() != dst2.size())
        return OpStatus::invalid_descriptor;
    if (spans_overlap(dst1, dst2)) return OpStatus::invalid_descriptor;
    mem_copy(src, dst1);
    mem_copy(src, dst2);
    return OpStatus::ok;
}

size_t mem_fill(const FillParams& params, std::span<std::byte> dst) {
    const size_t n = params.pattern.size();
    for (size_t i = 0; i < dst.size(); ++i) dst[i] = params.pattern[i % n];
    return dst.size();
}

CompareResult mem_compare(std::span<const std::byte> a, std::span<const std::byte> b) {
    for (size_t i = 0; i < a.size(); ++i)
        if (a[i] != b[i]) return {false, i};
    return {true, 0};
}

CompareResult compare_pattern(std::span<const std::byte, 8> pattern,
                              std::span<const std::byte> a) {
    for (size_t i = 0; i < a.size(); ++i)
        if (a[i] != pattern[i % 8]) return {false, i};
    return {true, 0};
}

CrcResult crc32_gen(const CrcParams& params, std::span<const std::byte> src,
                    std::span<std::byte> dst) {
    if (!dst.empty() && dst.size() != src.size())
        return {OpStatus::invalid_descriptor, 0};
    if (!dst.empty()) mem_copy(src, dst);
    return {OpStatus::ok, crc32c(params.seed, src)};
}

namespace {
void write_footer(std::byte* p, uint16_t guard, uint16_t app_tag, uint32_t ref_tag) {
    p[0] = static_cast<std::byte>(guard >> 8);
    p[1] = static_cast<std::byte>(guard & 0xFF);
    p[2] = static_cast<std::byte>(app_tag >> 8);
    p[3] = static_cast<std::byte>(app_tag & 0xFF);
    p[4] = static_cast<std::byte>((ref_tag >> 24) & 0xFF);
    p[5] = static_cast<std::byte>((ref_tag >> 16) & 0xFF);
    p[6] = static_cast<std::byte>((ref_tag >> 8) & 0xFF);
    p[7] = static_cast<std::byte>(ref_tag & 0xFF);
}

uint16_t read_be16(const std::byte* p) {
    return static_cast<uint16_t>((static_cast<uint16_t>(p[0]) << 8) |
                                 static_cast<uint16_t>(p[1]));
}

uint32_t read_be32(const std::byte* p) {
    return (static_cast<uint32_t>(p[0]) << 24) | (static_cast<uint32_t>(p[1]) << 16) |
           (static_cast<uint32_t>(p[2]) << 8) | static_cast<uint32_t>(p[3]);
}
}  // namespace

size_t dif_output_size(const DifParams& params, size_t src_len) {
    const size_t bare = params.bare_block();
    const size_t prot = params.protected_block();
    switch (params.mode) {
        case DifMode::insert:
            return (src_len % bare == 0) ? (src_len / bare) * prot : 0;
        case DifMode::check:
            return src_len % prot == 0 ? src_len : 0;  // no output, size = validity marker
        case DifMode::strip:
            return (src_len % prot == 0) ? (src_len / prot) * bare : 0;
        case DifMode::update:
            return src_len % prot == 0 ? src_len : 0;
    }
    return 0;
}

DifResult dif_insert(const DifParams& params, std::span<const std::byte> src,
                     std::span<std::byte> dst) {
    const size_t bare = params.bare_block();
    const size_t prot = params.protected_block();
    if (src.size() % bare != 0) return {OpStatus::invalid_descriptor, 0, 0};
    const size_t blocks = src.size() / bare;
    if (dst.size() != blocks * prot) return {OpStatus::invalid_descriptor, 0, 0};
    for (size_t i = 0; i < blocks; ++i) {
        auto block = src.subspan(i * bare, bare);
        std::memcpy(dst.data() + i * prot, block.data(), bare);
        uint16_t guard = crc16_t10dif(0, block);
        write_footer(dst.data() + i * prot + bare, guard, params.app_tag,
                     params.ref_tag_seed + static_cast<uint32_t>(i));
    }
    return {OpStatus::ok, blocks * prot, 0};
}

DifResult dif_check(const DifParams& params, std::span<const std::byte> src) {
    const size_t bare = params.bare_block();
    const size_t prot = params.protected_block();
    if (src.size() % prot != 0) return {OpStatus::invalid_descriptor, 0, 0};
    const size_t blocks = src.size() / prot;
    for (size_t i = 0; i < blocks; ++i) {
        const std::byte* footer = src.data() + i * prot + bare;
        uint16_t guard = crc16_t10dif(0, src.subspan(i * prot, bare));
        if (read_be16(footer) != guard || read_be16(footer + 2) != params.app_tag ||
            read_be32(footer + 4) != params.ref_tag_seed + static_cast<uint32_t>(i))
            return {OpStatus::dif_error, i * prot, static_cast<uint32_t>(i)};
    }
    return {OpStatus::ok, src.size(), 0};
}

DifResult dif_strip(const DifParams& params, std::span<const std::byte> src,
                    std::span<std::byte> dst) {
    const size_t bare = params.bare_block();
    const size_t prot = params.protected_block();
    if (src.size() % prot != 0) return {OpStatus::invalid_descriptor, 0, 0};
    const size_t blocks = src.size() / prot;
    if (dst.size() != blocks * bare) return {OpStatus::invalid_descriptor, 0, 0};
    for (size_t i = 0; i < blocks; ++i)
        std::memcpy(dst.data() + i * bare, src.data() + i * prot, bare);
    return {OpStatus::ok, blocks * bare, 0};
}

DifResult dif_update(const DifParams& params, std::span<const std::byte> src,
                     std::span<std::byte> dst) {
    const size_t bare = params.bare_block();
    const size_t prot = params.protected_block();
    if (src.size() % prot != 0 || dst.size() != src.size())
        return {OpStatus::invalid_descriptor, 0, 0};
    const size_t blocks = src.size() / prot;
    for (size_t i = 0; i < blocks; ++i) {
        auto payload = src.subspan(i * prot, bare);
        std::memcpy(dst.data() + i * prot, payload.data(), bare);
        uint16_t guard = crc16_t10dif(0, payload);
        write_footer(dst.data() + i * prot + bare, guard, params.app_tag,
                     params.ref_tag_seed + static_cast<uint32_t>(i));
    }
    return {OpStatus::ok, src.size(), 0};
}

DeltaCreateResult delta_create(std::span<const std::byte> original,
                               std::span<const std::byte> modified, uint32_t max_size) {
    DeltaCreateResult result;
    if (original.size() != modified.size() || original.size() % kDeltaChunkSize != 0) {
        result.status = OpStatus::invalid_descriptor;
        return result;
    }
    result.record.max_size = max_size;
    const size_t chunks = original.size() / kDeltaChunkSize;
    for (size_t c = 0; c < chunks; ++c) {
        const size_t off = c * kDeltaChunkSize;
        if (std::memcmp(original.data() + off, modified.data() + off, kDeltaChunkSize) == 0)
            continue;
        if ((result.record.entries.size() + 1) * kDeltaEntrySize > max_size) {
            result.status = OpStatus::delta_overflow;
            result.bytes_examined = off;  // the overflowing chunk is not recorded
            return result;
        }
        DeltaEntry e;
        e.chunk_offset = static_cast<uint32_t>(c);
        std::memcpy(e.data.data(), modified.data() + off, kDeltaChunkSize);
        result.record.entries.push_back(e);
    }
    result.bytes_examined = original.size();
    return result;
}

OpStatus delta_apply(std::span<const std::byte> original, const DeltaRecord& delta,
                     std::span<std::byte> dst) {
    if (dst.size() != original.size() || original.size() % kDeltaChunkSize != 0)
        return OpStatus::invalid_descriptor;
    const size_t chunks = original.size() / kDeltaChunkSize;
    for (const DeltaEntry& e : delta.entries)
        if (e.chunk_offset >= chunks) return OpStatus::invalid_descriptor;
    mem_copy(original, dst);
    for (const DeltaEntry& e : delta.entries)
        std::memcpy(dst.data() + e.chunk_offset * kDeltaChunkSize, e.data.data(),
                    kDeltaChunkSize);
    return OpStatus::ok;
}

size_t cache_flush(std::span<const std::byte> dst, uint64_t* counter) {
    if (counter) *counter += dst.size();
    return dst.size();
}

}  // namespace dsaemu::ops
