// Work/batch descriptors, completion records, validation, and the 64-byte
// little-endian wire format.
//
// Layout (all multi-byte fields little-endian):
//   bytes  0-3   flags word: bits 0-3 flags, bits 8-27 client id, rest reserved
//   byte   4     opcode
//   bytes  5-7   reserved (zero)
//   bytes  8-15  completion_addr
//   bytes 16-23  src_addr
//   bytes 24-31  dst_addr
//   bytes 32-39  transfer_size
//   bytes 40-63  op_params, per opcode:
//     dualcast        40-47 second destination address
//     mem_fill        40-55 pattern bytes verbatim, 56 pattern length (8|16)
//     compare_pattern 40-47 pattern bytes
//     crc_gen         40-43 seed
//     dif             40 block-size code, 41 mode, 42-43 app tag, 44-47 ref tag seed
//     delta_create    40-43 max record size, 44-51 record output address
//     delta_apply     40-43 record size, 44-51 record address
//   batch descriptors reuse the layout with opcode=batch, src_addr=array
//   address and transfer_size=count.
#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <variant>

#include "dsaemu/data_ops.hpp"
#include "dsaemu/types.hpp"

namespace dsaemu {

inline constexpr size_t kDescriptorSize = 64;
using DescriptorBytes = std::array<std::byte, kDescriptorSize>;

struct DualcastParams {
    Address dst2;
    friend bool operator==(const DualcastParams&, const DualcastParams&) = default;
};

struct ComparePatternParams {
    std::array<std::byte, 8> pattern{};
    friend bool operator==(const ComparePatternParams&, const ComparePatternParams&) = default;
};

struct DeltaCreateParams {
    uint32_t max_size = 0;
    Address record_addr;
    friend bool operator==(const DeltaCreateParams&, const DeltaCreateParams&) = default;
};

struct DeltaApplyParams {
    uint32_t record_size = 0;
    Address record_addr;
    friend bool operator==(const DeltaApplyParams&, const DeltaApplyParams&) = default;
};

using OpParams = std::variant<std::monostate, DualcastParams, ops::FillParams,
                              ComparePatternParams, ops::CrcParams, ops::DifParams,
                              DeltaCreateParams, DeltaApplyParams>;

/// One offload request. Addresses are handles into the emulated address
/// space; transfer_size is the source byte count.
struct WorkDescriptor {
    Opcode opcode = Opcode::none;
    uint32_t flags = 0;      // DescriptorFlag bits
    uint32_t client_id = 0;  // 20-bit submitter id (PASID analog)
    Address src_addr;
    Address dst_addr;
    uint64_t transfer_size = 0;
    Address completion_addr;
    OpParams op_params;

    bool has_flag(DescriptorFlag f) const { return (flags & f) != 0; }
    friend bool operator==(const WorkDescriptor&, const WorkDescriptor&) = default;
};

/// References a contiguous array of serialized work descriptors.
struct BatchDescriptor {
    Address desc_array_addr;
    uint32_t count = 0;
    Address completion_addr;
    uint32_t flags = 0;
    uint32_t client_id = 0;

    WorkDescriptor as_work_descriptor() const;
    static BatchDescriptor from_work_descriptor(const WorkDescriptor& d);
};

struct CompletionRecord {
    CompletionStatus status = CompletionStatus::none;
    uint64_t bytes_completed = 0;
    uint64_t result = 0;
    bool has_fault_addr = false;
    Address fault_addr;
    double timestamp_done = 0;  // simulated ns
};

// --- validation -------------------------------------------------------------

enum class ValidationRule : uint8_t {
    ok = 0,
    opcode,           // not one of the defined operations
    params,           // op_params variant does not match the opcode
    transfer_size,    // exceeds the configured maximum
    completion_addr,  // request_completion_record set but no address
    reserved_flags,   // reserved flag bits set
    fill_pattern,     // pattern length not 8 or 16
    dualcast_dst,     // missing second destination
    dif_size,         // transfer size not a multiple of the block size
    delta_size,       // transfer size not a multiple of the chunk size
    delta_record,     // missing record address / bad record size
    batch_count,      // count outside [2, max_batch_size]
};

std::string_view to_string(ValidationRule r);

struct ValidationResult {
    ValidationRule rule = ValidationRule::ok;
    bool ok() const { return rule == ValidationRule::ok; }
};

struct ValidationLimits {
    uint64_t max_transfer_size = 2ull << 30;  // 2 GiB
    uint32_t max_batch_size = 1024;
};

/// Pure check of the first violated rule, if any.
ValidationResult validate(const WorkDescriptor& desc, const ValidationLimits& limits);
ValidationResult validate_batch(const BatchDescriptor& batch, const ValidationLimits& limits);

// --- wire format -------------------------------------------------------------

enum class SerializeError : uint8_t {
    none = 0,
    bad_opcode,
    params_mismatch,    // variant does not match the opcode
    bad_pattern_length,
};

struct SerializeResult {
    SerializeError error = SerializeError::none;
    DescriptorBytes bytes{};
    bool ok() const { return error == SerializeError::none; }
};

enum class DecodeError : uint8_t {
    none = 0,
    bad_length,
    unknown_opcode,
    reserved_nonzero,
    bad_pattern_length,
};

struct DecodeResult {
    DecodeError error = DecodeError::none;
    WorkDescriptor desc;
    bool ok() const { return error == DecodeError::none; }
};

SerializeResult serialize(const WorkDescriptor& desc);
DecodeResult deserialize(std::span<const std::byte> bytes);

// --- builders ---------------------------------------------------------------

WorkDescriptor make_copy(Address src, Address dst, uint64_t size);
WorkDescriptor make_dualcast(Address src, Address dst1, Address dst2, uint64_t size);
WorkDescriptor make_fill(ops::FillParams pattern, Address dst, uint64_t size);
WorkDescriptor make_compare(Address a, Address b, uint64_t size);
WorkDescriptor make_compare_pattern(std::array<std::byte, 8> pattern, Address a,
                                    uint64_t size);
WorkDescriptor make_crc(uint32_t seed, Address src, uint64_t size, Address dst = {});
WorkDescriptor make_dif(const ops::DifParams& params, Address src, Address dst,
                        uint64_t size);
WorkDescriptor make_delta_create(Address original, Address modified, uint64_t size,
                                 Address record, uint32_t max_size);
WorkDescriptor make_delta_apply(Address original, Address dst, uint64_t size,
                                Address record, uint32_t record_size);
WorkDescriptor make_cache_flush(Address dst, uint64_t size);

}  // namespace dsaemu
