#include "dsaemu/descriptor.hpp"

#include <cstring>

namespace dsaemu {
namespace {

void put_u16(std::byte* p, uint16_t v) {
    p[0] = static_cast<std::byte>(v & 0xFF);
    p[1] = static_cast<std::byte>((v >> 8) & 0xFF);
}
void put_u32(std::byte* p, uint32_t v) {
    for (int i = 0; i < 4; ++i) p[i] = static_cast<std::byte>((v >> (8 * i)) & 0xFF);
}
void put_u64(std::byte* p, uint64_t v) {
    for (int i = 0; i < 8; ++i) p[i] = static_cast<std::byte>((v >> (8 * i)) & 0xFF);
}
uint16_t get_u16(const std::byte* p) {
    return static_cast<uint16_t>(static_cast<uint16_t>(p[0]) |
                                 (static_cast<uint16_t>(p[1]) << 8));
}
uint32_t get_u32(const std::byte* p) {
    uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<uint32_t>(static_cast<uint8_t>(p[i])) << (8 * i);
    return v;
}
uint64_t get_u64(const std::byte* p) {
    uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<uint64_t>(static_cast<uint8_t>(p[i])) << (8 * i);
    return v;
}

bool all_zero(const std::byte* p, size_t n) {
    for (size_t i = 0; i < n; ++i)
        if (p[i] != std::byte{0}) return false;
    return true;
}

template <typename T>
const T* params_as(const WorkDescriptor& d) {
    return std::get_if<T>(&d.op_params);
}

}  // namespace

std::string_view to_string(Opcode op) {
    switch (op) {
        case Opcode::none: return "none";
        case Opcode::mem_copy: return "copy";
        case Opcode::dualcast: return "dualcast";
        case Opcode::mem_fill: return "fill";
        case Opcode::mem_compare: return "compare";
        case Opcode::compare_pattern: return "compare_pattern";
        case Opcode::crc_gen: return "crc";
        case Opcode::dif: return "dif";
        case Opcode::delta_create: return "delta_create";
        case Opcode::delta_apply: return "delta_apply";
        case Opcode::cache_flush: return "cache_flush";
        case Opcode::batch: return "batch";
    }
    return "?";
}

std::string_view to_string(CompletionStatus s) {
    switch (s) {
        case CompletionStatus::none: return "none";
        case CompletionStatus::success: return "success";
        case CompletionStatus::partial_page_fault: return "partial_page_fault";
        case CompletionStatus::invalid_descriptor: return "invalid_descriptor";
        case CompletionStatus::compare_mismatch: return "compare_mismatch";
        case CompletionStatus::dif_error: return "dif_error";
        case CompletionStatus::delta_overflow: return "delta_overflow";
    }
    return "?";
}

std::string_view to_string(MemTier t) {
    switch (t) {
        case MemTier::local_dram: return "local_dram";
        case MemTier::remote_dram: return "remote_dram";
        case MemTier::cxl: return "cxl";
        case MemTier::llc: return "llc";
    }
    return "?";
}

bool tier_from_string(std::string_view name, MemTier& out) {
    if (name == "local_dram" || name == "local") out = MemTier::local_dram;
    else if (name == "remote_dram" || name == "remote") out = MemTier::remote_dram;
    else if (name == "cxl") out = MemTier::cxl;
    else if (name == "llc") out = MemTier::llc;
    else return false;
    return true;
}

std::string_view to_string(ValidationRule r) {
    switch (r) {
        case ValidationRule::ok: return "ok";
        case ValidationRule::opcode: return "opcode";
        case ValidationRule::params: return "params";
        case ValidationRule::transfer_size: return "transfer_size";
        case ValidationRule::completion_addr: return "completion_addr";
        case ValidationRule::reserved_flags: return "reserved_flags";
        case ValidationRule::fill_pattern: return "fill_pattern";
        case ValidationRule::dualcast_dst: return "dualcast_dst";
        case ValidationRule::dif_size: return "dif_size";
        case ValidationRule::delta_size: return "delta_size";
        case ValidationRule::delta_record: return "delta_record";
        case ValidationRule::batch_count: return "batch_count";
    }
    return "?";
}

WorkDescriptor BatchDescriptor::as_work_descriptor() const {
    WorkDescriptor d;
    d.opcode = Opcode::batch;
    d.flags = flags;
    d.client_id = client_id;
    d.src_addr = desc_array_addr;
    d.transfer_size = count;
    d.completion_addr = completion_addr;
    return d;
}

BatchDescriptor BatchDescriptor::from_work_descriptor(const WorkDescriptor& d) {
    BatchDescriptor b;
    b.desc_array_addr = d.src_addr;
    b.count = static_cast<uint32_t>(d.transfer_size);
    b.completion_addr = d.completion_addr;
    b.flags = d.flags;
    b.client_id = d.client_id;
    return b;
}

namespace {

bool params_match_opcode(const WorkDescriptor& d) {
    switch (d.opcode) {
        case Opcode::dualcast: return params_as<DualcastParams>(d) != nullptr;
        case Opcode::mem_fill: return params_as<ops::FillParams>(d) != nullptr;
        case Opcode::compare_pattern: return params_as<ComparePatternParams>(d) != nullptr;
        case Opcode::crc_gen: return params_as<ops::CrcParams>(d) != nullptr;
        case Opcode::dif: return params_as<ops::DifParams>(d) != nullptr;
        case Opcode::delta_create: return params_as<DeltaCreateParams>(d) != nullptr;
        case Opcode::delta_apply: return params_as<DeltaApplyParams>(d) != nullptr;
        default: return std::holds_alternative<std::monostate>(d.op_params);
    }
}

}  // namespace

ValidationResult validate(const WorkDescriptor& desc, const ValidationLimits& limits) {
    if (desc.opcode == Opcode::batch) {
        BatchDescriptor b = BatchDescriptor::from_work_descriptor(desc);
        return validate_batch(b, limits);
    }
    if (!is_data_opcode(desc.opcode)) return {ValidationRule::opcode};
    if ((desc.flags & ~kFlagMask) != 0) return {ValidationRule::reserved_flags};
    if (!params_match_opcode(desc)) return {ValidationRule::params};
    if (desc.transfer_size > limits.max_transfer_size) return {ValidationRule::transfer_size};
    if (desc.has_flag(kFlagRequestCompletion) && desc.completion_addr.is_null())
        return {ValidationRule::completion_addr};
    switch (desc.opcode) {
        case Opcode::dualcast:
            if (params_as<DualcastParams>(desc)->dst2.is_null())
                return {ValidationRule::dualcast_dst};
            break;
        case Opcode::mem_fill:
            if (!params_as<ops::FillParams>(desc)->valid())
                return {ValidationRule::fill_pattern};
            break;
        case Opcode::dif: {
            const auto& p = *params_as<ops::DifParams>(desc);
            const uint64_t block = p.mode == ops::DifMode::insert ? p.bare_block()
                                                                  : p.protected_block();
            if (desc.transfer_size % block != 0) return {ValidationRule::dif_size};
            break;
        }
        case Opcode::delta_create: {
            const auto& p = *params_as<DeltaCreateParams>(desc);
            if (desc.transfer_size % ops::kDeltaChunkSize != 0)
                return {ValidationRule::delta_size};
            if (p.record_addr.is_null()) return {ValidationRule::delta_record};
            break;
        }
        case Opcode::delta_apply: {
            const auto& p = *params_as<DeltaApplyParams>(desc);
            if (desc.transfer_size % ops::kDeltaChunkSize != 0)
                return {ValidationRule::delta_size};
            if (p.record_addr.is_null() || p.record_size % ops::kDeltaEntrySize != 0)
                return {ValidationRule::delta_record};
            break;
        }
        default: break;
    }
    return {ValidationRule::ok};
}

ValidationResult validate_batch(const BatchDescriptor& batch, const ValidationLimits& limits) {
    if (batch.count < 2 || batch.count > limits.max_batch_size)
        return {ValidationRule::batch_count};
    if ((batch.flags & ~kFlagMask) != 0) return {ValidationRule::reserved_flags};
    if ((batch.flags & kFlagRequestCompletion) && batch.completion_addr.is_null())
        return {ValidationRule::completion_addr};
    return {ValidationRule::ok};
}

SerializeResult serialize(const WorkDescriptor& desc) {
    SerializeResult r;
    if (desc.opcode == Opcode::none || desc.opcode > Opcode::batch) {
        r.error = SerializeError::bad_opcode;
        return r;
    }
    if (!params_match_opcode(desc)) {
        r.error = SerializeError::params_mismatch;
        return r;
    }
    std::byte* p = r.bytes.data();
    const uint32_t flags_word = (desc.flags & kFlagMask) |
                                ((desc.client_id & kClientIdMask) << kClientIdShift);
    put_u32(p, flags_word);
    p[4] = static_cast<std::byte>(desc.opcode);
    put_u64(p + 8, desc.completion_addr.pack());
    put_u64(p + 16, desc.src_addr.pack());
    put_u64(p + 24, desc.dst_addr.pack());
    put_u64(p + 32, desc.transfer_size);
    std::byte* op = p + 40;
    switch (desc.opcode) {
        case Opcode::dualcast:
            put_u64(op, params_as<DualcastParams>(desc)->dst2.pack());
            break;
        case Opcode::mem_fill: {
            const auto& fp = *params_as<ops::FillParams>(desc);
            if (!fp.valid()) {
                r.error = SerializeError::bad_pattern_length;
                return r;
            }
            std::memcpy(op, fp.pattern.data(), fp.pattern.size());
            op[16] = static_cast<std::byte>(fp.pattern.size());
            break;
        }
        case Opcode::compare_pattern:
            std::memcpy(op, params_as<ComparePatternParams>(desc)->pattern.data(), 8);
            break;
        case Opcode::crc_gen:
            put_u32(op, params_as<ops::CrcParams>(desc)->seed);
            break;
        case Opcode::dif: {
            const auto& dp = *params_as<ops::DifParams>(desc);
            op[0] = static_cast<std::byte>(dp.block_size);
            op[1] = static_cast<std::byte>(dp.mode);
            put_u16(op + 2, dp.app_tag);
            put_u32(op + 4, dp.ref_tag_seed);
            break;
        }
        case Opcode::delta_create: {
            const auto& dp = *params_as<DeltaCreateParams>(desc);
            put_u32(op, dp.max_size);
            put_u64(op + 4, dp.record_addr.pack());
            break;
        }
        case Opcode::delta_apply: {
            const auto& dp = *params_as<DeltaApplyParams>(desc);
            put_u32(op, dp.record_size);
            put_u64(op + 4, dp.record_addr.pack());
            break;
        }
        default: break;
    }
    return r;
}

DecodeResult deserialize(std::span<const std::byte> bytes) {
    DecodeResult r;
    if (bytes.size() != kDescriptorSize) {
        r.error = DecodeError::bad_length;
        return r;
    }
    const std::byte* p = bytes.data();
    const uint8_t opcode_raw = static_cast<uint8_t>(p[4]);
    if (opcode_raw == 0 || opcode_raw > static_cast<uint8_t>(Opcode::batch)) {
        r.error = DecodeError::unknown_opcode;
        return r;
    }
    if (!all_zero(p + 5, 3)) {
        r.error = DecodeError::reserved_nonzero;
        return r;
    }
    const uint32_t flags_word = get_u32(p);
    constexpr uint32_t kKnownBits = kFlagMask | (kClientIdMask << kClientIdShift);
    if ((flags_word & ~kKnownBits) != 0) {
        r.error = DecodeError::reserved_nonzero;
        return r;
    }
    WorkDescriptor& d = r.desc;
    d.opcode = static_cast<Opcode>(opcode_raw);
    d.flags = flags_word & kFlagMask;
    d.client_id = (flags_word >> kClientIdShift) & kClientIdMask;
    d.completion_addr = Address::unpack(get_u64(p + 8));
    d.src_addr = Address::unpack(get_u64(p + 16));
    d.dst_addr = Address::unpack(get_u64(p + 24));
    d.transfer_size = get_u64(p + 32);
    const std::byte* op = p + 40;
    // Unused op_params bytes are reserved and must be zero.
    auto reserved_from = [&](size_t used) { return all_zero(op + used, 24 - used); };
    switch (d.opcode) {
        case Opcode::dualcast:
            d.op_params = DualcastParams{Address::unpack(get_u64(op))};
            if (!reserved_from(8)) r.error = DecodeError::reserved_nonzero;
            break;
        case Opcode::mem_fill: {
            const uint8_t len = static_cast<uint8_t>(op[16]);
            if (len != 8 && len != 16) {
                r.error = DecodeError::bad_pattern_length;
                return r;
            }
            ops::FillParams fp;
            fp.pattern.assign(op, op + len);
            // pattern bytes beyond the stated length must be zero
            if (len == 8 && !all_zero(op + 8, 8)) r.error = DecodeError::reserved_nonzero;
            if (!all_zero(op + 17, 7)) r.error = DecodeError::reserved_nonzero;
            d.op_params = std::move(fp);
            break;
        }
        case Opcode::compare_pattern: {
            ComparePatternParams cp;
            std::memcpy(cp.pattern.data(), op, 8);
            d.op_params = cp;
            if (!reserved_from(8)) r.error = DecodeError::reserved_nonzero;
            break;
        }
        case Opcode::crc_gen:
            d.op_params = ops::CrcParams{get_u32(op)};
            if (!reserved_from(4)) r.error = DecodeError::reserved_nonzero;
            break;
        case Opcode::dif: {
            ops::DifParams dp;
            dp.block_size = static_cast<ops::DifBlockSize>(op[0]);
            dp.mode = static_cast<ops::DifMode>(op[1]);
            if (static_cast<uint8_t>(op[0]) > 3 || static_cast<uint8_t>(op[1]) > 3) {
                r.error = DecodeError::reserved_nonzero;
                return r;
            }
            dp.app_tag = get_u16(op + 2);
            dp.ref_tag_seed = get_u32(op + 4);
            d.op_params = dp;
            if (!reserved_from(8)) r.error = DecodeError::reserved_nonzero;
            break;
        }
        case Opcode::delta_create:
            d.op_params = DeltaCreateParams{get_u32(op), Address::unpack(get_u64(op + 4))};
            if (!reserved_from(12)) r.error = DecodeError::reserved_nonzero;
            break;
        case Opcode::delta_apply:
            d.op_params = DeltaApplyParams{get_u32(op), Address::unpack(get_u64(op + 4))};
            if (!reserved_from(12)) r.error = DecodeError::reserved_nonzero;
            break;
        default:
            if (!reserved_from(0)) r.error = DecodeError::reserved_nonzero;
            break;
    }
    return r;
}

WorkDescriptor make_copy(Address src, Address dst, uint64_t size) {
    WorkDescriptor d;
    d.opcode = Opcode::mem_copy;
    d.src_addr = src;
    d.dst_addr = dst;
    d.transfer_size = size;
    return d;
}

WorkDescriptor make_dualcast(Address src, Address dst1, Address dst2, uint64_t size) {
    WorkDescriptor d;
    d.opcode = Opcode::dualcast;
    d.src_addr = src;
    d.dst_addr = dst1;
    d.transfer_size = size;
    d.op_params = DualcastParams{dst2};
    return d;
}

WorkDescriptor make_fill(ops::FillParams pattern, Address dst, uint64_t size) {
    WorkDescriptor d;
    d.opcode = Opcode::mem_fill;
    d.dst_addr = dst;
    d.transfer_size = size;
    d.op_params = std::move(pattern);
    return d;
}

WorkDescriptor make_compare(Address a, Address b, uint64_t size) {
    WorkDescriptor d;
    d.opcode = Opcode::mem_compare;
    d.src_addr = a;
    d.dst_addr = b;
    d.transfer_size = size;
    return d;
}

WorkDescriptor make_compare_pattern(std::array<std::byte, 8> pattern, Address a,
                                    uint64_t size) {
    WorkDescriptor d;
    d.opcode = Opcode::compare_pattern;
    d.src_addr = a;
    d.transfer_size = size;
    d.op_params = ComparePatternParams{pattern};
    return d;
}

WorkDescriptor make_crc(uint32_t seed, Address src, uint64_t size, Address dst) {
    WorkDescriptor d;
    d.opcode = Opcode::crc_gen;
    d.src_addr = src;
    d.dst_addr = dst;
    d.transfer_size = size;
    d.op_params = ops::CrcParams{seed};
    return d;
}

WorkDescriptor make_dif(const ops::DifParams& params, Address src, Address dst,
                        uint64_t size) {
    WorkDescriptor d;
    d.opcode = Opcode::dif;
    d.src_addr = src;
    d.dst_addr = dst;
    d.transfer_size = size;
    d.op_params = params;
    return d;
}

WorkDescriptor make_delta_create(Address original, Address modified, uint64_t size,
                                 Address record, uint32_t max_size) {
    WorkDescriptor d;
    d.opcode = Opcode::delta_create;
    d.src_addr = original;
    d.dst_addr = modified;
    d.transfer_size = size;
    d.op_params = DeltaCreateParams{max_size, record};
    return d;
}

WorkDescriptor make_delta_apply(Address original, Address dst, uint64_t size,
                                Address record, uint32_t record_size) {
    WorkDescriptor d;
    d.opcode = Opcode::delta_apply;
    d.src_addr = original;
    d.dst_addr = dst;
    d.transfer_size = size;
    d.op_params = DeltaApplyParams{record_size, record};
    return d;
}

WorkDescriptor make_cache_flush(Address dst, uint64_t size) {
    WorkDescriptor d;
    d.opcode = Opcode::cache_flush;
    d.dst_addr = dst;
    d.transfer_size = size;
    return d;
}

}  // namespace dsaemu
