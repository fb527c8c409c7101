#include "dsaemu/address_space.hpp"

namespace dsaemu {

Address AddressSpace::create_buffer(size_t size, MemTier tier) {
    std::lock_guard lock(mu_);
    buffers_.push_back(Buffer{std::vector<std::byte>(size), tier});
    return Address{static_cast<uint32_t>(buffers_.size()), 0};
}

std::span<std::byte> AddressSpace::resolve(Address addr, size_t len) {
    if (!valid_range(addr, len)) return {};
    Buffer& b = buffers_[addr.buffer_id - 1];
    return {b.bytes.data() + addr.offset, len};
}

std::span<const std::byte> AddressSpace::resolve(Address addr, size_t len) const {
    if (!valid_range(addr, len)) return {};
    const Buffer& b = buffers_[addr.buffer_id - 1];
    return {b.bytes.data() + addr.offset, len};
}

bool AddressSpace::valid_range(Address addr, size_t len) const {
    if (addr.buffer_id == 0 || addr.buffer_id == kCompletionRegionId) return false;
    std::lock_guard lock(mu_);
    if (addr.buffer_id > buffers_.size()) return false;
    const Buffer& b = buffers_[addr.buffer_id - 1];
    return static_cast<size_t>(addr.offset) + len <= b.bytes.size();
}

MemTier AddressSpace::tier_of(Address addr) const {
    std::lock_guard lock(mu_);
    if (addr.buffer_id == 0 || addr.buffer_id > buffers_.size()) return MemTier::local_dram;
    return buffers_[addr.buffer_id - 1].tier;
}

size_t AddressSpace::buffer_size(uint32_t buffer_id) const {
    std::lock_guard lock(mu_);
    if (buffer_id == 0 || buffer_id > buffers_.size()) return 0;
    return buffers_[buffer_id - 1].bytes.size();
}

Address AddressSpace::alloc_completion_slot() {
    std::lock_guard lock(mu_);
    slots_.emplace_back();
    return Address{kCompletionRegionId, static_cast<uint32_t>(slots_.size() - 1)};
}

CompletionSlot* AddressSpace::slot(Address addr) {
    if (addr.buffer_id != kCompletionRegionId) return nullptr;
    std::lock_guard lock(mu_);
    if (addr.offset >= slots_.size()) return nullptr;
    return &slots_[addr.offset];
}

const CompletionSlot* AddressSpace::slot(Address addr) const {
    if (addr.buffer_id != kCompletionRegionId) return nullptr;
    std::lock_guard lock(mu_);
    if (addr.offset >= slots_.size()) return nullptr;
    return &slots_[addr.offset];
}

}  // namespace dsaemu
