// Emulated address space: tier-tagged byte buffers addressed by
// (buffer_id, offset) handles, plus the completion-slot arena.
#pragma once

#include <atomic>
#include <cstdint>
#include <deque>
#include <mutex>
#include <span>
#include <vector>

#include "dsaemu/descriptor.hpp"
#include "dsaemu/types.hpp"

namespace dsaemu {

/// Single-writer (device) / multi-reader (clients) completion cell.
/// The device fills the payload, then publishes the status with release
/// semantics; readers that observe a terminal status with acquire semantics
/// see all other fields. A slot may be recycled by the owner with reset()
/// once the previous record has been consumed.
class CompletionSlot {
public:
    bool is_terminal() const {
        return status.load(std::memory_order_acquire) != CompletionStatus::none;
    }

    /// Valid only after is_terminal() returned true.
    CompletionRecord read() const {
        CompletionRecord r = record;
        r.status = status.load(std::memory_order_acquire);
        return r;
    }

    /// Device side: write payload then publish. Must be called exactly once
    /// per lifetime.
    void publish(const CompletionRecord& r) {
        record = r;
        status.store(r.status, std::memory_order_release);
    }

    void reset() { status.store(CompletionStatus::none, std::memory_order_release); }

private:
    std::atomic<CompletionStatus> status{CompletionStatus::none};
    CompletionRecord record;  // status field unused; the atomic is authoritative
};

/// Buffer registry. Buffers are created up front and never resized; the
/// device and clients access disjoint spans concurrently by contract.
class AddressSpace {
public:
    /// Returns a handle to a fresh zero-initialized buffer.
    Address create_buffer(size_t size, MemTier tier = MemTier::local_dram);

    std::span<std::byte> resolve(Address addr, size_t len);
    std::span<const std::byte> resolve(Address addr, size_t len) const;
    bool valid_range(Address addr, size_t len) const;
    MemTier tier_of(Address addr) const;
    size_t buffer_size(uint32_t buffer_id) const;

    /// Completion-slot arena. Slot addresses live in the reserved region
    /// (buffer_id == kCompletionRegionId, offset == slot index).
    Address alloc_completion_slot();
    CompletionSlot* slot(Address addr);
    const CompletionSlot* slot(Address addr) const;

private:
    struct Buffer {
        std::vector<std::byte> bytes;
        MemTier tier = MemTier::local_dram;
    };

    mutable std::mutex mu_;
    std::deque<Buffer> buffers_;       // index = buffer_id - 1
    std::deque<CompletionSlot> slots_; // index = address offset
};

}  // namespace dsaemu
