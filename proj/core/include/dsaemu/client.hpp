// User-facing offload interface: portals, sync/async submission, wait
// primitives, batch building, and in-order completion tracking.
//
// The runtime is cooperative: client calls advance the virtual clock and
// pump the device event loop. Multiple OS threads may share a runtime; all
// entry points serialize on one lock, and waits pump events while the lock
// is held, yielding between steps so other submitters interleave.
#pragma once

#include <atomic>
#include <condition_variable>
#include <mutex>
#include <optional>
#include <vector>

#include "dsaemu/device.hpp"

namespace dsaemu {

class DeviceRuntime;

struct OffloadHandle {
    Address slot_addr;
    DescriptorId id = 0;
    double submit_time = 0;
    bool consumed = false;

    bool valid() const { return slot_addr.buffer_id == kCompletionRegionId; }
};

enum class SubmitStatus : uint8_t {
    accepted = 0,
    retry,
    error_invalid,
    usage_error,
};

struct SubmitOutcome {
    SubmitStatus status = SubmitStatus::usage_error;
    OffloadHandle handle;
    ValidationRule violated = ValidationRule::ok;
    bool accepted() const { return status == SubmitStatus::accepted; }
};

enum class WaitMode : uint8_t { poll = 0, block = 1 };

struct BatchBuildResult {
    bool ok = false;
    ValidationRule violated = ValidationRule::ok;
    BatchDescriptor batch;
    Address array_addr;  // backing array; immutable until the batch record lands
};

/// Serializes the descriptors into a fresh contiguous array and returns the
/// batch descriptor referencing it. All descriptors must be valid and the
/// count within [2, max_batch_size].
BatchBuildResult build_batch(AddressSpace& mem, std::span<const WorkDescriptor> descs,
                             const ValidationLimits& limits);

/// Per-WQ submission endpoint. Shared portals take any number of concurrent
/// submitters; dedicated portals have one owner by contract.
class Portal {
public:
    Portal(DeviceRuntime& rt, Device& dev, uint32_t wq_id);

    WqMode mode() const { return mode_; }
    uint32_t wq_id() const { return wq_id_; }
    Device& device() { return dev_; }

    /// Serializes and submits. When the descriptor requests no completion
    /// record, a slot is allocated and the flag set so the handle is
    /// resolvable. Charges the submission cost on the virtual clock.
    SubmitOutcome submit(WorkDescriptor desc);
    SubmitOutcome submit_batch(const BatchDescriptor& batch,
                               SubCompletionCallback sub_cb = nullptr);

    /// Submit + wait, retrying shared-WQ rejections with exponential backoff
    /// (1 us start, 64 us cap, simulated time).
    CompletionRecord submit_sync(WorkDescriptor desc);

private:
    SubmitOutcome submit_serialized(const DescriptorBytes& bytes, Address slot_addr,
                                    SubCompletionCallback sub_cb);

    DeviceRuntime& rt_;
    Device& dev_;
    uint32_t wq_id_;
    WqMode mode_;
};

/// Owns the simulation context, address space and device cluster behind the
/// client API.
class DeviceRuntime {
public:
    explicit DeviceRuntime(uint64_t seed = 1);
    DeviceRuntime(uint64_t seed, DeviceCluster::SocketParams socket);

    AddressSpace& memory() { return mem_; }
    SimContext& sim() { return sim_; }
    DeviceCluster& cluster() { return cluster_; }

    Device* add_device(const DeviceConfig& cfg, ConfigError* err = nullptr);
    Device& device(size_t i = 0) { return cluster_.device(i); }

    double now();

    /// Models client CPU work: advances the virtual clock by dt, running any
    /// device events that fall due.
    void advance(double dt);
    void run_until_idle();

    /// Returns the terminal record; blocks (pumping the simulation) until the
    /// device publishes it. Block mode accrues wait-state time, poll mode
    /// busy-poll time. Waiting twice on one handle is a usage error.
    CompletionRecord wait(OffloadHandle& handle, WaitMode mode, Device& dev);

    /// Single lock serializing all runtime entry points.
    std::mutex& lock() { return mu_; }

private:
    friend class Portal;

    SimContext sim_;
    AddressSpace mem_;
    DeviceCluster cluster_;
    std::mutex mu_;
};

/// Ring of in-flight items drained strictly in submission order (the
/// recording-array pattern). Safe for one completing thread and one
/// draining/submitting thread.
class OrderedTracker {
public:
    explicit OrderedTracker(size_t capacity);

    static constexpr int32_t kFull = -1;

    /// Claims the next slot in submission order; kFull when no space.
    int32_t submit(uint64_t token);

    /// Marks a slot complete. Unknown or idle slots are a usage error.
    void complete(size_t slot);

    bool slot_completed(size_t slot) const;

    /// Pops and returns the maximal contiguous completed prefix, in
    /// submission order.
    std::vector<uint64_t> drain();

    size_t in_flight() const { return count_.load(std::memory_order_acquire); }
    size_t capacity() const { return entries_.size(); }

private:
    struct Entry {
        uint64_t token = 0;
        std::atomic<bool> in_use{false};
        std::atomic<bool> completed{false};
    };

    std::vector<Entry> entries_;
    size_t head_ = 0;  // oldest in-flight (drainer side)
    size_t tail_ = 0;  // next free (submitter side)
    std::atomic<size_t> count_{0};
};

}  // namespace dsaemu
