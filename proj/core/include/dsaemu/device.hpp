// The emulated device: work queues, group arbiters, processing engines,
// batch engine, fault injection, and the discrete-event timing model.
//
// Engines are two-stage pipelines: descriptor fetch + address translation
// overlap the previous descriptor's execution, so back-to-back service time
// on one engine is max(t_pe_fixed, transfer_size / b_eff) plus any fault
// stall. Transfer bandwidth is processor-shared: at every event boundary
// each transferring engine gets min(its solo cap, equal share of the device
// fabric, equal share of the socket); aggregate rate never exceeds either
// ceiling. Several devices may share one SimContext through a DeviceCluster,
// which also applies the socket cap and the DDIO write-footprint knob.
#pragma once

#include <functional>
#include <memory>
#include <span>
#include <vector>

#include "dsaemu/address_space.hpp"
#include "dsaemu/config.hpp"
#include "dsaemu/descriptor.hpp"
#include "dsaemu/sim.hpp"
#include "dsaemu/telemetry.hpp"

namespace dsaemu {

using DescriptorId = uint64_t;

enum class EnqueueStatus : uint8_t {
    accepted = 0,
    retry,          // shared WQ full; nothing enqueued, no side effects
    error_invalid,  // failed validation; error record written when possible
    error_usage,    // dedicated WQ overflow, wrong portal mode, bad wq id
};

struct EnqueueResult {
    EnqueueStatus status = EnqueueStatus::error_usage;
    DescriptorId id = 0;
    ValidationRule violated = ValidationRule::ok;
    bool accepted() const { return status == EnqueueStatus::accepted; }
};

using CompletionCallback = std::function<void(const CompletionRecord&, double)>;
using SubCompletionCallback =
    std::function<void(uint32_t sub_index, const CompletionRecord&, double)>;

class DeviceCluster;

class Device {
public:
    ~Device();
    Device(const Device&) = delete;
    Device& operator=(const Device&) = delete;

    /// Claims a WQ slot for a serialized descriptor at the current simulated
    /// time. `dedicated_submitter` must match the WQ mode. Shared WQs return
    /// retry when full; a full dedicated WQ is a usage error (the single
    /// producer is expected to track occupancy). The claim is linearizable
    /// under the runtime's serialization: callers either drive the device
    /// from one thread or go through DeviceRuntime/Portal, which hold the
    /// runtime lock across enqueue and event processing.
    EnqueueResult enqueue(uint32_t wq_id, std::span<const std::byte> desc64,
                          bool dedicated_submitter, CompletionCallback cb = nullptr,
                          SubCompletionCallback sub_cb = nullptr);

    const DeviceConfig& config() const;
    uint32_t index() const;

    /// Point-in-time copy of all counters.
    Telemetry snapshot_telemetry() const;

    // Conservation counters: accepted == records written + in flight.
    uint64_t accepted_count() const;
    uint64_t terminal_record_count() const;
    uint64_t in_flight() const;

    uint32_t wq_occupancy(uint32_t wq_id) const;

    // Client-side time accounting feeding the telemetry (UMWAIT analog).
    void add_submit_busy(double ns);
    void add_wait_state(double ns);
    void add_busy_poll(double ns);
    void add_lock_wait(double ns);

private:
    friend class DeviceCluster;
    Device(DeviceCluster& cluster, DeviceConfig cfg, uint32_t index);

    struct Impl;
    std::unique_ptr<Impl> impl_;
};

/// One or more devices sharing a simulation context, an address space, and
/// the socket-level bandwidth model.
class DeviceCluster {
public:
    struct SocketParams {
        double b_socket = 120.0;          // bytes/ns across all devices
        double ddio_footprint_limit = 0;  // 0 disables the DDIO knob
        double ddio_spill_bw = 22.5;      // per-device cap once exceeded
    };

    DeviceCluster(SimContext& sim, AddressSpace& mem);
    DeviceCluster(SimContext& sim, AddressSpace& mem, SocketParams socket);
    ~DeviceCluster();

    /// Validates the topology and powers on a device; nullptr on config
    /// error (the error is reported through `err` when given).
    Device* add_device(const DeviceConfig& cfg, ConfigError* err = nullptr);

    Device& device(size_t i) { return *devices_[i]; }
    const Device& device(size_t i) const { return *devices_[i]; }
    size_t device_count() const { return devices_.size(); }

    SimContext& sim() { return sim_; }
    AddressSpace& memory() { return mem_; }
    const SocketParams& socket() const { return socket_; }

private:
    friend struct Device::Impl;
    void recompute_rates();

    SimContext& sim_;
    AddressSpace& mem_;
    SocketParams socket_;
    std::vector<std::unique_ptr<Device>> devices_;
};

}  // namespace dsaemu
