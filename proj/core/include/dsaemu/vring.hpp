// Virtqueue packet-copy offload case study: a virtio-style descriptor queue
// whose packet copies run through the device as one batch per burst, with a
// three-stage pipeline per iteration (write back completed, fetch + submit,
// continue) and strictly in-order used-ring write-back via a recording array.
#pragma once

#include <deque>
#include <vector>

#include "dsaemu/client.hpp"

namespace dsaemu::vring {

/// Host CPU costs of the virtqueue software path, per packet (ns).
struct VringCostModel {
    double t_fetch_avail = 25;  // read an avail descriptor, resolve the buffer
    double t_prep_desc = 20;    // fill in a device descriptor
    double t_writeback = 30;    // used-ring write-back (~10 B, host copy)
    double t_forward = 25;      // other per-packet work (e.g. mac forwarding)
};

struct VqDesc {
    Address addr;
    uint32_t len = 0;
    uint16_t id = 0;
};

struct UsedElem {
    uint16_t id = 0;
    uint32_t len = 0;
};

struct Packet {
    Address addr;
    uint32_t len = 0;
};

struct PacketBurst {
    std::vector<Packet> packets;
};

inline constexpr size_t kDefaultBurstSize = 32;

/// One owner thread per queue; device completions land asynchronously and
/// the recording array (OrderedTracker) is the only cross-thread touchpoint.
class Virtqueue {
public:
    Virtqueue(DeviceRuntime& rt, size_t size, VringCostModel costs = {});

    /// Driver side: make a guest buffer available.
    void post_avail(Address addr, uint32_t len, uint16_t id);
    size_t avail_count() const { return avail_.size(); }

    const std::vector<UsedElem>& used() const { return used_; }
    size_t in_flight() const { return inflight_slots_.size(); }
    const VringCostModel& costs() const { return costs_; }

    /// Stage 1: poll completions and write back the contiguous completed
    /// prefix to the used ring. Returns the ids written back, in order.
    std::vector<uint16_t> write_back_completed();

    /// Stages 1-3 for an enqueue iteration: write back, then fetch avail
    /// descriptors and submit one batched copy host->guest for up to
    /// burst.packets.size() packets (cache-control set so payloads stay in
    /// LLC). Returns packets submitted; fewer when avail or tracking space
    /// runs out. Copies complete asynchronously.
    size_t enqueue_burst(const PacketBurst& burst, Portal& portal);

    /// Mirror of enqueue with the copy direction reversed: completed
    /// guest->host copies from earlier iterations are returned as a burst
    /// (and written back to the used ring), then up to max_burst new avail
    /// entries are fetched and submitted into freshly allocated host
    /// buffers. An empty queue yields an empty burst.
    PacketBurst dequeue_burst(Portal& portal, size_t max_burst = kDefaultBurstSize);

private:
    size_t submit_copies(Portal& portal, size_t max_count,
                         const std::vector<Packet>* host_packets, bool to_guest);

    DeviceRuntime& rt_;
    size_t size_;
    VringCostModel costs_;
    std::deque<VqDesc> avail_;
    std::vector<UsedElem> used_;
    OrderedTracker tracker_;
    // recording-array slot -> bookkeeping
    std::vector<Address> slot_completion_;
    std::vector<UsedElem> slot_elem_;
    std::vector<Packet> slot_host_buf_;  // dequeue direction
    std::deque<int32_t> inflight_slots_;
    std::vector<Packet> ready_packets_;  // dequeue: drained but not yet returned
};

enum class ForwardMode : uint8_t { cpu_copy = 0, dsa_offload = 1 };

std::string_view to_string(ForwardMode m);

struct ForwardSpec {
    std::vector<uint32_t> packet_sizes{256, 512, 1024, 1518};
    size_t burst_size = kDefaultBurstSize;
    size_t iterations = 400;  // bursts per point
    size_t vq_size = 256;
    uint64_t seed = 1;
    VringCostModel costs;
    DeviceConfig device = default_device_config();
};

struct ForwardRow {
    uint32_t packet_size = 0;
    ForwardMode mode = ForwardMode::cpu_copy;
    double mpps = 0;
};

/// Simulated packet-forwarding rates per packet size and mode.
std::vector<ForwardRow> forward_benchmark(const ForwardSpec& spec);

/// CSV with header packet_size,mode,mpps.
std::string forward_csv(const std::vector<ForwardRow>& rows);

}  // namespace dsaemu::vring
