#include "dsaemu/vring.hpp"

#include <algorithm>
#include <sstream>

namespace dsaemu::vring {

std::string_view to_string(ForwardMode m) {
    return m == ForwardMode::cpu_copy ? "cpu_copy" : "dsa_offload";
}

Virtqueue::Virtqueue(DeviceRuntime& rt, size_t size, VringCostModel costs)
    : rt_(rt), size_(size), costs_(costs), tracker_(size),
      slot_completion_(size), slot_elem_(size), slot_host_buf_(size) {}

void Virtqueue::post_avail(Address addr, uint32_t len, uint16_t id) {
    avail_.push_back(VqDesc{addr, len, id});
}

std::vector<uint16_t> Virtqueue::write_back_completed() {
    // Mark slots whose completion record has landed. The scan is bounded by
    // the in-flight window, mirroring the recording-array walk.
    for (int32_t slot : inflight_slots_) {
        if (tracker_.slot_completed(static_cast<size_t>(slot))) continue;
        CompletionSlot* cs = rt_.memory().slot(slot_completion_[slot]);
        if (cs && cs->is_terminal()) tracker_.complete(static_cast<size_t>(slot));
    }
    std::vector<uint64_t> drained = tracker_.drain();
    std::vector<uint16_t> ids;
    ids.reserve(drained.size());
    for (size_t k = 0; k < drained.size(); ++k) {
        const auto slot = static_cast<size_t>(inflight_slots_.front());
        used_.push_back(slot_elem_[slot]);
        ids.push_back(slot_elem_[slot].id);
        if (slot_host_buf_[slot].len > 0) {
            ready_packets_.push_back(slot_host_buf_[slot]);
            slot_host_buf_[slot] = Packet{};
        }
        inflight_slots_.pop_front();
    }
    if (!drained.empty())
        rt_.advance(costs_.t_writeback * static_cast<double>(drained.size()));
    return ids;
}

size_t Virtqueue::submit_copies(Portal& portal, size_t max_count,
                                const std::vector<Packet>* host_packets, bool to_guest) {
    size_t n = std::min(max_count, avail_.size());
    if (host_packets) n = std::min(n, host_packets->size());
    n = std::min(n, tracker_.capacity() - tracker_.in_flight());
    if (n == 0) return 0;

    rt_.advance((costs_.t_fetch_avail + costs_.t_prep_desc) * static_cast<double>(n));

    std::vector<WorkDescriptor> descs;
    std::vector<Address> slots;
    std::vector<VqDesc> fetched;
    descs.reserve(n);
    for (size_t i = 0; i < n; ++i) {
        VqDesc vd = avail_.front();
        avail_.pop_front();
        fetched.push_back(vd);
        Address completion = rt_.memory().alloc_completion_slot();
        slots.push_back(completion);
        WorkDescriptor d;
        uint32_t len = vd.len;
        if (to_guest) {
            const Packet& pkt = (*host_packets)[i];
            len = std::min(pkt.len, vd.len);
            d = make_copy(pkt.addr, vd.addr, len);
        } else {
            Address host_buf = rt_.memory().create_buffer(vd.len);
            d = make_copy(vd.addr, host_buf, len);
            fetched.back().addr = host_buf;  // remember where the payload lands
        }
        fetched.back().len = len;  // used-ring length reports bytes written
        // Packets are consumed promptly; steer them toward the LLC.
        d.flags |= kFlagRequestCompletion | kFlagCacheControl;
        d.completion_addr = completion;
        descs.push_back(std::move(d));
    }

    auto record_slot = [&](size_t i, int32_t slot) {
        slot_completion_[slot] = slots[i];
        slot_elem_[slot] = UsedElem{fetched[i].id, fetched[i].len};
        if (!to_guest)
            slot_host_buf_[slot] = Packet{fetched[i].addr, fetched[i].len};
        else
            slot_host_buf_[slot] = Packet{};
        inflight_slots_.push_back(slot);
    };

    if (descs.size() == 1) {
        SubmitOutcome out = portal.submit(descs[0]);
        if (!out.accepted()) return 0;
        int32_t slot = tracker_.submit(fetched[0].id);
        record_slot(0, slot);
        return 1;
    }

    BatchBuildResult bb =
        build_batch(rt_.memory(), descs, portal.device().config().limits());
    if (!bb.ok) return 0;
    SubmitOutcome out = portal.submit_batch(bb.batch);
    if (!out.accepted()) return 0;
    for (size_t i = 0; i < descs.size(); ++i) {
        int32_t slot = tracker_.submit(fetched[i].id);
        record_slot(i, slot);
    }
    return descs.size();
}

size_t Virtqueue::enqueue_burst(const PacketBurst& burst, Portal& portal) {
    write_back_completed();
    return submit_copies(portal, burst.packets.size(), &burst.packets, true);
}

PacketBurst Virtqueue::dequeue_burst(Portal& portal, size_t max_burst) {
    write_back_completed();
    PacketBurst out;
    out.packets.swap(ready_packets_);
    submit_copies(portal, max_burst, nullptr, false);
    return out;
}

namespace {

struct ForwardSetup {
    DeviceRuntime rt;
    Device* dev = nullptr;
    std::vector<Address> guest_bufs;
    std::vector<Packet> host_pkts;

    ForwardSetup(const ForwardSpec& spec, uint32_t pkt_size) : rt(spec.seed) {
        dev = rt.add_device(spec.device);
        for (size_t i = 0; i < spec.vq_size; ++i)
            guest_bufs.push_back(rt.memory().create_buffer(2048));
        for (size_t i = 0; i < spec.burst_size; ++i) {
            Address a = rt.memory().create_buffer(pkt_size);
            auto span = rt.memory().resolve(a, pkt_size);
            for (size_t b = 0; b < span.size(); ++b)
                span[b] = static_cast<std::byte>((i + b) & 0xFF);
            host_pkts.push_back(Packet{a, pkt_size});
        }
    }
};

double run_offload_point(const ForwardSpec& spec, uint32_t pkt_size) {
    ForwardSetup s(spec, pkt_size);
    Virtqueue vq(s.rt, spec.vq_size, spec.costs);
    Portal portal(s.rt, *s.dev, 0);
    for (size_t i = 0; i < spec.vq_size; ++i)
        vq.post_avail(s.guest_bufs[i], pkt_size, static_cast<uint16_t>(i));

    PacketBurst burst{s.host_pkts};
    const double t0 = s.rt.now();
    size_t forwarded = 0;
    size_t iterations = 0;
    size_t used_seen = 0;
    while (iterations < spec.iterations) {
        size_t submitted = vq.enqueue_burst(burst, portal);
        // Newly written-back packets complete the forwarding work and their
        // guest buffers return to the avail ring.
        const auto& used = vq.used();
        size_t fresh = used.size() - used_seen;
        if (fresh > 0) {
            s.rt.advance(spec.costs.t_forward * static_cast<double>(fresh));
            for (size_t u = used_seen; u < used.size(); ++u) {
                const UsedElem& e = used[u];
                vq.post_avail(s.guest_bufs[e.id], pkt_size, e.id);
            }
            forwarded += fresh;
            used_seen = used.size();
        }
        if (submitted > 0) {
            ++iterations;
        } else if (!s.rt.sim().empty()) {
            std::lock_guard guard(s.rt.lock());
            s.rt.sim().step();  // starved: wait for the device
        }
    }
    s.rt.run_until_idle();
    for (;;) {
        size_t before = vq.used().size();
        vq.write_back_completed();
        size_t fresh = vq.used().size() - before;
        if (fresh == 0) break;
        s.rt.advance(spec.costs.t_forward * static_cast<double>(fresh));
        forwarded += fresh;
        used_seen = vq.used().size();
    }
    const double elapsed = s.rt.now() - t0;
    return elapsed > 0 ? static_cast<double>(forwarded) / elapsed * 1000.0 : 0.0;
}

double run_cpu_point(const ForwardSpec& spec, uint32_t pkt_size) {
    ForwardSetup s(spec, pkt_size);
    const TimingModel& tm = s.dev->config().timing;
    const double t0 = s.rt.now();
    size_t forwarded = 0;
    for (size_t it = 0; it < spec.iterations; ++it) {
        for (size_t p = 0; p < spec.burst_size; ++p) {
            double cost = spec.costs.t_fetch_avail + spec.costs.t_writeback +
                          spec.costs.t_forward +
                          software_baseline(tm, Opcode::mem_copy, pkt_size);
            s.rt.advance(cost);
            forwarded++;
        }
    }
    const double elapsed = s.rt.now() - t0;
    return elapsed > 0 ? static_cast<double>(forwarded) / elapsed * 1000.0 : 0.0;
}

}  // namespace

std::vector<ForwardRow> forward_benchmark(const ForwardSpec& spec) {
    std::vector<ForwardRow> rows;
    for (uint32_t size : spec.packet_sizes) {
        rows.push_back(ForwardRow{size, ForwardMode::cpu_copy, run_cpu_point(spec, size)});
        rows.push_back(
            ForwardRow{size, ForwardMode::dsa_offload, run_offload_point(spec, size)});
    }
    return rows;
}

std::string forward_csv(const std::vector<ForwardRow>& rows) {
    std::ostringstream os;
    os << "packet_size,mode,mpps\n";
    for (const ForwardRow& r : rows) {
        char buf[64];
        std::snprintf(buf, sizeof(buf), "%.6g", r.mpps);
        os << r.packet_size << ',' << to_string(r.mode) << ',' << buf << '\n';
    }
    return os.str();
}

}  // namespace dsaemu::vring
