#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <map>

#include "dsaemu/vring.hpp"
#include "oracles.hpp"

using namespace dsaemu;
using namespace dsaemu::vring;

namespace {

struct VringRig {
    DeviceRuntime rt;
    Device* dev = nullptr;
    std::vector<Address> guest_bufs;

    explicit VringRig(DeviceConfig cfg = default_device_config(), size_t vq_size = 256)
        : rt(1) {
        dev = rt.add_device(cfg);
        REQUIRE(dev != nullptr);
        for (size_t i = 0; i < vq_size; ++i)
            guest_bufs.push_back(rt.memory().create_buffer(2048));
    }

    PacketBurst make_burst(size_t n, uint32_t size, std::mt19937_64& rng,
                           std::vector<std::vector<std::byte>>* payloads = nullptr) {
        PacketBurst burst;
        for (size_t i = 0; i < n; ++i) {
            Address a = rt.memory().create_buffer(size);
            auto bytes = oracle::random_bytes(rng, size);
            auto span = rt.memory().resolve(a, size);
            std::copy(bytes.begin(), bytes.end(), span.begin());
            if (payloads) payloads->push_back(std::move(bytes));
            burst.packets.push_back(Packet{a, size});
        }
        return burst;
    }
};

}  // namespace

TEST_CASE("first iteration submits the burst with nothing to write back") {
    VringRig rig;
    Virtqueue vq(rig.rt, 256);
    Portal portal(rig.rt, *rig.dev, 0);
    for (size_t i = 0; i < 256; ++i)
        vq.post_avail(rig.guest_bufs[i], 512, static_cast<uint16_t>(i));
    std::mt19937_64 rng(1);
    PacketBurst burst = rig.make_burst(32, 512, rng);
    CHECK(vq.enqueue_burst(burst, portal) == 32);
    CHECK(vq.used().empty());
    CHECK(vq.in_flight() == 32);
}

TEST_CASE("second iteration writes back the completed burst before submitting") {
    VringRig rig;
    Virtqueue vq(rig.rt, 256);
    Portal portal(rig.rt, *rig.dev, 0);
    for (size_t i = 0; i < 256; ++i)
        vq.post_avail(rig.guest_bufs[i], 512, static_cast<uint16_t>(i));
    std::mt19937_64 rng(2);
    PacketBurst burst = rig.make_burst(32, 512, rng);
    REQUIRE(vq.enqueue_burst(burst, portal) == 32);
    rig.rt.run_until_idle();  // all copies complete
    CHECK(vq.enqueue_burst(burst, portal) == 32);
    CHECK(vq.used().size() == 32);  // prior iteration written back first
    CHECK(vq.in_flight() == 32);
    rig.rt.run_until_idle();
}

TEST_CASE("payloads land in the guest buffers exactly") {
    VringRig rig;
    Virtqueue vq(rig.rt, 64);
    Portal portal(rig.rt, *rig.dev, 0);
    for (size_t i = 0; i < 8; ++i)
        vq.post_avail(rig.guest_bufs[i], 512, static_cast<uint16_t>(i));
    std::mt19937_64 rng(3);
    std::vector<std::vector<std::byte>> payloads;
    PacketBurst burst = rig.make_burst(8, 512, rng, &payloads);
    REQUIRE(vq.enqueue_burst(burst, portal) == 8);
    rig.rt.run_until_idle();
    vq.write_back_completed();
    REQUIRE(vq.used().size() == 8);
    for (size_t i = 0; i < 8; ++i) {
        auto span = rig.rt.memory().resolve(rig.guest_bufs[i], 512);
        CHECK(std::equal(payloads[i].begin(), payloads[i].end(), span.begin()));
    }
}

TEST_CASE("used-ring order equals avail order under out-of-order completions") {
    DeviceConfig cfg = default_device_config();
    cfg.fault.stall_probability = 0.35;  // randomized per-descriptor latencies
    cfg.fault.t_fault = 5000;
    VringRig rig(cfg);
    Virtqueue vq(rig.rt, 256);
    Portal portal(rig.rt, *rig.dev, 0);
    std::mt19937_64 rng(4);

    std::vector<uint16_t> avail_order;
    uint16_t next_id = 0;
    auto refill = [&](size_t count) {
        for (size_t i = 0; i < count; ++i) {
            uint16_t id = next_id++ % 256;
            vq.post_avail(rig.guest_bufs[id], 256, id);
            avail_order.push_back(id);
        }
    };
    refill(256);

    PacketBurst burst = rig.make_burst(32, 256, rng);
    for (int iter = 0; iter < 10; ++iter) {
        size_t submitted = vq.enqueue_burst(burst, portal);
        refill(submitted);
        rig.rt.advance(5000);  // leave completions in flight across iterations
    }
    rig.rt.run_until_idle();
    vq.write_back_completed();

    const auto& used = vq.used();
    REQUIRE(used.size() == 320);
    for (size_t i = 0; i < used.size(); ++i) CHECK(used[i].id == avail_order[i]);
}

TEST_CASE("dequeue mirrors enqueue: payload round-trip host->guest->host") {
    VringRig rig;
    std::mt19937_64 rng(5);

    // Enqueue: host payloads into guest buffers.
    Virtqueue rx(rig.rt, 64);
    Portal portal(rig.rt, *rig.dev, 0);
    for (size_t i = 0; i < 8; ++i)
        rx.post_avail(rig.guest_bufs[i], 512, static_cast<uint16_t>(i));
    std::vector<std::vector<std::byte>> payloads;
    PacketBurst burst = rig.make_burst(8, 512, rng, &payloads);
    REQUIRE(rx.enqueue_burst(burst, portal) == 8);
    rig.rt.run_until_idle();

    // Dequeue: guest buffers back out to host memory.
    Virtqueue tx(rig.rt, 64);
    for (size_t i = 0; i < 8; ++i)
        tx.post_avail(rig.guest_bufs[i], 512, static_cast<uint16_t>(i));
    PacketBurst first = tx.dequeue_burst(portal, 8);
    CHECK(first.packets.empty());  // copies only just submitted
    rig.rt.run_until_idle();
    PacketBurst second = tx.dequeue_burst(portal, 8);
    REQUIRE(second.packets.size() == 8);
    for (size_t i = 0; i < 8; ++i) {
        auto span = rig.rt.memory().resolve(second.packets[i].addr, 512);
        CHECK(std::equal(payloads[i].begin(), payloads[i].end(), span.begin()));
    }
}

TEST_CASE("dequeue of an empty queue yields an empty burst") {
    VringRig rig;
    Virtqueue vq(rig.rt, 16);
    Portal portal(rig.rt, *rig.dev, 0);
    PacketBurst burst = vq.dequeue_burst(portal);
    CHECK(burst.packets.empty());
    CHECK(vq.in_flight() == 0);
}

TEST_CASE("partial completion: only the completed prefix is written back") {
    DeviceConfig cfg = make_device_config(1, 32, WqMode::dedicated, 1);
    VringRig rig(cfg);
    Virtqueue vq(rig.rt, 64);
    Portal portal(rig.rt, *rig.dev, 0);
    for (size_t i = 0; i < 16; ++i)
        vq.post_avail(rig.guest_bufs[i], 4096, static_cast<uint16_t>(i));
    std::mt19937_64 rng(6);
    PacketBurst burst = rig.make_burst(16, 4096, rng);
    REQUIRE(vq.enqueue_burst(burst, portal) == 16);
    // Run long enough for some, but not all, copies on the single engine.
    rig.rt.advance(2000);
    auto ids = vq.write_back_completed();
    CHECK(ids.size() < 16);
    for (size_t i = 0; i < ids.size(); ++i) CHECK(ids[i] == i);
    rig.rt.run_until_idle();
}

TEST_CASE("forward benchmark emits one row per size and mode") {
    ForwardSpec spec;
    spec.packet_sizes = {256, 1024};
    spec.iterations = 50;
    auto rows = forward_benchmark(spec);
    REQUIRE(rows.size() == 4);
    for (const auto& r : rows) CHECK(r.mpps > 0);
    std::string csv = forward_csv(rows);
    CHECK(csv.find("packet_size,mode,mpps") == 0);
    CHECK(csv.find("cpu_copy") != std::string::npos);
    CHECK(csv.find("dsa_offload") != std::string::npos);
}
