// Timing parameters driving the discrete-event clock. Times are in
// simulated nanoseconds; bandwidths are in bytes per nanosecond, which is
// numerically equal to GB/s (decimal).
#pragma once

#include <array>
#include <cstdint>

#include "dsaemu/types.hpp"

namespace dsaemu {

struct TierParams {
    double read_bw = 80.0;      // bytes/ns
    double write_bw = 80.0;     // bytes/ns
    double extra_latency = 0.0; // ns added to the descriptor pipeline
};

/// Per-descriptor and per-byte cost parameters. Defaults are a calibrated
/// set, not hardware measurements; everything is overridable through the
/// device config file.
struct TimingModel {
    // Submission costs on the client.
    double t_submit_dwq = 30.0;           // posted 64-byte write
    double t_submit_swq_roundtrip = 80.0; // non-posted submit with status return

    // Device pipeline. Descriptor fetch and address translation overlap
    // the previous descriptor's execution on the same engine (they are
    // latency, not engine occupancy); batch sub-descriptors skip the
    // descriptor fetch since the batch engine fetched the whole array.
    double t_desc_fetch = 250.0;
    double t_batch_fetch = 400.0;
    double t_translate = 50.0;
    double t_pe_fixed = 150.0;  // minimum engine execution time per descriptor

    double b_pe_max = 30.0;   // per-engine bandwidth cap at full read buffers
    double b_fabric = 30.0;   // per-device I/O fabric ceiling
    uint32_t rb_nominal_per_engine = 24;  // read buffers for full b_pe_max

    // Client-side costs reported by the latency breakdown; allocation and
    // preparation are excluded from speedup math.
    double t_alloc_desc = 500.0;
    double t_prepare_desc = 20.0;

    // Software baseline running on a core (~12 GB/s asymptotic).
    double t_core_fixed = 20.0;
    double t_core_per_byte = 1.0 / 12.0;

    // Socket-level model for multiple devices. The DDIO knob caps each
    // device once the in-flight write footprint exceeds the limit,
    // reproducing the multi-device large-transfer roll-off; it is a
    // calibration knob and ships disabled (limit 0).
    double b_socket = 120.0;
    double ddio_footprint_limit = 0;  // bytes of in-flight writes; 0 disables
    double ddio_spill_bw = 22.5;      // per-device cap once exceeded

    std::array<TierParams, kNumTiers> tiers{
        TierParams{80.0, 80.0, 0.0},    // local_dram
        TierParams{40.0, 40.0, 100.0},  // remote_dram
        TierParams{20.0, 10.0, 300.0},  // cxl
        TierParams{200.0, 200.0, 0.0},  // llc
    };

    const TierParams& tier(MemTier t) const { return tiers[static_cast<size_t>(t)]; }
    TierParams& tier(MemTier t) { return tiers[static_cast<size_t>(t)]; }

    bool valid() const;
};

/// Simulated time for one software (core) execution of an operation of
/// `size` bytes with the given source/destination tiers.
double software_baseline(const TimingModel& tm, Opcode op, uint64_t size,
                         MemTier src_tier = MemTier::local_dram,
                         MemTier dst_tier = MemTier::local_dram);

}  // namespace dsaemu
