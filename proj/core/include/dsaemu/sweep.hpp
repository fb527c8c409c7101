// Microbenchmark harness core: parameter sweeps over operation, transfer
// size, batch size, queue depth, WQ/group topology and memory tiers, with
// CSV output, a latency breakdown, and the guideline presets.
//
// Submitters are modeled inside the discrete-event simulation (closed loop,
// one submission chain per thread), so a sweep with a fixed seed is fully
// deterministic and reruns produce byte-identical CSV.
#pragma once

#include <optional>
#include <string>
#include <vector>

#include "dsaemu/config.hpp"
#include "dsaemu/device.hpp"

namespace dsaemu::bench {

enum class SubmitMode : uint8_t { sync = 0, async = 1 };

std::string_view to_string(SubmitMode m);

struct SweepSpec {
    Opcode op = Opcode::mem_copy;
    std::vector<uint64_t> transfer_sizes{4096};
    std::vector<uint32_t> batch_sizes{1};
    uint32_t queue_depth = 32;
    SubmitMode mode = SubmitMode::async;
    WqMode wq_mode = WqMode::dedicated;
    uint32_t n_wqs = 1;
    uint32_t wq_entries = 32;
    uint32_t n_engines = 4;
    uint32_t n_devices = 1;
    uint32_t n_threads = 0;  // 0: one submitter per device
    MemTier src_tier = MemTier::local_dram;
    MemTier dst_tier = MemTier::local_dram;
    bool cache_control = false;
    bool huge_pages = false;  // accepted for parity; no timing effect
    uint32_t iterations = 400;  // submissions per thread per point
    uint64_t seed = 1;
    double fault_probability = 0;
    double t_fault = 2000;
    std::optional<DeviceConfig> device_override;  // from a config file
};

struct SweepRow {
    std::string op;
    std::string mode;
    uint64_t ts = 0;
    uint32_t bs = 0;
    uint32_t qd = 0;
    std::string wq_mode;
    uint32_t n_engines = 0;
    uint32_t n_devices = 0;
    std::string src_tier;
    std::string dst_tier;
    double thr_gbps = 0;
    double base_gbps = 0;
    double speedup = 0;
    double lat_mean_ns = 0;
    double lat_p99_ns = 0;
    double wait_frac = 0;
};

struct SweepResult {
    bool ok = false;
    ConfigError error = ConfigError::ok;
    std::vector<SweepRow> rows;
    double wall_ms = 0;  // wall clock of the functional backend, never in CSV
    // One snapshot per device per row, plus the point's simulated end time.
    std::vector<std::vector<Telemetry>> telemetry;
    std::vector<double> sim_end_ns;
};

SweepResult run_sweep(const SweepSpec& spec);

/// CSV rows with the stable schema; `comments` become leading '#' lines.
std::string to_csv(const std::vector<SweepRow>& rows,
                   const std::vector<std::string>& comments = {});

struct LatencyBreakdown {
    double allocate = 0;  // per descriptor; excluded from speedup math
    double prepare = 0;   // per descriptor
    double submit = 0;    // per descriptor (amortized over a batch)
    double wait = 0;      // per descriptor
    double total() const { return allocate + prepare + submit + wait; }
    double end_to_end = 0;  // one submission, batch-granular
};

/// Phase times for one synchronous offload of `bs` descriptors of `ts`
/// bytes, from a fresh default device.
LatencyBreakdown run_latency_breakdown(Opcode op, uint64_t ts, uint32_t bs,
                                       const TimingModel& tm = {});

struct GuidelineReport {
    std::string name;
    bool passed = false;
    std::string conclusion;
    std::vector<std::string> checks;  // human-readable "measured vs expected"
};

/// Runs the canonical experiment for guideline G1..G6 and asserts its
/// qualitative conclusion.
GuidelineReport run_guideline_preset(const std::string& name, uint64_t seed = 1);

std::vector<std::string> guideline_names();

}  // namespace dsaemu::bench
