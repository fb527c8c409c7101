// Monotone counters observable per WQ and per device, plus a JSON-lines dump.
#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace dsaemu {

struct WqTelemetry {
    uint64_t submitted = 0;       // accepted descriptors (batch counts as one)
    uint64_t retries = 0;         // shared-WQ submissions bounced back
    uint64_t completed = 0;
    uint64_t occupancy_peak = 0;
};

struct Telemetry {
    uint64_t descriptors_completed = 0;  // includes batch sub-descriptors
    uint64_t batches_completed = 0;
    uint64_t bytes_read = 0;
    uint64_t bytes_written = 0;
    uint64_t retries = 0;
    uint64_t faults_injected = 0;
    uint64_t cache_lines_flushed = 0;  // byte count from cache-flush ops
    double engine_busy_ns = 0;         // summed across engines
    std::vector<double> per_engine_busy_ns;
    double wait_state_ns = 0;          // client time in blocked waits (UMWAIT analog)
    double busy_poll_ns = 0;           // client time spin-polling
    double submit_busy_ns = 0;         // client time issuing submissions
    double lock_wait_ns = 0;           // time spent contending shared portals
    std::vector<WqTelemetry> per_wq;
};

/// One JSON object per line: {"t":..., "device":..., counters...}.
void dump_telemetry_jsonl(std::ostream& os, const Telemetry& t, double sim_now,
                          const std::string& device_label);

}  // namespace dsaemu
