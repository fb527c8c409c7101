#include "dsaemu/telemetry.hpp"

#include <nlohmann/json.hpp>

#include <ostream>

namespace dsaemu {

void dump_telemetry_jsonl(std::ostream& os, const Telemetry& t, double sim_now,
                          const std::string& device_label) {
    nlohmann::json j{
        {"t", sim_now},
        {"device", device_label},
        {"descriptors_completed", t.descriptors_completed},
        {"batches_completed", t.batches_completed},
        {"bytes_read", t.bytes_read},
        {"bytes_written", t.bytes_written},
        {"retries", t.retries},
        {"faults_injected", t.faults_injected},
        {"cache_lines_flushed", t.cache_lines_flushed},
        {"engine_busy_ns", t.engine_busy_ns},
        {"wait_state_ns", t.wait_state_ns},
        {"busy_poll_ns", t.busy_poll_ns},
        {"submit_busy_ns", t.submit_busy_ns},
        {"lock_wait_ns", t.lock_wait_ns},
    };
    j["per_engine_busy_ns"] = t.per_engine_busy_ns;
    auto& wqs = j["wqs"] = nlohmann::json::array();
    for (const WqTelemetry& w : t.per_wq)
        wqs.push_back({{"submitted", w.submitted},
                       {"retries", w.retries},
                       {"completed", w.completed},
                       {"occupancy_peak", w.occupancy_peak}});
    os << j.dump() << '\n';
}

}  // namespace dsaemu
