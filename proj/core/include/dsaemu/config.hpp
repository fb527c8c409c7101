// Device topology and model configuration, with an INI-style file format.
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "dsaemu/descriptor.hpp"
#include "dsaemu/timing.hpp"
#include "dsaemu/types.hpp"

namespace dsaemu {

enum class WqMode : uint8_t { dedicated = 0, shared = 1 };

std::string_view to_string(WqMode m);

struct WorkQueueConfig {
    WqMode mode = WqMode::dedicated;
    uint32_t entries = 16;   // WQ size (WQS)
    uint32_t priority = 5;   // 1..15, weight in the group arbiter
    uint32_t group_id = 0;
};

struct GroupConfig {
    std::vector<uint32_t> wq_ids;
    std::vector<uint32_t> engine_ids;
    uint32_t read_buffers = 96;
};

/// Probability of an engine stall per descriptor (address translation or
/// page-fault handling) and its duration.
struct FaultModel {
    double stall_probability = 0.0;
    double t_fault = 2000.0;  // ns
};

struct DeviceConfig {
    std::vector<GroupConfig> groups;
    std::vector<WorkQueueConfig> wqs;
    uint32_t n_engines = 4;
    uint32_t total_wq_entries = 128;
    uint32_t total_read_buffers = 96;
    uint32_t max_batch_size = 1024;
    uint64_t max_transfer_size = 2ull << 30;
    TimingModel timing;
    FaultModel fault;

    ValidationLimits limits() const { return {max_transfer_size, max_batch_size}; }
};

/// 8 WQs and 4 engines in one group, 16 entries per WQ.
DeviceConfig default_device_config();

/// Topology with `n_wqs` queues of `entries` each and `n_engines` engines,
/// all in one group.
DeviceConfig make_device_config(uint32_t n_wqs, uint32_t entries, WqMode mode,
                                uint32_t n_engines);

enum class ConfigError : uint8_t {
    ok = 0,
    io,
    parse,
    wq_without_group,
    wq_in_multiple_groups,
    engine_in_multiple_groups,
    group_without_engines,
    entries_exceed_total,
    read_buffers_exceed_total,
    no_read_buffers,
    bad_priority,
    bad_timing,
};

std::string_view to_string(ConfigError e);

/// Structural checks: every WQ and engine in exactly one group, groups with
/// WQs have engines, entry and read-buffer totals within device limits.
ConfigError validate_config(const DeviceConfig& cfg);

struct ConfigLoadResult {
    ConfigError error = ConfigError::ok;
    DeviceConfig config;
    bool ok() const { return error == ConfigError::ok; }
};

/// Loads an INI file with [device], [timing], [fault], [socket],
/// [tier.<name>], [group<N>] and [wq<N>] sections; unspecified keys keep
/// their defaults.
ConfigLoadResult load_device_config(const std::string& path);

}  // namespace dsaemu
