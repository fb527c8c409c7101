#include "dsaemu/config.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <set>

namespace dsaemu {

std::string_view to_string(WqMode m) {
    return m == WqMode::dedicated ? "dwq" : "swq";
}

std::string_view to_string(ConfigError e) {
    switch (e) {
        case ConfigError::ok: return "ok";
        case ConfigError::io: return "io";
        case ConfigError::parse: return "parse";
        case ConfigError::wq_without_group: return "wq_without_group";
        case ConfigError::wq_in_multiple_groups: return "wq_in_multiple_groups";
        case ConfigError::engine_in_multiple_groups: return "engine_in_multiple_groups";
        case ConfigError::group_without_engines: return "group_without_engines";
        case ConfigError::entries_exceed_total: return "entries_exceed_total";
        case ConfigError::read_buffers_exceed_total: return "read_buffers_exceed_total";
        case ConfigError::no_read_buffers: return "no_read_buffers";
        case ConfigError::bad_priority: return "bad_priority";
        case ConfigError::bad_timing: return "bad_timing";
    }
    return "?";
}

DeviceConfig default_device_config() { return make_device_config(8, 16, WqMode::dedicated, 4); }

DeviceConfig make_device_config(uint32_t n_wqs, uint32_t entries, WqMode mode,
                                uint32_t n_engines) {
    DeviceConfig cfg;
    cfg.n_engines = n_engines;
    GroupConfig group;
    group.read_buffers = cfg.total_read_buffers;
    for (uint32_t i = 0; i < n_wqs; ++i) {
        cfg.wqs.push_back(WorkQueueConfig{mode, entries, 5, 0});
        group.wq_ids.push_back(i);
    }
    for (uint32_t e = 0; e < n_engines; ++e) group.engine_ids.push_back(e);
    cfg.groups.push_back(std::move(group));
    return cfg;
}

ConfigError validate_config(const DeviceConfig& cfg) {
    if (!cfg.timing.valid()) return ConfigError::bad_timing;
    std::set<uint32_t> seen_wqs, seen_engines;
    for (const GroupConfig& g : cfg.groups) {
        if (!g.wq_ids.empty() && g.engine_ids.empty())
            return ConfigError::group_without_engines;
        if (!g.wq_ids.empty() && g.read_buffers == 0)
            return ConfigError::no_read_buffers;  // zero bandwidth would stall
        for (uint32_t wq : g.wq_ids)
            if (!seen_wqs.insert(wq).second) return ConfigError::wq_in_multiple_groups;
        for (uint32_t e : g.engine_ids) {
            if (e >= cfg.n_engines) return ConfigError::engine_in_multiple_groups;
            if (!seen_engines.insert(e).second)
                return ConfigError::engine_in_multiple_groups;
        }
    }
    uint64_t total_entries = 0;
    uint64_t total_rb = 0;
    for (const GroupConfig& g : cfg.groups) total_rb += g.read_buffers;
    if (total_rb > cfg.total_read_buffers) return ConfigError::read_buffers_exceed_total;
    for (size_t i = 0; i < cfg.wqs.size(); ++i) {
        const WorkQueueConfig& wq = cfg.wqs[i];
        if (wq.entries < 1) return ConfigError::entries_exceed_total;
        total_entries += wq.entries;
        if (wq.priority < 1 || wq.priority > 15) return ConfigError::bad_priority;
        if (wq.group_id >= cfg.groups.size() ||
            !seen_wqs.contains(static_cast<uint32_t>(i)))
            return ConfigError::wq_without_group;
    }
    if (total_entries > cfg.total_wq_entries) return ConfigError::entries_exceed_total;
    return ConfigError::ok;
}

namespace {

std::vector<uint32_t> parse_id_list(const std::string& s) {
    std::vector<uint32_t> ids;
    size_t pos = 0;
    while (pos < s.size()) {
        size_t comma = s.find(',', pos);
        if (comma == std::string::npos) comma = s.size();
        ids.push_back(static_cast<uint32_t>(std::stoul(s.substr(pos, comma - pos))));
        pos = comma + 1;
    }
    return ids;
}

void load_tier(const boost::property_tree::ptree& pt, const std::string& section,
               TierParams& tier) {
    // Section names contain dots; look them up as flat keys.
    using path = boost::property_tree::ptree::path_type;
    if (auto child = pt.get_child_optional(path(section, '\0'))) {
        tier.read_bw = child->get<double>("read_gbps", tier.read_bw);
        tier.write_bw = child->get<double>("write_gbps", tier.write_bw);
        tier.extra_latency = child->get<double>("extra_latency_ns", tier.extra_latency);
    }
}

}  // namespace

ConfigLoadResult load_device_config(const std::string& path) {
    ConfigLoadResult result;
    boost::property_tree::ptree pt;
    try {
        boost::property_tree::read_ini(path, pt);
    } catch (const boost::property_tree::ini_parser_error&) {
        result.error = ConfigError::io;
        return result;
    }

    DeviceConfig cfg;
    cfg.wqs.clear();
    cfg.groups.clear();
    try {
        if (auto dev = pt.get_child_optional("device")) {
            cfg.n_engines = dev->get<uint32_t>("engines", cfg.n_engines);
            cfg.total_wq_entries = dev->get<uint32_t>("total_wq_entries", cfg.total_wq_entries);
            cfg.total_read_buffers =
                dev->get<uint32_t>("read_buffers", cfg.total_read_buffers);
            cfg.max_batch_size = dev->get<uint32_t>("max_batch_size", cfg.max_batch_size);
            cfg.max_transfer_size =
                dev->get<uint64_t>("max_transfer_size", cfg.max_transfer_size);
        }
        TimingModel& tm = cfg.timing;
        if (auto t = pt.get_child_optional("timing")) {
            tm.t_submit_dwq = t->get<double>("t_submit_dwq_ns", tm.t_submit_dwq);
            tm.t_submit_swq_roundtrip =
                t->get<double>("t_submit_swq_ns", tm.t_submit_swq_roundtrip);
            tm.t_desc_fetch = t->get<double>("t_desc_fetch_ns", tm.t_desc_fetch);
            tm.t_batch_fetch = t->get<double>("t_batch_fetch_ns", tm.t_batch_fetch);
            tm.t_translate = t->get<double>("t_translate_ns", tm.t_translate);
            tm.t_pe_fixed = t->get<double>("t_pe_fixed_ns", tm.t_pe_fixed);
            tm.b_pe_max = t->get<double>("b_pe_gbps", tm.b_pe_max);
            tm.b_fabric = t->get<double>("b_fabric_gbps", tm.b_fabric);
            tm.rb_nominal_per_engine =
                t->get<uint32_t>("rb_nominal_per_engine", tm.rb_nominal_per_engine);
            tm.t_alloc_desc = t->get<double>("t_alloc_desc_ns", tm.t_alloc_desc);
            tm.t_prepare_desc = t->get<double>("t_prepare_desc_ns", tm.t_prepare_desc);
            tm.t_core_fixed = t->get<double>("t_core_fixed_ns", tm.t_core_fixed);
            tm.t_core_per_byte = t->get<double>("t_core_per_byte_ns", tm.t_core_per_byte);
        }
        if (auto s = pt.get_child_optional("socket")) {
            tm.b_socket = s->get<double>("b_socket_gbps", tm.b_socket);
            tm.ddio_footprint_limit =
                s->get<double>("ddio_footprint_bytes", tm.ddio_footprint_limit);
            tm.ddio_spill_bw = s->get<double>("ddio_spill_gbps", tm.ddio_spill_bw);
        }
        load_tier(pt, "tier.local_dram", tm.tier(MemTier::local_dram));
        load_tier(pt, "tier.remote_dram", tm.tier(MemTier::remote_dram));
        load_tier(pt, "tier.cxl", tm.tier(MemTier::cxl));
        load_tier(pt, "tier.llc", tm.tier(MemTier::llc));
        if (auto f = pt.get_child_optional("fault")) {
            cfg.fault.stall_probability =
                f->get<double>("stall_probability", cfg.fault.stall_probability);
            cfg.fault.t_fault = f->get<double>("t_fault_ns", cfg.fault.t_fault);
        }
        for (uint32_t g = 0;; ++g) {
            auto child = pt.get_child_optional("group" + std::to_string(g));
            if (!child) break;
            GroupConfig group;
            group.wq_ids = parse_id_list(child->get<std::string>("wqs", ""));
            group.engine_ids = parse_id_list(child->get<std::string>("engines", ""));
            group.read_buffers = child->get<uint32_t>("read_buffers", group.read_buffers);
            cfg.groups.push_back(std::move(group));
        }
        for (uint32_t w = 0;; ++w) {
            auto child = pt.get_child_optional("wq" + std::to_string(w));
            if (!child) break;
            WorkQueueConfig wq;
            const std::string mode = child->get<std::string>("mode", "dedicated");
            wq.mode = (mode == "shared" || mode == "swq") ? WqMode::shared
                                                          : WqMode::dedicated;
            wq.entries = child->get<uint32_t>("entries", wq.entries);
            wq.priority = child->get<uint32_t>("priority", wq.priority);
            wq.group_id = child->get<uint32_t>("group", wq.group_id);
            cfg.wqs.push_back(wq);
        }
    } catch (const std::exception&) {
        result.error = ConfigError::parse;
        return result;
    }

    if (cfg.wqs.empty() && cfg.groups.empty()) {
        DeviceConfig defaults = default_device_config();
        cfg.wqs = defaults.wqs;
        cfg.groups = defaults.groups;
        cfg.groups[0].read_buffers = cfg.total_read_buffers;
        // keep engine list consistent with configured engine count
        cfg.groups[0].engine_ids.clear();
        for (uint32_t e = 0; e < cfg.n_engines; ++e) cfg.groups[0].engine_ids.push_back(e);
    }

    result.error = validate_config(cfg);
    if (result.error == ConfigError::ok) result.config = std::move(cfg);
    return result;
}

}  // namespace dsaemu
