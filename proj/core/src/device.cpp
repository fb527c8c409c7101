#include "dsaemu/device.hpp"

#include <algorithm>
#include <cassert>
#include <list>

#include "dsaemu/data_ops.hpp"

namespace dsaemu {
namespace {

constexpr double kByteEps = 1e-6;

/// Max-min fair split of `budget` over demands; equal share among
/// unsaturated demands.
void waterfill(const std::vector<double>& caps, double budget, std::vector<double>& out) {
    const size_t n = caps.size();
    out.assign(n, 0.0);
    if (n == 0) return;
    std::vector<size_t> order(n);
    for (size_t i = 0; i < n; ++i) order[i] = i;
    std::sort(order.begin(), order.end(),
              [&](size_t a, size_t b) { return caps[a] < caps[b]; });
    double remaining = budget;
    size_t left = n;
    for (size_t i : order) {
        const double share = remaining / static_cast<double>(left);
        const double a = std::min(caps[i], share);
        out[i] = a;
        remaining -= a;
        --left;
    }
}

struct MemProfile {
    bool reads_src = false;
    bool reads_dst = false;   // second-source operations
    bool writes_dst = false;
    bool dual_write = false;  // dualcast writes the payload twice
};

MemProfile mem_profile(const WorkDescriptor& d) {
    MemProfile p;
    switch (d.opcode) {
        case Opcode::mem_copy: p.reads_src = p.writes_dst = true; break;
        case Opcode::dualcast:
            p.reads_src = p.writes_dst = p.dual_write = true;
            break;
        case Opcode::mem_fill: p.writes_dst = true; break;
        case Opcode::mem_compare: p.reads_src = p.reads_dst = true; break;
        case Opcode::compare_pattern: p.reads_src = true; break;
        case Opcode::crc_gen:
            p.reads_src = true;
            p.writes_dst = !d.dst_addr.is_null();
            break;
        case Opcode::dif: {
            p.reads_src = true;
            const auto* dp = std::get_if<ops::DifParams>(&d.op_params);
            p.writes_dst = dp && dp->mode != ops::DifMode::check;
            break;
        }
        case Opcode::delta_create: p.reads_src = p.reads_dst = true; break;
        case Opcode::delta_apply: p.reads_src = p.writes_dst = true; break;
        case Opcode::cache_flush: p.reads_dst = true; break;  // read-only pass
        default: break;
    }
    return p;
}

}  // namespace

struct Device::Impl {
    struct BatchRun;

    struct WorkItem {
        WorkDescriptor desc;
        uint32_t wq_id = 0;
        DescriptorId id = 0;
        CompletionSlot* slot = nullptr;
        CompletionCallback cb;
        BatchRun* parent = nullptr;
        uint32_t sub_index = 0;
        double enqueue_time = 0;
        MemTier src_tier = MemTier::local_dram;
        MemTier dst_tier = MemTier::local_dram;  // effective (cache-control applied)
        MemTier dst_raw_tier = MemTier::local_dram;
        MemProfile profile;
    };

    struct BatchRun {
        BatchDescriptor bd;
        uint32_t wq_id = 0;
        DescriptorId id = 0;
        CompletionSlot* slot = nullptr;
        CompletionCallback cb;
        SubCompletionCallback sub_cb;
        double enqueue_time = 0;
        uint32_t total = 0;
        uint32_t terminal = 0;
        uint32_t successes = 0;
        std::vector<bool> done;
        uint32_t prefix_done = 0;
        uint32_t first_fail_index = UINT32_MAX;
        CompletionStatus first_fail_status = CompletionStatus::success;
        std::list<std::unique_ptr<BatchRun>>::iterator self;
    };

    /// Items wait in `staging` while the device front end fetches and
    /// translates them (pipelined, in order), then become dispatchable.
    struct WqState {
        WorkQueueConfig cfg;
        std::deque<std::unique_ptr<WorkItem>> staging;
        std::deque<std::unique_ptr<WorkItem>> ready;
        std::deque<std::unique_ptr<WorkItem>> sub_staging;
        std::deque<std::unique_ptr<WorkItem>> sub_ready;
        double last_ready = 0;
        double last_sub_ready = 0;
        uint32_t occupancy = 0;
    };

    struct GroupState {
        GroupConfig cfg;
        std::vector<uint32_t> wq_order;
        size_t arb_idx = 0;
        uint32_t arb_credits = 0;
        double b_pe_eff = 0;
    };

    struct EngineState {
        uint32_t group_id = 0;
        bool in_group = false;
        std::unique_ptr<WorkItem> executing;
        bool exec_busy = false;
        double exec_start = 0;
        // transfer phase
        bool transferring = false;
        double bytes_left = 0;
        double rate = 0;
        double last_settle = 0;
        double floor_end = 0;
        double solo_cap = 0;
        double write_footprint = 0;
        uint64_t epoch = 0;
    };

    DeviceCluster& cluster;
    SimContext& sim;
    AddressSpace& mem;
    Device& self;
    DeviceConfig cfg;
    uint32_t index = 0;
    ValidationLimits limits;

    std::deque<WqState> wqs;
    std::vector<GroupState> groups;
    std::deque<EngineState> engines;
    std::list<std::unique_ptr<BatchRun>> batch_runs;

    Telemetry tel;
    uint64_t accepted = 0;
    uint64_t terminal = 0;
    DescriptorId next_id = 1;

    Impl(DeviceCluster& c, Device& d, DeviceConfig config, uint32_t idx)
        : cluster(c), sim(c.sim()), mem(c.memory()), self(d), cfg(std::move(config)),
          index(idx), limits(cfg.limits()) {
        wqs.resize(cfg.wqs.size());
        for (size_t i = 0; i < cfg.wqs.size(); ++i) wqs[i].cfg = cfg.wqs[i];
        tel.per_wq.resize(cfg.wqs.size());
        tel.per_engine_busy_ns.assign(cfg.n_engines, 0.0);
        engines.resize(cfg.n_engines);
        groups.resize(cfg.groups.size());
        for (size_t g = 0; g < cfg.groups.size(); ++g) {
            groups[g].cfg = cfg.groups[g];
            groups[g].wq_order = cfg.groups[g].wq_ids;
            std::sort(groups[g].wq_order.begin(), groups[g].wq_order.end());
            if (!groups[g].wq_order.empty())
                groups[g].arb_credits = wqs[groups[g].wq_order[0]].cfg.priority;
            const size_t n_eng = cfg.groups[g].engine_ids.size();
            const double rb_per_engine =
                n_eng ? static_cast<double>(cfg.groups[g].read_buffers) /
                            static_cast<double>(n_eng)
                      : 0.0;
            const double frac =
                std::min(1.0, rb_per_engine /
                                  static_cast<double>(cfg.timing.rb_nominal_per_engine));
            groups[g].b_pe_eff = cfg.timing.b_pe_max * frac;
            for (uint32_t e : cfg.groups[g].engine_ids) {
                engines[e].group_id = static_cast<uint32_t>(g);
                engines[e].in_group = true;
            }
        }
    }

    // ---- front-end pipeline ---------------------------------------------------

    double frontend_latency(const WorkItem& item) const {
        const TimingModel& tm = cfg.timing;
        double t = item.parent ? 0.0 : tm.t_desc_fetch;
        t += tm.t_translate;
        if (item.profile.reads_src) t += tm.tier(item.src_tier).extra_latency;
        if (item.profile.reads_dst) t += tm.tier(item.dst_raw_tier).extra_latency;
        if (item.profile.writes_dst) t += tm.tier(item.dst_tier).extra_latency;
        return t;
    }

    void stage_item(std::unique_ptr<WorkItem> item, bool is_sub) {
        const uint32_t wq_id = item->wq_id;
        WqState& wq = wqs[wq_id];
        const double latency = frontend_latency(*item);
        double& last = is_sub ? wq.last_sub_ready : wq.last_ready;
        const double ready_at = std::max(sim.now() + latency, last);
        last = ready_at;
        (is_sub ? wq.sub_staging : wq.staging).push_back(std::move(item));
        sim.schedule(ready_at, [this, wq_id, is_sub] { on_ready(wq_id, is_sub); });
    }

    void on_ready(uint32_t wq_id, bool is_sub) {
        WqState& wq = wqs[wq_id];
        auto& from = is_sub ? wq.sub_staging : wq.staging;
        auto& to = is_sub ? wq.sub_ready : wq.ready;
        assert(!from.empty());
        to.push_back(std::move(from.front()));
        from.pop_front();
        pump_group(wq.cfg.group_id);
    }

    // ---- arbiter ------------------------------------------------------------

    bool fence_blocked(const WorkItem& item) const {
        return item.parent && item.desc.has_flag(kFlagFence) &&
               item.parent->prefix_done < item.sub_index;
    }

    bool wq_dispatchable(const WqState& wq) const {
        if (!wq.sub_ready.empty() && !fence_blocked(*wq.sub_ready.front())) return true;
        return !wq.ready.empty();
    }

    std::unique_ptr<WorkItem> take_from(WqState& wq) {
        if (!wq.sub_ready.empty() && !fence_blocked(*wq.sub_ready.front())) {
            auto item = std::move(wq.sub_ready.front());
            wq.sub_ready.pop_front();
            return item;
        }
        auto item = std::move(wq.ready.front());
        wq.ready.pop_front();
        assert(wq.occupancy > 0);
        wq.occupancy--;
        return item;
    }

    /// Weighted round-robin with a hard anti-starvation bound: each WQ gets
    /// up to `priority` grants per cycle and an empty or exhausted WQ
    /// forfeits to the next, so any non-empty WQ is served within one full
    /// cycle (<= sum of priorities grants).
    std::unique_ptr<WorkItem> arbiter_pick(GroupState& g) {
        const size_t n = g.wq_order.size();
        if (n == 0) return nullptr;
        for (size_t scanned = 0; scanned <= n; ++scanned) {
            WqState& wq = wqs[g.wq_order[g.arb_idx]];
            if (g.arb_credits > 0 && wq_dispatchable(wq)) {
                g.arb_credits--;
                return take_from(wq);
            }
            g.arb_idx = (g.arb_idx + 1) % n;
            g.arb_credits = wqs[g.wq_order[g.arb_idx]].cfg.priority;
        }
        return nullptr;
    }

    // ---- engine execution -----------------------------------------------------

    double solo_cap(const WorkItem& item, const GroupState& g) const {
        const TimingModel& tm = cfg.timing;
        double cap = g.b_pe_eff;
        if (item.profile.reads_src) cap = std::min(cap, tm.tier(item.src_tier).read_bw);
        if (item.profile.reads_dst)
            cap = std::min(cap, tm.tier(item.dst_raw_tier).read_bw);
        if (item.profile.writes_dst)
            cap = std::min(cap, tm.tier(item.dst_tier).write_bw);
        return cap;
    }

    void pump_group(uint32_t group_id) {
        GroupState& g = groups[group_id];
        for (uint32_t e : g.cfg.engine_ids) {
            EngineState& eng = engines[e];
            if (eng.exec_busy) continue;
            auto item = arbiter_pick(g);
            if (!item) return;
            begin_exec(e, std::move(item));
        }
    }

    void begin_exec(uint32_t e, std::unique_ptr<WorkItem> item) {
        EngineState& eng = engines[e];
        eng.executing = std::move(item);
        eng.exec_busy = true;
        eng.exec_start = sim.now();

        double stall = 0;
        if (cfg.fault.stall_probability > 0) {
            std::uniform_real_distribution<double> dist(0.0, 1.0);
            if (dist(sim.rng()) < cfg.fault.stall_probability) {
                stall = cfg.fault.t_fault;
                tel.faults_injected++;
            }
        }
        if (stall > 0)
            sim.schedule(sim.now() + stall, [this, e] { start_transfer(e); });
        else
            start_transfer(e);
    }

    void start_transfer(uint32_t e) {
        EngineState& eng = engines[e];
        eng.floor_end = sim.now() + cfg.timing.t_pe_fixed;
        const uint64_t ts = eng.executing->desc.transfer_size;
        if (ts == 0) {
            eng.epoch++;
            sim.schedule(eng.floor_end, [this, e, ep = eng.epoch] {
                if (engines[e].epoch == ep && engines[e].exec_busy &&
                    !engines[e].transferring)
                    finish_exec(e);
            });
            return;
        }
        eng.transferring = true;
        eng.bytes_left = static_cast<double>(ts);
        eng.last_settle = sim.now();
        eng.solo_cap = solo_cap(*eng.executing, groups[eng.group_id]);
        eng.write_footprint =
            eng.executing->profile.writes_dst
                ? static_cast<double>(ts) * (eng.executing->profile.dual_write ? 2 : 1)
                : 0;
        cluster.recompute_rates();
    }

    void settle(EngineState& eng, double now) {
        if (eng.transferring && now > eng.last_settle) {
            eng.bytes_left -= eng.rate * (now - eng.last_settle);
            if (eng.bytes_left < 0) eng.bytes_left = 0;
        }
        eng.last_settle = now;
    }

    void on_transfer_eta(uint32_t e, uint64_t epoch) {
        EngineState& eng = engines[e];
        if (!eng.transferring || eng.epoch != epoch) return;
        settle(eng, sim.now());
        if (eng.bytes_left > kByteEps) {
            // rates changed since this event was scheduled; re-arm
            eng.epoch++;
            const double eta = sim.now() + eng.bytes_left / eng.rate;
            sim.schedule(eta, [this, e, ep = eng.epoch] { on_transfer_eta(e, ep); });
            return;
        }
        eng.transferring = false;
        eng.bytes_left = 0;
        cluster.recompute_rates();
        if (sim.now() + kByteEps >= eng.floor_end)
            finish_exec(e);
        else {
            eng.epoch++;
            sim.schedule(eng.floor_end, [this, e, ep = eng.epoch] {
                if (engines[e].epoch == ep && engines[e].exec_busy &&
                    !engines[e].transferring)
                    finish_exec(e);
            });
        }
    }

    void finish_exec(uint32_t e) {
        EngineState& eng = engines[e];
        assert(eng.exec_busy && eng.executing);
        std::unique_ptr<WorkItem> item = std::move(eng.executing);
        eng.exec_busy = false;
        tel.engine_busy_ns += sim.now() - eng.exec_start;
        tel.per_engine_busy_ns[e] += sim.now() - eng.exec_start;

        CompletionRecord rec = execute_functional(*item);
        rec.timestamp_done = sim.now();
        complete_item(*item, rec);
        pump_group(eng.group_id);
    }

    void complete_item(WorkItem& item, const CompletionRecord& rec) {
        if (item.slot) item.slot->publish(rec);
        tel.descriptors_completed++;
        tel.per_wq[item.wq_id].completed++;
        if (item.cb)
            sim.schedule(sim.now(), [cb = item.cb, rec, t = sim.now()] { cb(rec, t); });
        if (item.parent)
            complete_sub(*item.parent, item.sub_index, rec);
        else
            terminal++;
    }

    /// Returns true when this completion finished (and freed) the batch.
    bool complete_sub(BatchRun& run, uint32_t idx, const CompletionRecord& rec) {
        run.done[idx] = true;
        run.terminal++;
        if (rec.status == CompletionStatus::success) run.successes++;
        else if (idx < run.first_fail_index) {
            run.first_fail_index = idx;
            run.first_fail_status = rec.status;
        }
        const uint32_t old_prefix = run.prefix_done;
        while (run.prefix_done < run.total && run.done[run.prefix_done]) run.prefix_done++;
        if (run.sub_cb)
            sim.schedule(sim.now(),
                         [cb = run.sub_cb, idx, rec, t = sim.now()] { cb(idx, rec, t); });
        if (run.terminal == run.total) {
            finish_batch(run);
            return true;
        }
        // Completing the prefix may unblock a fenced sub-descriptor.
        if (run.prefix_done != old_prefix) {
            const uint32_t gid = wqs[run.wq_id].cfg.group_id;
            pump_group(gid);
        }
        return false;
    }

    void finish_batch(BatchRun& run) {
        CompletionRecord rec;
        rec.status = run.first_fail_index == UINT32_MAX ? CompletionStatus::success
                                                        : run.first_fail_status;
        rec.result = run.first_fail_index == UINT32_MAX ? 0 : run.first_fail_index;
        rec.bytes_completed = run.successes;
        rec.timestamp_done = sim.now();
        if (run.slot) run.slot->publish(rec);
        tel.batches_completed++;
        tel.per_wq[run.wq_id].completed++;
        terminal++;
        if (run.cb)
            sim.schedule(sim.now(), [cb = run.cb, rec, t = sim.now()] { cb(rec, t); });
        batch_runs.erase(run.self);
    }

    // ---- batch expansion ------------------------------------------------------

    void expand_batch(BatchRun& run) {
        auto array = mem.resolve(run.bd.desc_array_addr,
                                 static_cast<size_t>(run.bd.count) * kDescriptorSize);
        if (array.empty()) {
            CompletionRecord rec;
            rec.status = CompletionStatus::invalid_descriptor;
            rec.timestamp_done = sim.now();
            if (run.slot) run.slot->publish(rec);
            tel.batches_completed++;
            terminal++;
            if (run.cb)
                sim.schedule(sim.now(), [cb = run.cb, rec, t = sim.now()] { cb(rec, t); });
            batch_runs.erase(run.self);
            return;
        }
        for (uint32_t i = 0; i < run.total; ++i) {
            auto dr = deserialize(array.subspan(i * kDescriptorSize, kDescriptorSize));
            ValidationRule rule = ValidationRule::ok;
            if (dr.ok()) {
                if (dr.desc.opcode == Opcode::batch)
                    rule = ValidationRule::opcode;  // no nesting
                else
                    rule = validate(dr.desc, limits).rule;
            }
            if (!dr.ok() || rule != ValidationRule::ok) {
                CompletionRecord rec;
                rec.status = CompletionStatus::invalid_descriptor;
                rec.timestamp_done = sim.now();
                CompletionSlot* slot =
                    dr.ok() ? mem.slot(dr.desc.completion_addr) : nullptr;
                if (slot) slot->publish(rec);
                tel.descriptors_completed++;
                tel.per_wq[run.wq_id].completed++;
                if (complete_sub(run, i, rec)) return;  // batch finished and freed
                continue;
            }
            auto item = make_item(dr.desc, run.wq_id, 0);
            item->parent = &run;
            item->sub_index = i;
            item->enqueue_time = run.enqueue_time;
            stage_item(std::move(item), /*is_sub=*/true);
        }
    }

    // ---- enqueue ---------------------------------------------------------------

    std::unique_ptr<WorkItem> make_item(const WorkDescriptor& d, uint32_t wq_id,
                                        DescriptorId id) {
        auto item = std::make_unique<WorkItem>();
        item->desc = d;
        item->wq_id = wq_id;
        item->id = id;
        item->slot = mem.slot(d.completion_addr);
        item->profile = mem_profile(d);
        item->src_tier = mem.tier_of(d.src_addr);
        item->dst_raw_tier = mem.tier_of(d.dst_addr);
        item->dst_tier = d.has_flag(kFlagCacheControl) ? MemTier::llc : item->dst_raw_tier;
        item->enqueue_time = sim.now();
        return item;
    }

    EnqueueResult enqueue(uint32_t wq_id, std::span<const std::byte> bytes,
                          bool dedicated_submitter, CompletionCallback cb,
                          SubCompletionCallback sub_cb) {
        EnqueueResult res;
        if (wq_id >= wqs.size()) return res;  // error_usage
        WqState& wq = wqs[wq_id];
        const bool is_dwq = wq.cfg.mode == WqMode::dedicated;
        if (dedicated_submitter != is_dwq) return res;

        auto dr = deserialize(bytes);
        if (!dr.ok()) {
            res.status = EnqueueStatus::error_invalid;
            return res;
        }
        const WorkDescriptor& d = dr.desc;
        ValidationResult v = validate(d, limits);
        if (!v.ok()) {
            res.status = EnqueueStatus::error_invalid;
            res.violated = v.rule;
            if (CompletionSlot* slot = mem.slot(d.completion_addr)) {
                CompletionRecord rec;
                rec.status = CompletionStatus::invalid_descriptor;
                rec.timestamp_done = sim.now();
                slot->publish(rec);
            }
            return res;
        }

        if (wq.occupancy >= wq.cfg.entries) {
            if (is_dwq) return res;  // single producer must track occupancy
            tel.per_wq[wq_id].retries++;
            tel.retries++;
            res.status = EnqueueStatus::retry;
            return res;
        }
        wq.occupancy++;
        tel.per_wq[wq_id].occupancy_peak =
            std::max<uint64_t>(tel.per_wq[wq_id].occupancy_peak, wq.occupancy);
        tel.per_wq[wq_id].submitted++;
        accepted++;
        res.status = EnqueueStatus::accepted;
        res.id = next_id++;

        if (d.opcode == Opcode::batch) {
            auto run = std::make_unique<BatchRun>();
            run->bd = BatchDescriptor::from_work_descriptor(d);
            run->wq_id = wq_id;
            run->id = res.id;
            run->slot = mem.slot(d.completion_addr);
            run->cb = std::move(cb);
            run->sub_cb = std::move(sub_cb);
            run->enqueue_time = sim.now();
            run->total = run->bd.count;
            run->done.assign(run->total, false);
            batch_runs.push_back(std::move(run));
            batch_runs.back()->self = std::prev(batch_runs.end());
            BatchRun* rp = batch_runs.back().get();
            // The batch engine takes it immediately; the WQ slot frees now.
            wq.occupancy--;
            sim.schedule(sim.now() + cfg.timing.t_batch_fetch,
                         [this, rp] { expand_batch(*rp); });
            return res;
        }

        auto item = make_item(d, wq_id, res.id);
        item->cb = std::move(cb);
        stage_item(std::move(item), /*is_sub=*/false);
        return res;
    }

    // ---- functional backend -----------------------------------------------------

    CompletionRecord execute_functional(const WorkItem& item) {
        CompletionRecord rec;
        rec.status = CompletionStatus::success;
        const WorkDescriptor& d = item.desc;
        const uint64_t ts = d.transfer_size;
        const size_t n = static_cast<size_t>(ts);

        auto invalid = [&] {
            rec.status = CompletionStatus::invalid_descriptor;
            rec.bytes_completed = 0;
            return rec;
        };

        switch (d.opcode) {
            case Opcode::mem_copy: {
                auto src = mem.resolve(d.src_addr, n);
                auto dst = mem.resolve(d.dst_addr, n);
                if (n > 0 && (src.empty() || dst.empty())) return invalid();
                rec.bytes_completed = ops::mem_copy(src, dst);
                tel.bytes_read += ts;
                tel.bytes_written += ts;
                break;
            }
            case Opcode::dualcast: {
                const auto& p = std::get<DualcastParams>(d.op_params);
                auto src = mem.resolve(d.src_addr, n);
                auto dst1 = mem.resolve(d.dst_addr, n);
                auto dst2 = mem.resolve(p.dst2, n);
                if (n > 0 && (src.empty() || dst1.empty() || dst2.empty()))
                    return invalid();
                if (ops::dualcast(src, dst1, dst2) != ops::OpStatus::ok) return invalid();
                rec.bytes_completed = ts;
                tel.bytes_read += ts;
                tel.bytes_written += 2 * ts;
                break;
            }
            case Opcode::mem_fill: {
                const auto& p = std::get<ops::FillParams>(d.op_params);
                auto dst = mem.resolve(d.dst_addr, n);
                if (n > 0 && dst.empty()) return invalid();
                rec.bytes_completed = ops::mem_fill(p, dst);
                tel.bytes_written += ts;
                break;
            }
            case Opcode::mem_compare: {
                auto a = mem.resolve(d.src_addr, n);
                auto b = mem.resolve(d.dst_addr, n);
                if (n > 0 && (a.empty() || b.empty())) return invalid();
                auto cmp = ops::mem_compare(a, b);
                tel.bytes_read += 2 * ts;
                if (cmp.equal) {
                    rec.bytes_completed = ts;
                } else {
                    rec.result = 1;  // bit 0: mismatch
                    rec.bytes_completed = cmp.first_diff;
                    if (d.has_flag(kFlagCheckResult))
                        rec.status = CompletionStatus::compare_mismatch;
                }
                break;
            }
            case Opcode::compare_pattern: {
                const auto& p = std::get<ComparePatternParams>(d.op_params);
                auto a = mem.resolve(d.src_addr, n);
                if (n > 0 && a.empty()) return invalid();
                auto cmp = ops::compare_pattern(
                    std::span<const std::byte, 8>(p.pattern.data(), 8), a);
                tel.bytes_read += ts;
                if (cmp.equal) {
                    rec.bytes_completed = ts;
                } else {
                    rec.result = 1;
                    rec.bytes_completed = cmp.first_diff;
                    if (d.has_flag(kFlagCheckResult))
                        rec.status = CompletionStatus::compare_mismatch;
                }
                break;
            }
            case Opcode::crc_gen: {
                const auto& p = std::get<ops::CrcParams>(d.op_params);
                auto src = mem.resolve(d.src_addr, n);
                if (n > 0 && src.empty()) return invalid();
                std::span<std::byte> dst;
                if (!d.dst_addr.is_null()) {
                    dst = mem.resolve(d.dst_addr, n);
                    if (n > 0 && dst.empty()) return invalid();
                }
                auto r = ops::crc32_gen(p, src, dst);
                rec.result = r.crc;
                rec.bytes_completed = ts;
                tel.bytes_read += ts;
                if (!d.dst_addr.is_null()) tel.bytes_written += ts;
                break;
            }
            case Opcode::dif: {
                const auto& p = std::get<ops::DifParams>(d.op_params);
                auto src = mem.resolve(d.src_addr, n);
                if (n > 0 && src.empty()) return invalid();
                tel.bytes_read += ts;
                const size_t out_size = ops::dif_output_size(p, n);
                ops::DifResult r;
                switch (p.mode) {
                    case ops::DifMode::check:
                        r = ops::dif_check(p, src);
                        break;
                    case ops::DifMode::insert: {
                        auto dst = mem.resolve(d.dst_addr, out_size);
                        if (out_size > 0 && dst.empty()) return invalid();
                        r = ops::dif_insert(p, src, dst);
                        tel.bytes_written += out_size;
                        break;
                    }
                    case ops::DifMode::strip: {
                        auto dst = mem.resolve(d.dst_addr, out_size);
                        if (out_size > 0 && dst.empty()) return invalid();
                        r = ops::dif_strip(p, src, dst);
                        tel.bytes_written += out_size;
                        break;
                    }
                    case ops::DifMode::update: {
                        auto dst = mem.resolve(d.dst_addr, out_size);
                        if (out_size > 0 && dst.empty()) return invalid();
                        r = ops::dif_update(p, src, dst);
                        tel.bytes_written += out_size;
                        break;
                    }
                }
                if (r.status == ops::OpStatus::dif_error) {
                    rec.status = CompletionStatus::dif_error;
                    rec.result = r.error_block;
                    rec.bytes_completed = r.bytes_out;
                } else if (r.status != ops::OpStatus::ok) {
                    return invalid();
                } else {
                    rec.bytes_completed = ts;
                }
                break;
            }
            case Opcode::delta_create: {
                const auto& p = std::get<DeltaCreateParams>(d.op_params);
                auto original = mem.resolve(d.src_addr, n);
                auto modified = mem.resolve(d.dst_addr, n);
                if (n > 0 && (original.empty() || modified.empty())) return invalid();
                auto r = ops::delta_create(original, modified, p.max_size);
                tel.bytes_read += 2 * ts;
                if (r.status == ops::OpStatus::invalid_descriptor) return invalid();
                auto bytes = r.record.serialize();
                auto out = mem.resolve(p.record_addr, bytes.size());
                if (!bytes.empty() && out.empty()) return invalid();
                ops::mem_copy(bytes, out);
                tel.bytes_written += bytes.size();
                rec.result = bytes.size();
                if (r.status == ops::OpStatus::delta_overflow) {
                    rec.status = CompletionStatus::delta_overflow;
                    rec.bytes_completed = r.bytes_examined;
                } else {
                    rec.bytes_completed = ts;
                }
                break;
            }
            case Opcode::delta_apply: {
                const auto& p = std::get<DeltaApplyParams>(d.op_params);
                auto original = mem.resolve(d.src_addr, n);
                auto dst = mem.resolve(d.dst_addr, n);
                auto rec_bytes = mem.resolve(p.record_addr, p.record_size);
                if ((n > 0 && (original.empty() || dst.empty())) ||
                    (p.record_size > 0 && rec_bytes.empty()))
                    return invalid();
                auto delta = ops::DeltaRecord::deserialize(rec_bytes);
                if (!delta) return invalid();
                if (ops::delta_apply(original, *delta, dst) != ops::OpStatus::ok)
                    return invalid();
                rec.bytes_completed = ts;
                tel.bytes_read += ts + p.record_size;
                tel.bytes_written += ts;
                break;
            }
            case Opcode::cache_flush: {
                auto dst = mem.resolve(d.dst_addr, n);
                if (n > 0 && dst.empty()) return invalid();
                rec.bytes_completed = ops::cache_flush(dst, &tel.cache_lines_flushed);
                break;
            }
            default:
                return invalid();
        }
        return rec;
    }
};

Device::Device(DeviceCluster& cluster, DeviceConfig cfg, uint32_t index)
    : impl_(std::make_unique<Impl>(cluster, *this, std::move(cfg), index)) {}

Device::~Device() = default;

EnqueueResult Device::enqueue(uint32_t wq_id, std::span<const std::byte> desc64,
                              bool dedicated_submitter, CompletionCallback cb,
                              SubCompletionCallback sub_cb) {
    return impl_->enqueue(wq_id, desc64, dedicated_submitter, std::move(cb),
                          std::move(sub_cb));
}

const DeviceConfig& Device::config() const { return impl_->cfg; }
uint32_t Device::index() const { return impl_->index; }

Telemetry Device::snapshot_telemetry() const { return impl_->tel; }

uint64_t Device::accepted_count() const { return impl_->accepted; }
uint64_t Device::terminal_record_count() const { return impl_->terminal; }
uint64_t Device::in_flight() const { return impl_->accepted - impl_->terminal; }

uint32_t Device::wq_occupancy(uint32_t wq_id) const {
    return impl_->wqs[wq_id].occupancy;
}

void Device::add_submit_busy(double ns) { impl_->tel.submit_busy_ns += ns; }
void Device::add_wait_state(double ns) { impl_->tel.wait_state_ns += ns; }
void Device::add_busy_poll(double ns) { impl_->tel.busy_poll_ns += ns; }
void Device::add_lock_wait(double ns) { impl_->tel.lock_wait_ns += ns; }

DeviceCluster::DeviceCluster(SimContext& sim, AddressSpace& mem)
    : sim_(sim), mem_(mem), socket_(SocketParams{}) {}

DeviceCluster::DeviceCluster(SimContext& sim, AddressSpace& mem, SocketParams socket)
    : sim_(sim), mem_(mem), socket_(socket) {}

DeviceCluster::~DeviceCluster() = default;

Device* DeviceCluster::add_device(const DeviceConfig& cfg, ConfigError* err) {
    ConfigError e = validate_config(cfg);
    if (err) *err = e;
    if (e != ConfigError::ok) return nullptr;
    devices_.push_back(std::unique_ptr<Device>(
        new Device(*this, cfg, static_cast<uint32_t>(devices_.size()))));
    return devices_.back().get();
}

void DeviceCluster::recompute_rates() {
    const double now = sim_.now();
    // Settle progress at the old rates, then gather active transfers.
    double write_footprint = 0;
    std::vector<std::vector<uint32_t>> active(devices_.size());
    for (size_t d = 0; d < devices_.size(); ++d) {
        auto& impl = *devices_[d]->impl_;
        for (uint32_t e = 0; e < impl.engines.size(); ++e) {
            auto& eng = impl.engines[e];
            if (!eng.transferring) continue;
            impl.settle(eng, now);
            active[d].push_back(e);
            write_footprint += eng.write_footprint;
        }
    }

    // Per-device demand assuming the device fabric alone, then a socket-level
    // split, then the final per-engine rates.
    std::vector<double> device_demand(devices_.size(), 0.0);
    std::vector<std::vector<double>> caps(devices_.size());
    std::vector<double> tmp;
    for (size_t d = 0; d < devices_.size(); ++d) {
        auto& impl = *devices_[d]->impl_;
        double budget = impl.cfg.timing.b_fabric;
        if (socket_.ddio_footprint_limit > 0 &&
            write_footprint > socket_.ddio_footprint_limit)
            budget = std::min(budget, socket_.ddio_spill_bw);
        for (uint32_t e : active[d]) caps[d].push_back(impl.engines[e].solo_cap);
        waterfill(caps[d], budget, tmp);
        for (double r : tmp) device_demand[d] += r;
    }
    std::vector<double> device_budget;
    waterfill(device_demand, socket_.b_socket, device_budget);

    for (size_t d = 0; d < devices_.size(); ++d) {
        if (active[d].empty()) continue;
        auto& impl = *devices_[d]->impl_;
        waterfill(caps[d], device_budget[d], tmp);
        for (size_t i = 0; i < active[d].size(); ++i) {
            auto& eng = impl.engines[active[d][i]];
            eng.rate = tmp[i];
            eng.epoch++;
            const double eta =
                eng.rate > 0 ? now + eng.bytes_left / eng.rate : now + 1e18;
            const uint32_t e = active[d][i];
            Device::Impl* ip = &impl;
            sim_.schedule(eta, [ip, e, ep = eng.epoch] { ip->on_transfer_eta(e, ep); });
        }
    }
}

}  // namespace dsaemu
