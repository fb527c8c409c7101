#include "dsaemu/client.hpp"

#include <stdexcept>
#include <thread>

namespace dsaemu {

BatchBuildResult build_batch(AddressSpace& mem, std::span<const WorkDescriptor> descs,
                             const ValidationLimits& limits) {
    BatchBuildResult res;
    if (descs.size() < 2 || descs.size() > limits.max_batch_size) {
        res.violated = ValidationRule::batch_count;
        return res;
    }
    for (const WorkDescriptor& d : descs) {
        if (d.opcode == Opcode::batch) {
            res.violated = ValidationRule::opcode;  // no nesting
            return res;
        }
        ValidationResult v = validate(d, limits);
        if (!v.ok()) {
            res.violated = v.rule;
            return res;
        }
    }
    Address array = mem.create_buffer(descs.size() * kDescriptorSize);
    auto out = mem.resolve(array, descs.size() * kDescriptorSize);
    for (size_t i = 0; i < descs.size(); ++i) {
        SerializeResult sr = serialize(descs[i]);
        if (!sr.ok()) {
            res.violated = ValidationRule::params;
            return res;
        }
        std::copy(sr.bytes.begin(), sr.bytes.end(),
                  out.begin() + static_cast<ptrdiff_t>(i * kDescriptorSize));
    }
    res.ok = true;
    res.array_addr = array;
    res.batch.desc_array_addr = array;
    res.batch.count = static_cast<uint32_t>(descs.size());
    return res;
}

Portal::Portal(DeviceRuntime& rt, Device& dev, uint32_t wq_id)
    : rt_(rt), dev_(dev), wq_id_(wq_id), mode_(dev.config().wqs.at(wq_id).mode) {}

SubmitOutcome Portal::submit(WorkDescriptor desc) {
    if (desc.completion_addr.is_null()) {
        desc.completion_addr = rt_.memory().alloc_completion_slot();
        desc.flags |= kFlagRequestCompletion;
    }
    SerializeResult sr = serialize(desc);
    if (!sr.ok()) return SubmitOutcome{SubmitStatus::error_invalid, {}, ValidationRule::params};
    return submit_serialized(sr.bytes, desc.completion_addr, nullptr);
}

SubmitOutcome Portal::submit_batch(const BatchDescriptor& batch,
                                   SubCompletionCallback sub_cb) {
    BatchDescriptor b = batch;
    if (b.completion_addr.is_null()) {
        b.completion_addr = rt_.memory().alloc_completion_slot();
        b.flags |= kFlagRequestCompletion;
    }
    SerializeResult sr = serialize(b.as_work_descriptor());
    if (!sr.ok()) return SubmitOutcome{SubmitStatus::error_invalid, {}, ValidationRule::params};
    return submit_serialized(sr.bytes, b.completion_addr, std::move(sub_cb));
}

SubmitOutcome Portal::submit_serialized(const DescriptorBytes& bytes, Address slot_addr,
                                        SubCompletionCallback sub_cb) {
    const bool dedicated = mode_ == WqMode::dedicated;
    const double cost = dedicated ? dev_.config().timing.t_submit_dwq
                                  : dev_.config().timing.t_submit_swq_roundtrip;
    SubmitOutcome out;
    std::lock_guard guard(rt_.lock());
    rt_.sim().run_until(rt_.sim().now() + cost);
    dev_.add_submit_busy(cost);
    EnqueueResult er = dev_.enqueue(wq_id_, bytes, dedicated, nullptr, std::move(sub_cb));
    switch (er.status) {
        case EnqueueStatus::accepted:
            out.status = SubmitStatus::accepted;
            out.handle = OffloadHandle{slot_addr, er.id, rt_.sim().now()};
            break;
        case EnqueueStatus::retry: out.status = SubmitStatus::retry; break;
        case EnqueueStatus::error_invalid:
            out.status = SubmitStatus::error_invalid;
            out.violated = er.violated;
            out.handle = OffloadHandle{slot_addr, 0, rt_.sim().now()};
            break;
        case EnqueueStatus::error_usage: out.status = SubmitStatus::usage_error; break;
    }
    return out;
}

CompletionRecord Portal::submit_sync(WorkDescriptor desc) {
    double backoff = 1000.0;  // 1 us
    for (;;) {
        SubmitOutcome out = submit(desc);
        if (out.status == SubmitStatus::retry) {
            rt_.advance(backoff);
            backoff = std::min(backoff * 2, 64000.0);
            continue;
        }
        if (out.status == SubmitStatus::error_invalid) {
            // immediate error record, no data motion
            CompletionSlot* slot = rt_.memory().slot(out.handle.slot_addr);
            if (slot && slot->is_terminal()) return slot->read();
            CompletionRecord rec;
            rec.status = CompletionStatus::invalid_descriptor;
            return rec;
        }
        if (out.status == SubmitStatus::usage_error)
            throw std::logic_error("submit_sync: usage error");
        return rt_.wait(out.handle, WaitMode::block, dev_);
    }
}

DeviceRuntime::DeviceRuntime(uint64_t seed) : sim_(seed), cluster_(sim_, mem_) {}

DeviceRuntime::DeviceRuntime(uint64_t seed, DeviceCluster::SocketParams socket)
    : sim_(seed), cluster_(sim_, mem_, socket) {}

Device* DeviceRuntime::add_device(const DeviceConfig& cfg, ConfigError* err) {
    return cluster_.add_device(cfg, err);
}

double DeviceRuntime::now() {
    std::lock_guard guard(mu_);
    return sim_.now();
}

void DeviceRuntime::advance(double dt) {
    std::lock_guard guard(mu_);
    sim_.run_until(sim_.now() + dt);
}

void DeviceRuntime::run_until_idle() {
    std::lock_guard guard(mu_);
    sim_.run_until_idle();
}

CompletionRecord DeviceRuntime::wait(OffloadHandle& handle, WaitMode mode, Device& dev) {
    if (handle.consumed) throw std::logic_error("wait: handle already resolved");
    CompletionSlot* slot = mem_.slot(handle.slot_addr);
    if (!slot) throw std::logic_error("wait: handle has no completion slot");
    double wait_start = 0;
    {
        std::lock_guard guard(mu_);
        wait_start = sim_.now();
    }
    for (;;) {
        {
            std::lock_guard guard(mu_);
            if (slot->is_terminal()) break;
            if (!sim_.step()) {
                // Nothing to run: either another thread is about to enqueue,
                // or this handle can never resolve. Yield and re-check.
            }
        }
        if (!slot->is_terminal()) std::this_thread::yield();
    }
    CompletionRecord rec = slot->read();
    {
        std::lock_guard guard(mu_);
        const double waited = std::max(0.0, rec.timestamp_done - wait_start);
        if (mode == WaitMode::block)
            dev.add_wait_state(waited);
        else
            dev.add_busy_poll(waited);
        if (sim_.now() < rec.timestamp_done) sim_.run_until(rec.timestamp_done);
    }
    handle.consumed = true;
    return rec;
}

OrderedTracker::OrderedTracker(size_t capacity) : entries_(capacity) {}

int32_t OrderedTracker::submit(uint64_t token) {
    if (count_.load(std::memory_order_acquire) == entries_.size()) return kFull;
    Entry& e = entries_[tail_];
    if (e.in_use.load(std::memory_order_acquire)) return kFull;
    e.token = token;
    e.completed.store(false, std::memory_order_relaxed);
    e.in_use.store(true, std::memory_order_release);
    const int32_t slot = static_cast<int32_t>(tail_);
    tail_ = (tail_ + 1) % entries_.size();
    count_.fetch_add(1, std::memory_order_acq_rel);
    return slot;
}

void OrderedTracker::complete(size_t slot) {
    if (slot >= entries_.size() || !entries_[slot].in_use.load(std::memory_order_acquire))
        throw std::out_of_range("OrderedTracker::complete: unknown slot");
    entries_[slot].completed.store(true, std::memory_order_release);
}

bool OrderedTracker::slot_completed(size_t slot) const {
    return slot < entries_.size() &&
           entries_[slot].completed.load(std::memory_order_acquire);
}

std::vector<uint64_t> OrderedTracker::drain() {
    std::vector<uint64_t> out;
    while (count_.load(std::memory_order_acquire) > 0) {
        Entry& e = entries_[head_];
        if (!e.in_use.load(std::memory_order_acquire) ||
            !e.completed.load(std::memory_order_acquire))
            break;
        out.push_back(e.token);
        e.in_use.store(false, std::memory_order_release);
        head_ = (head_ + 1) % entries_.size();
        count_.fetch_sub(1, std::memory_order_acq_rel);
    }
    return out;
}

}  // namespace dsaemu
