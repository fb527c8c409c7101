// Discrete-event core: virtual clock, event heap, deterministic RNG.
// Single-threaded; concurrent callers serialize externally.
#pragma once

#include <cstdint>
#include <functional>
#include <queue>
#include <random>
#include <vector>

namespace dsaemu {

class SimContext {
public:
    explicit SimContext(uint64_t seed = 1) : rng_(seed) {}

    double now() const { return now_; }
    std::mt19937_64& rng() { return rng_; }

    /// Schedules fn at simulated time t (>= now). Ties run in schedule order.
    void schedule(double t, std::function<void()> fn) {
        if (t < now_) t = now_;
        heap_.push(Event{t, next_seq_++, std::move(fn)});
    }

    void schedule_in(double dt, std::function<void()> fn) { schedule(now_ + dt, std::move(fn)); }

    bool empty() const { return heap_.empty(); }

    /// Runs one event; returns false when the heap is empty.
    bool step() {
        if (heap_.empty()) return false;
        Event ev = std::move(const_cast<Event&>(heap_.top()));
        heap_.pop();
        now_ = ev.time;
        ev.fn();
        return true;
    }

    void run_until_idle() {
        while (step()) {}
    }

    /// Processes all events with time <= t, then advances the clock to t.
    void run_until(double t) {
        while (!heap_.empty() && heap_.top().time <= t) step();
        if (t > now_) now_ = t;
    }

private:
    struct Event {
        double time;
        uint64_t seq;
        std::function<void()> fn;
        bool operator>(const Event& o) const {
            return time != o.time ? time > o.time : seq > o.seq;
        }
    };

    double now_ = 0;
    uint64_t next_seq_ = 0;
    std::priority_queue<Event, std::vector<Event>, std::greater<>> heap_;
    std::mt19937_64 rng_;
};

}  // namespace dsaemu
