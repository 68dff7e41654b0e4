#include "swarmsim/engine.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace swarmsim {

const char* to_string(EventKind kind) noexcept {
    switch (kind) {
    case EventKind::RegularUnchokeTick: return "regular_unchoke_tick";
    case EventKind::OptimisticUnchokeTick: return "optimistic_unchoke_tick";
    case EventKind::TransferCompletion: return "transfer_completion";
    case EventKind::MeasurementEnd: return "measurement_end";
    }
    return "unknown";
}

EventHandle Engine::schedule(SimTime fire_at, EventKind kind, PeerId peer) {
    if (!(fire_at >= now_)) {
        fault("schedule: event at t=" + std::to_string(fire_at) +
              " lies before the clock t=" + std::to_string(now_));
    }
    const std::uint64_t seq = next_sequence_++;
    queue_.push_back(Event{fire_at, kind, peer, seq});
    std::push_heap(queue_.begin(), queue_.end(), Later{});
    live_.insert(seq);
    return EventHandle(seq);
}

bool Engine::cancel(EventHandle handle) {
    if (!handle.valid()) return false;
    if (live_.erase(handle.sequence()) == 0) return false;
    // Cancelled entries stay in the heap until popped; drop them in bulk once
    // they outnumber the live ones so the heap stays cache-sized.
    if (queue_.size() > 1024 && queue_.size() > 2 * live_.size()) compact();
    return true;
}

void Engine::compact() {
    std::erase_if(queue_, [this](const Event& e) { return !live_.contains(e.sequence); });
    std::make_heap(queue_.begin(), queue_.end(), Later{});
}

bool Engine::is_pending(EventHandle handle) const {
    return handle.valid() && live_.contains(handle.sequence());
}

DispatchStats Engine::run_until(SimTime horizon, const Handler& handler) {
    DispatchStats stats;
    while (!queue_.empty()) {
        const Event& top = queue_.front();
        if (!live_.contains(top.sequence)) {
            std::pop_heap(queue_.begin(), queue_.end(), Later{});
            queue_.pop_back();
            continue;
        }
        if (top.fire_at > horizon) return stats;
        const Event event = top;
        std::pop_heap(queue_.begin(), queue_.end(), Later{});
        queue_.pop_back();
        live_.erase(event.sequence);
        require(event.fire_at >= now_, "engine: clock moved backwards");
        now_ = event.fire_at;
        ++stats.dispatched;
        handler(event);
    }
    stats.exhausted = true;
    return stats;
}

} // namespace swarmsim
