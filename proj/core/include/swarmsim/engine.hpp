#pragma once

#include <cstdint>
#include <functional>
#include <unordered_set>
#include <vector>

#include "swarmsim/types.hpp"

namespace swarmsim {

enum class EventKind : std::uint8_t {
    RegularUnchokeTick,
    OptimisticUnchokeTick,
    TransferCompletion,
    MeasurementEnd,
};

const char* to_string(EventKind kind) noexcept;

struct Event {
    SimTime fire_at = 0;
    EventKind kind = EventKind::MeasurementEnd;
    PeerId peer{};
    /// Insertion order; breaks ties between events at the same instant.
    std::uint64_t sequence = 0;
};

class EventHandle {
public:
    EventHandle() = default;
    bool valid() const noexcept { return sequence_ != kInvalid; }
    std::uint64_t sequence() const noexcept { return sequence_; }

private:
    friend class Engine;
    static constexpr std::uint64_t kInvalid = ~std::uint64_t{0};
    explicit EventHandle(std::uint64_t seq) : sequence_(seq) {}
    std::uint64_t sequence_ = kInvalid;
};

struct DispatchStats {
    std::uint64_t dispatched = 0;
    /// The queue ran dry before the horizon was reached.
    bool exhausted = false;
};

/// Virtual clock plus a priority queue of pending events.
///
/// Events fire in (fire_at, sequence) order. Cancellation is lazy: the
/// entry stays in the heap and is skipped when it surfaces.
class Engine {
public:
    using Handler = std::function<void(const Event&)>;

    SimTime now() const noexcept { return now_; }

    /// Faults if `fire_at` lies before the current clock.
    EventHandle schedule(SimTime fire_at, EventKind kind, PeerId peer = PeerId{});

    /// Returns false if the event already fired or was cancelled.
    bool cancel(EventHandle handle);

    bool is_pending(EventHandle handle) const;
    std::size_t pending() const noexcept { return live_.size(); }

    /// Dispatches every event with fire_at <= horizon. The handler may
    /// schedule and cancel freely.
    DispatchStats run_until(SimTime horizon, const Handler& handler);

private:
    struct Later {
        bool operator()(const Event& a, const Event& b) const noexcept {
            if (a.fire_at != b.fire_at) return a.fire_at > b.fire_at;
            return a.sequence > b.sequence;
        }
    };

    void compact();

    std::vector<Event> queue_; ///< binary heap ordered by Later

    std::unordered_set<std::uint64_t> live_;
    SimTime now_ = 0;
    std::uint64_t next_sequence_ = 0;
};

} // namespace swarmsim
