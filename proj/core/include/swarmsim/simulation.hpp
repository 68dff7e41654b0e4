#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "swarmsim/config.hpp"
#include "swarmsim/engine.hpp"
#include "swarmsim/metrics.hpp"
#include "swarmsim/policy.hpp"
#include "swarmsim/rng.hpp"
#include "swarmsim/swarm.hpp"
#include "swarmsim/transfer.hpp"

namespace swarmsim {

struct RunOptions {
    /// Verify population, progress, slot, conservation and snub
    /// invariants after every event; violations land in RunResult.
    bool check_invariants = false;
    SimTime snub_timeout = kDefaultSnubTimeout;
    std::size_t violation_sample_limit = 8;
};

/// One replication: a steady-state swarm driven by per-peer unchoke ticks,
/// with fluid transfers between events.
class Simulation {
public:
    Simulation(const ScenarioConfig& cfg, std::uint64_t seed, RunOptions options = {});

    /// Runs to the horizon and computes the run's metrics. Throws
    /// MetricError when no download completed inside the window.
    RunResult run();

    /// Dispatches events up to `t` (clamped to the horizon).
    void run_until(SimTime t);

    SimTime now() const noexcept { return engine_.now(); }
    SimTime horizon() const noexcept { return horizon_; }
    const Swarm& swarm() const noexcept { return swarm_; }
    const FlowSet& flows() const noexcept { return flows_; }
    const PolicySpec& policy() const noexcept { return policy_; }
    std::optional<SimTime> warmup_end() const noexcept { return warmup_end_; }
    std::uint64_t completions() const noexcept { return swarm_.clients_served(); }
    std::uint64_t invariant_violations() const noexcept { return violations_; }
    const std::vector<std::string>& violation_samples() const noexcept { return violation_samples_; }

private:
    struct PeerEvents {
        EventHandle regular;
        EventHandle optimistic;
    };
    struct FlowEnds {
        PeerRecord* sender;
        PeerRecord* receiver;
        std::size_t receiver_index;
        TransferLink link;
    };
    struct LivePeer {
        PeerId id;
        PeerRecord* record;
        std::size_t receiver_index;
    };
    static constexpr std::size_t kNotReceiver = ~std::size_t{0};
    const LivePeer& live_peer(PeerId id) const;
    struct Departure {
        PeerId id;
        SimTime arrival;
        SimTime departure;
    };

    void dispatch(const Event& event);
    void advance_to(SimTime t);
    void handle_completions(SimTime t);
    void on_regular_tick(PeerRecord& peer, SimTime t);
    void on_optimistic_tick(PeerRecord& peer, SimTime t);
    void schedule_ticks(const PeerRecord& peer, SimTime t);
    void rebuild_flows();
    void update_senders();
    void reschedule_completion();
    void check_invariants(bool membership_changed);
    void violation(std::string what);

    ScenarioConfig cfg_;
    RunOptions options_;
    PolicySpec policy_;
    SimTime horizon_;
    double slot_rate_;
    Engine engine_;
    RngStream rng_;
    Swarm swarm_;

    FlowSet flows_;
    std::vector<FlowEnds> flow_ends_;
    std::vector<PeerRecord*> receivers_;
    std::vector<LivePeer> live_;
    std::vector<FlowRequest> requests_;
    std::vector<Delivery> deliveries_;
    std::vector<std::int64_t> sender_progress_;
    std::vector<double> inbound_scratch_;
    std::vector<PeerId> dirty_senders_;
    std::vector<PeerId> sources_;
    bool flows_dirty_ = true;
    bool membership_changed_ = true;

    FlatMap<PeerId, PeerEvents> peer_events_;
    EventHandle completion_event_;
    SimTime completion_at_ = 0;
    SimTime last_advance_ = 0;
    bool finished_ = false;

    FlatSet<PeerId> initial_cohort_;
    std::optional<SimTime> warmup_end_;
    std::vector<Departure> departures_;
    std::uint64_t dispatched_ = 0;

    FlatMap<PeerId, std::int64_t> last_progress_;
    std::uint64_t violations_ = 0;
    std::vector<std::string> violation_samples_;
};

RunResult run_replication(const ScenarioConfig& cfg, std::uint64_t seed, const RunOptions& options = {});

} // namespace swarmsim
