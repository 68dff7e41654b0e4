#pragma once

#include <cstdint>
#include <vector>

#include "swarmsim/swarm.hpp"

namespace swarmsim::testing {

inline constexpr std::int64_t kContent = 1'000'000;
inline constexpr std::int64_t kBlock = 16;

inline SwarmParams small_params() {
    SwarmParams p;
    p.content_bytes = kContent;
    p.block_bytes = kBlock;
    return p;
}

/// A local peer plus `count` fully wired remotes with zero progress. The
/// local leecher sits halfway so every remote is interested in it.
struct Snapshot {
    Swarm swarm{small_params()};
    RngStream rng{1};
    PeerId local{};
    std::vector<PeerId> remotes;

    explicit Snapshot(std::size_t count, PeerState local_state = PeerState::Leecher) {
        PeerRecord& l = swarm.add_peer(local_state, 0, rng);
        if (local_state == PeerState::Leecher) l.progress_bytes = kContent / 2;
        local = l.id;
        for (std::size_t i = 0; i < count; ++i) remotes.push_back(swarm.add_peer(PeerState::Leecher, 0, rng).id);
    }

    PeerRecord& me() { return swarm.peer(local); }
    PeerId operator[](std::size_t i) const { return remotes[i]; }

    /// Makes rate_in[remote] read `rate` bytes/s at time `now`.
    void set_rate_in(PeerId remote, double rate, SimTime now) {
        RateEstimator& e = me().rate_in.try_emplace(remote, swarm.params().rate_window).first->second;
        e.add(now, static_cast<std::int64_t>(rate * swarm.params().rate_window));
    }
    void set_rate_out(PeerId remote, double rate, SimTime now) {
        RateEstimator& e = me().rate_out.try_emplace(remote, swarm.params().rate_window).first->second;
        e.add(now, static_cast<std::int64_t>(rate * swarm.params().rate_window));
    }
};

} // namespace swarmsim::testing
