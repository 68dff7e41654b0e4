#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <vector>

#include <boost/container/flat_map.hpp>
#include <boost/container/flat_set.hpp>

#include "swarmsim/rng.hpp"
#include "swarmsim/types.hpp"

namespace swarmsim {

template <typename K, typename V>
using FlatMap = boost::container::flat_map<K, V>;
template <typename K>
using FlatSet = boost::container::flat_set<K>;

enum class PeerState : std::uint8_t { Leecher, Seed };

enum class SlotKind : std::uint8_t { Regular, Optimistic };

const char* to_string(SlotKind kind) noexcept;

/// One unchoke held by a sender.
struct SlotAssignment {
    SlotKind kind = SlotKind::Regular;
    PeerId target{};
    double granted_rate = 0; ///< bytes/s

    friend bool operator==(const SlotAssignment&, const SlotAssignment&) = default;
};

/// Rolling byte counter: rate() is bytes seen in (now - window, now]
/// divided by the window length.
class RateEstimator {
public:
    explicit RateEstimator(SimTime window_seconds = 20.0);

    void add(SimTime t, std::int64_t bytes);
    double rate(SimTime now) const;
    std::int64_t bytes_in_window(SimTime now) const;
    SimTime window() const noexcept { return window_; }

private:
    struct Sample {
        SimTime t;
        std::int64_t bytes;
    };
    void evict(SimTime now);

    SimTime window_;
    std::vector<Sample> samples_; ///< live samples start at head_
    std::size_t head_ = 0;
    std::int64_t total_ = 0;
};

struct PeerRecord {
    PeerId id{};
    PeerState state = PeerState::Leecher;
    std::int64_t progress_bytes = 0;
    SimTime arrival_time = 0;

    FlatSet<PeerId> neighbors;
    std::size_t initiated_connections = 0;

    std::vector<SlotAssignment> slots;

    // The three per-remote transfer maps are node-based so a TransferLink
    // can hold pointers into them across unrelated inserts.

    /// Bytes/s received from each neighbor.
    std::map<PeerId, RateEstimator> rate_in;
    /// Bytes/s sent to each neighbor.
    std::map<PeerId, RateEstimator> rate_out;

    /// Remotes this peer considers to be snubbing it.
    FlatSet<PeerId> snubbed_by;
    /// When this peer last moved the remote from choked to unchoked.
    FlatMap<PeerId, SimTime> last_unchoked_at;
    /// When this peer last received data from the remote. A key exists
    /// iff this peer has downloaded from that remote.
    std::map<PeerId, SimTime> last_received_piece_at;
    /// Most recent receipt from anyone.
    SimTime last_piece_at = kNever;

    std::int64_t uploaded_bytes = 0;
    std::int64_t downloaded_bytes = 0;

    bool is_seed() const noexcept { return state == PeerState::Seed; }
    bool is_leecher() const noexcept { return state == PeerState::Leecher; }

    double upload_rate_to_me(PeerId remote, SimTime now) const;
    double my_upload_rate_to(PeerId remote, SimTime now) const;
    SimTime unchoked_at(PeerId remote) const;

    const SlotAssignment* slot_for(PeerId target) const;
    bool unchokes(PeerId target) const { return slot_for(target) != nullptr; }
    std::size_t slot_count(SlotKind kind) const;
};

/// Hands out random peer lists drawn from the live roster.
class Tracker {
public:
    explicit Tracker(std::size_t list_size = 50) : list_size_(list_size) {}

    void add(PeerId id);
    void remove(PeerId id);
    bool contains(PeerId id) const { return roster_.contains(id); }
    const FlatSet<PeerId>& roster() const noexcept { return roster_; }
    std::size_t list_size() const noexcept { return list_size_; }

    /// min(list_size, |roster \ {requester}|) distinct peers, never the requester.
    std::vector<PeerId> random_list(PeerId requester, RngStream& rng) const;

private:
    std::size_t list_size_;
    FlatSet<PeerId> roster_;
};

/// Accounting targets of one sender/receiver pair, resolved once so repeated
/// transfers skip the map lookups. Valid until either peer departs.
struct TransferLink {
    RateEstimator* in = nullptr;       ///< receiver's rate_in entry
    RateEstimator* out = nullptr;      ///< sender's rate_out entry
    SimTime* last_received = nullptr;  ///< created on the first delivery
};

struct SwarmParams {
    std::int64_t content_bytes = 0;
    std::int64_t block_bytes = 16;
    std::size_t max_neighbors = 80;
    std::size_t max_initiated = 40;
    std::size_t tracker_list_size = 50;
    SimTime rate_window = 20.0;
};

/// Live peers, their wiring, and the steady-state churn rule.
///
/// Peer records are node-stable: references stay valid until the peer
/// departs.
class Swarm {
public:
    explicit Swarm(SwarmParams params);

    const SwarmParams& params() const noexcept { return params_; }
    std::int64_t content_bytes() const noexcept { return params_.content_bytes; }

    /// A fresh record with the next unused id. Seeds start complete.
    PeerRecord make_peer(PeerState state, SimTime t);

    /// Wires the newcomer to a random tracker list, respecting the
    /// neighbor and initiated-connection caps. Faults on a duplicate id.
    PeerRecord& join(PeerRecord newcomer, SimTime t, RngStream& rng);

    PeerRecord& add_peer(PeerState state, SimTime t, RngStream& rng) {
        return join(make_peer(state, t), t, rng);
    }

    /// Removes a finished leecher and joins a zero-progress replacement.
    /// Faults unless `finished` is a leecher holding the whole content.
    PeerId depart_and_replace(PeerId finished, SimTime t, RngStream& rng);

    /// Credits `bytes` (capped at the content size) from `from` to `to`.
    /// Faults if `from` holds no slot for `to`. Returns the credited count.
    std::int64_t record_transfer(PeerRecord& from, PeerRecord& to, std::int64_t bytes, SimTime t);

    /// Same accounting through a cached link. The caller guarantees the
    /// slot exists; flows are only built for unchoked pairs.
    std::int64_t record_transfer(PeerRecord& from, PeerRecord& to, std::int64_t bytes, SimTime t, TransferLink& link);

    /// Resolves (creating empty estimators if needed) the link for a pair.
    TransferLink link(PeerRecord& from, PeerRecord& to);

    /// Whether `a` wants data from `b` under the sequential-prefix model.
    static bool interested(const PeerRecord& a, const PeerRecord& b) noexcept;

    PeerRecord& peer(PeerId id);
    const PeerRecord& peer(PeerId id) const;
    PeerRecord* find(PeerId id);
    const PeerRecord* find(PeerId id) const;
    bool contains(PeerId id) const { return peers_.contains(id); }

    const std::map<PeerId, PeerRecord>& peers() const noexcept { return peers_; }
    std::map<PeerId, PeerRecord>& peers() noexcept { return peers_; }
    std::size_t size() const noexcept { return peers_.size(); }
    std::size_t leecher_count() const;
    std::size_t seed_count() const;

    const Tracker& tracker() const noexcept { return tracker_; }
    std::uint64_t clients_served() const noexcept { return clients_served_; }

    /// Bytes uploaded by peers that have since departed (for conservation checks).
    std::int64_t departed_uploaded() const noexcept { return departed_uploaded_; }
    std::int64_t departed_downloaded() const noexcept { return departed_downloaded_; }

private:
    void unlink(PeerRecord& gone);

    SwarmParams params_;
    Tracker tracker_;
    std::map<PeerId, PeerRecord> peers_;
    std::uint32_t next_id_ = 0;
    std::uint64_t clients_served_ = 0;
    std::int64_t departed_uploaded_ = 0;
    std::int64_t departed_downloaded_ = 0;
};

} // namespace swarmsim
