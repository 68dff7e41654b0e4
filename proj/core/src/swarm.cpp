#include "swarmsim/swarm.hpp"

#include <algorithm>
#include <string>

namespace swarmsim {

const char* to_string(SlotKind kind) noexcept {
    return kind == SlotKind::Regular ? "regular" : "optimistic";
}

// ---------------------------------------------------------------------------
// RateEstimator

RateEstimator::RateEstimator(SimTime window_seconds) : window_(window_seconds) {
    require(window_seconds > 0, "RateEstimator: window must be positive");
}

void RateEstimator::evict(SimTime now) {
    const SimTime cutoff = now - window_;
    while (head_ < samples_.size() && samples_[head_].t <= cutoff) {
        total_ -= samples_[head_].bytes;
        ++head_;
    }
    // Reclaim the evicted prefix once it dominates the buffer.
    if (head_ > 32 && head_ * 2 > samples_.size()) {
        samples_.erase(samples_.begin(), samples_.begin() + static_cast<std::ptrdiff_t>(head_));
        head_ = 0;
    }
}

void RateEstimator::add(SimTime t, std::int64_t bytes) {
    require(bytes >= 0, "RateEstimator: negative byte count");
    if (head_ < samples_.size() && samples_.back().t == t) {
        samples_.back().bytes += bytes;
    } else {
        samples_.push_back({t, bytes});
    }
    total_ += bytes;
    evict(t);
}

std::int64_t RateEstimator::bytes_in_window(SimTime now) const {
    const SimTime cutoff = now - window_;
    std::int64_t total = total_;
    for (std::size_t i = head_; i < samples_.size() && samples_[i].t <= cutoff; ++i) total -= samples_[i].bytes;
    return total;
}

double RateEstimator::rate(SimTime now) const {
    return static_cast<double>(bytes_in_window(now)) / window_;
}

// ---------------------------------------------------------------------------
// PeerRecord

double PeerRecord::upload_rate_to_me(PeerId remote, SimTime now) const {
    auto it = rate_in.find(remote);
    return it == rate_in.end() ? 0.0 : it->second.rate(now);
}

double PeerRecord::my_upload_rate_to(PeerId remote, SimTime now) const {
    auto it = rate_out.find(remote);
    return it == rate_out.end() ? 0.0 : it->second.rate(now);
}

SimTime PeerRecord::unchoked_at(PeerId remote) const {
    auto it = last_unchoked_at.find(remote);
    return it == last_unchoked_at.end() ? kNever : it->second;
}

const SlotAssignment* PeerRecord::slot_for(PeerId target) const {
    for (const SlotAssignment& s : slots) {
        if (s.target == target) return &s;
    }
    return nullptr;
}

std::size_t PeerRecord::slot_count(SlotKind kind) const {
    return static_cast<std::size_t>(
        std::count_if(slots.begin(), slots.end(), [kind](const SlotAssignment& s) { return s.kind == kind; }));
}

// ---------------------------------------------------------------------------
// Tracker

void Tracker::add(PeerId id) { roster_.insert(id); }

void Tracker::remove(PeerId id) { roster_.erase(id); }

std::vector<PeerId> Tracker::random_list(PeerId requester, RngStream& rng) const {
    std::vector<PeerId> others;
    others.reserve(roster_.size());
    for (PeerId id : roster_) {
        if (id != requester) others.push_back(id);
    }
    const std::size_t k = std::min(list_size_, others.size());
    std::vector<PeerId> out;
    out.reserve(k);
    for (std::size_t idx : rng.sample(others.size(), k)) out.push_back(others[idx]);
    return out;
}

// ---------------------------------------------------------------------------
// Swarm

Swarm::Swarm(SwarmParams params) : params_(params), tracker_(params.tracker_list_size) {
    require(params_.block_bytes > 0, "Swarm: block size must be positive");
    require(params_.content_bytes >= params_.block_bytes, "Swarm: content smaller than a block");
}

PeerRecord Swarm::make_peer(PeerState state, SimTime t) {
    PeerRecord rec;
    rec.id = PeerId{next_id_++};
    rec.state = state;
    rec.arrival_time = t;
    rec.progress_bytes = state == PeerState::Seed ? params_.content_bytes : 0;
    return rec;
}

PeerRecord& Swarm::join(PeerRecord newcomer, SimTime t, RngStream& rng) {
    if (tracker_.contains(newcomer.id) || peers_.contains(newcomer.id)) {
        fault("join: duplicate peer id " + std::to_string(to_index(newcomer.id)));
    }
    next_id_ = std::max(next_id_, to_index(newcomer.id) + 1);
    newcomer.arrival_time = t;

    const std::vector<PeerId> list = tracker_.random_list(newcomer.id, rng);
    auto [it, inserted] = peers_.emplace(newcomer.id, std::move(newcomer));
    PeerRecord& rec = it->second;

    for (PeerId remote_id : list) {
        if (rec.initiated_connections >= params_.max_initiated) break;
        if (rec.neighbors.size() >= params_.max_neighbors) break;
        PeerRecord& remote = peers_.at(remote_id);
        if (remote.neighbors.size() >= params_.max_neighbors) continue;
        rec.neighbors.insert(remote_id);
        remote.neighbors.insert(rec.id);
        ++rec.initiated_connections;
    }
    tracker_.add(rec.id);
    return rec;
}

void Swarm::unlink(PeerRecord& gone) {
    for (PeerId nid : gone.neighbors) {
        PeerRecord& n = peers_.at(nid);
        n.neighbors.erase(gone.id);
        n.rate_in.erase(gone.id);
        n.rate_out.erase(gone.id);
        n.snubbed_by.erase(gone.id);
        n.last_unchoked_at.erase(gone.id);
        n.last_received_piece_at.erase(gone.id);
        std::erase_if(n.slots, [&](const SlotAssignment& s) { return s.target == gone.id; });
    }
    tracker_.remove(gone.id);
}

PeerId Swarm::depart_and_replace(PeerId finished, SimTime t, RngStream& rng) {
    PeerRecord& rec = peer(finished);
    if (!rec.is_leecher()) fault("depart_and_replace: seeds never depart");
    if (rec.progress_bytes != params_.content_bytes) {
        fault("depart_and_replace: leecher " + std::to_string(to_index(finished)) + " has not finished");
    }
    departed_uploaded_ += rec.uploaded_bytes;
    departed_downloaded_ += rec.downloaded_bytes;
    unlink(rec);
    peers_.erase(finished);
    ++clients_served_;
    return add_peer(PeerState::Leecher, t, rng).id;
}

std::int64_t Swarm::record_transfer(PeerRecord& from, PeerRecord& to, std::int64_t bytes, SimTime t) {
    if (!from.unchokes(to.id)) {
        fault("record_transfer: peer " + std::to_string(to_index(from.id)) + " holds no slot for " +
              std::to_string(to_index(to.id)));
    }
    TransferLink l = link(from, to);
    return record_transfer(from, to, bytes, t, l);
}

TransferLink Swarm::link(PeerRecord& from, PeerRecord& to) {
    TransferLink l;
    l.in = &to.rate_in.try_emplace(from.id, params_.rate_window).first->second;
    l.out = &from.rate_out.try_emplace(to.id, params_.rate_window).first->second;
    if (auto it = to.last_received_piece_at.find(from.id); it != to.last_received_piece_at.end()) {
        l.last_received = &it->second;
    }
    return l;
}

std::int64_t Swarm::record_transfer(PeerRecord& from, PeerRecord& to, std::int64_t bytes, SimTime t,
                                    TransferLink& link) {
    require(bytes >= 0, "record_transfer: negative byte count");
    const std::int64_t credited = std::min(bytes, params_.content_bytes - to.progress_bytes);
    if (credited <= 0) return 0;

    to.progress_bytes += credited;
    to.downloaded_bytes += credited;
    from.uploaded_bytes += credited;
    link.in->add(t, credited);
    link.out->add(t, credited);

    if (link.last_received == nullptr) link.last_received = &to.last_received_piece_at[from.id];
    *link.last_received = t;
    to.last_piece_at = t;
    if (!to.snubbed_by.empty()) to.snubbed_by.erase(from.id);
    return credited;
}

bool Swarm::interested(const PeerRecord& a, const PeerRecord& b) noexcept {
    if (a.is_seed()) return false;
    return b.progress_bytes > a.progress_bytes;
}

PeerRecord& Swarm::peer(PeerId id) {
    auto it = peers_.find(id);
    if (it == peers_.end()) fault("unknown peer " + std::to_string(to_index(id)));
    return it->second;
}

const PeerRecord& Swarm::peer(PeerId id) const {
    auto it = peers_.find(id);
    if (it == peers_.end()) fault("unknown peer " + std::to_string(to_index(id)));
    return it->second;
}

PeerRecord* Swarm::find(PeerId id) {
    auto it = peers_.find(id);
    return it == peers_.end() ? nullptr : &it->second;
}

const PeerRecord* Swarm::find(PeerId id) const {
    auto it = peers_.find(id);
    return it == peers_.end() ? nullptr : &it->second;
}

std::size_t Swarm::leecher_count() const {
    return static_cast<std::size_t>(
        std::count_if(peers_.begin(), peers_.end(), [](const auto& kv) { return kv.second.is_leecher(); }));
}

std::size_t Swarm::seed_count() const { return peers_.size() - leecher_count(); }

} // namespace swarmsim
