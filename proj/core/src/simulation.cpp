#include "swarmsim/simulation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace swarmsim {

namespace {

SwarmParams swarm_params(const ScenarioConfig& cfg, const PolicySpec& policy) {
    SwarmParams p;
    p.content_bytes = cfg.content_bytes;
    p.block_bytes = cfg.block_bytes;
    // Rate estimators span two regular re-evaluations.
    p.rate_window = 2 * policy.regular_period;
    return p;
}

std::string peer_str(PeerId id) { return std::to_string(to_index(id)); }

} // namespace

Simulation::Simulation(const ScenarioConfig& cfg, std::uint64_t seed, RunOptions options)
    : cfg_(cfg),
      options_(options),
      policy_(builtin_policy(cfg.policy)),
      horizon_(cfg.resolved_horizon()),
      slot_rate_(cfg.upload_rate() / policy_.total_slots()),
      rng_(seed),
      swarm_(swarm_params(cfg, policy_)) {
    cfg_.validate();
    if (cfg_.warmup) warmup_end_ = *cfg_.warmup;

    for (int i = 0; i < cfg_.n; ++i) swarm_.add_peer(PeerState::Seed, 0, rng_);
    for (int i = 0; i < cfg_.m; ++i) initial_cohort_.insert(swarm_.add_peer(PeerState::Leecher, 0, rng_).id);
    for (const auto& [id, peer] : swarm_.peers()) schedule_ticks(peer, 0);
    engine_.schedule(horizon_, EventKind::MeasurementEnd);
    rebuild_flows();
}

void Simulation::schedule_ticks(const PeerRecord& peer, SimTime t) {
    PeerEvents ev;
    ev.regular = engine_.schedule(t, EventKind::RegularUnchokeTick, peer.id);
    ev.optimistic = engine_.schedule(t, EventKind::OptimisticUnchokeTick, peer.id);
    peer_events_[peer.id] = ev;
}

void Simulation::violation(std::string what) {
    ++violations_;
    if (violation_samples_.size() < options_.violation_sample_limit) {
        violation_samples_.push_back("t=" + std::to_string(engine_.now()) + ": " + std::move(what));
    }
}

void Simulation::run_until(SimTime t) {
    const SimTime limit = std::min(t, horizon_);
    DispatchStats stats = engine_.run_until(limit, [this](const Event& e) { dispatch(e); });
    dispatched_ += stats.dispatched;
}

void Simulation::dispatch(const Event& event) {
    if (finished_) return;
    const SimTime t = event.fire_at;
    const bool peer_event = event.kind == EventKind::RegularUnchokeTick ||
                            event.kind == EventKind::OptimisticUnchokeTick;
    if (peer_event && !swarm_.contains(event.peer)) {
        violation(std::string(to_string(event.kind)) + " dispatched for departed peer " + peer_str(event.peer));
        return;
    }

    advance_to(t);
    handle_completions(t);

    switch (event.kind) {
    case EventKind::RegularUnchokeTick:
        // The peer may have finished at this very instant.
        if (PeerRecord* peer = swarm_.find(event.peer)) on_regular_tick(*peer, t);
        break;
    case EventKind::OptimisticUnchokeTick:
        if (PeerRecord* peer = swarm_.find(event.peer)) on_optimistic_tick(*peer, t);
        break;
    case EventKind::TransferCompletion:
        break;
    case EventKind::MeasurementEnd:
        finished_ = true;
        break;
    }

    if (flows_dirty_) {
        rebuild_flows();
    } else if (!dirty_senders_.empty()) {
        update_senders();
    }
    dirty_senders_.clear();
    if (!finished_) reschedule_completion();
    if (options_.check_invariants) check_invariants(membership_changed_);
    membership_changed_ = false;
}

void Simulation::advance_to(SimTime t) {
    const SimTime dt = t - last_advance_;
    if (dt <= 0) return;
    last_advance_ = t;
    if (flows_.flows.empty()) return;

    sender_progress_.resize(flow_ends_.size());
    for (std::size_t i = 0; i < flow_ends_.size(); ++i) sender_progress_[i] = flow_ends_[i].sender->progress_bytes;

    deliveries_.clear();
    advance_flows(flows_, dt, cfg_.occupancy, cfg_.block_bytes, deliveries_);

    const bool check = options_.check_invariants;
    if (check) inbound_scratch_.assign(receivers_.size(), 0.0);
    constexpr std::int64_t kUnbounded = std::numeric_limits<std::int64_t>::max();
    for (std::size_t i = 0; i < deliveries_.size(); ++i) {
        FlowEnds& ends = flow_ends_[i];
        // Under the prefix model a leecher can only hand over what it
        // held when the interval began.
        const std::int64_t cap = ends.sender->is_seed() ? kUnbounded
                                                        : sender_progress_[i] - ends.receiver->progress_bytes;
        const std::int64_t bytes = std::min(deliveries_[i].bytes, std::max<std::int64_t>(cap, 0));
        if (bytes <= 0) continue;
        const std::int64_t credited = swarm_.record_transfer(*ends.sender, *ends.receiver, bytes, t, ends.link);
        if (check) inbound_scratch_[ends.receiver_index] += static_cast<double>(credited);
    }

    if (check) {
        std::vector<std::size_t> inbound_flows(receivers_.size(), 0);
        for (const FlowEnds& ends : flow_ends_) ++inbound_flows[ends.receiver_index];
        for (std::size_t r = 0; r < receivers_.size(); ++r) {
            const double ceiling = cfg_.r_down * cfg_.occupancy.occupancy * dt +
                                   static_cast<double>(inbound_flows[r] * cfg_.block_bytes) + 1e-6;
            if (inbound_scratch_[r] > ceiling) {
                violation("receiver " + peer_str(receivers_[r]->id) + " got " + std::to_string(inbound_scratch_[r]) +
                          " bytes, above the R_down ceiling " + std::to_string(ceiling));
            }
        }
    }
}

void Simulation::handle_completions(SimTime t) {
    std::vector<PeerId> done;
    for (const auto& [id, peer] : swarm_.peers()) {
        if (peer.is_leecher() && peer.progress_bytes == cfg_.content_bytes) done.push_back(id);
    }
    for (PeerId id : done) {
        const SimTime arrival = swarm_.peer(id).arrival_time;
        departures_.push_back({id, arrival, t});

        if (auto it = peer_events_.find(id); it != peer_events_.end()) {
            engine_.cancel(it->second.regular);
            engine_.cancel(it->second.optimistic);
            peer_events_.erase(it);
        }
        last_progress_.erase(id);
        const PeerId newcomer = swarm_.depart_and_replace(id, t, rng_);
        schedule_ticks(swarm_.peer(newcomer), t);

        if (initial_cohort_.erase(id) > 0 && initial_cohort_.empty() && !warmup_end_) warmup_end_ = t;
        flows_dirty_ = true;
        membership_changed_ = true;
    }
}

void Simulation::on_regular_tick(PeerRecord& peer, SimTime t) {
    if (peer.is_leecher()) {
        // Sources already marked as snubbing hold no regular slot, so only
        // newly expired ones need the full check.
        sources_.clear();
        for (const auto& [remote, when] : peer.last_received_piece_at) {
            if (t - when > options_.snub_timeout && !peer.snubbed_by.contains(remote)) sources_.push_back(remote);
        }
        const std::size_t before = peer.slots.size();
        for (PeerId remote : sources_) snub_check(peer, remote, t, options_.snub_timeout);
        if (peer.slots.size() != before) dirty_senders_.push_back(peer.id);
    }

    std::vector<SlotAssignment> chosen = regular_unchoke(peer, swarm_, policy_, t, rng_);
    const bool overflow = snubbed_by_all_sources(peer) ||
                          peer.slot_count(SlotKind::Optimistic) > static_cast<std::size_t>(policy_.optimistic_slots);
    if (options_.check_invariants) {
        for (const SlotAssignment& s : chosen) {
            if (peer.snubbed_by.contains(s.target)) {
                violation("regular unchoke of snubbing peer " + peer_str(s.target) + " by " + peer_str(peer.id));
            }
        }
    }
    AssignmentDelta delta = apply_assignments(peer, std::move(chosen), AssignmentScope::Regular, t, slot_rate_,
                                              policy_.total_slots(), overflow);
    if (!delta.empty()) dirty_senders_.push_back(peer.id);
    peer_events_[peer.id].regular = engine_.schedule(t + policy_.regular_period, EventKind::RegularUnchokeTick, peer.id);
}

void Simulation::on_optimistic_tick(PeerRecord& peer, SimTime t) {
    std::vector<SlotAssignment> chosen = optimistic_unchoke(peer, swarm_, policy_, t, rng_);
    if (options_.check_invariants) {
        for (const SlotAssignment& s : chosen) {
            const SlotAssignment* held = peer.slot_for(s.target);
            if (held != nullptr && held->kind == SlotKind::Regular) {
                violation("optimistic pick " + peer_str(s.target) + " already regular-unchoked by " + peer_str(peer.id));
            }
        }
    }
    const bool overflow = chosen.size() > static_cast<std::size_t>(policy_.optimistic_slots);
    AssignmentDelta delta = apply_assignments(peer, std::move(chosen), AssignmentScope::Optimistic, t, slot_rate_,
                                              policy_.total_slots(), overflow);
    if (!delta.empty()) dirty_senders_.push_back(peer.id);
    peer_events_[peer.id].optimistic =
        engine_.schedule(t + policy_.optimistic_period, EventKind::OptimisticUnchokeTick, peer.id);
}

void Simulation::rebuild_flows() {
    // peers() iterates in id order, so live_ stays sorted for binary search.
    live_.clear();
    receivers_.clear();
    requests_.clear();
    for (auto& [id, peer] : swarm_.peers()) {
        const std::size_t receiver_index = peer.is_leecher() ? receivers_.size() : kNotReceiver;
        live_.push_back({id, &peer, receiver_index});
        if (peer.is_leecher()) receivers_.push_back(&peer);
        for (const SlotAssignment& s : peer.slots) requests_.push_back({id, s.target, s.granted_rate});
    }
    FlowSet next = resolve_rates(requests_, cfg_.r_down, cfg_.upload_rate());
    next.inherit_residues(flows_);
    flows_ = std::move(next);

    flow_ends_.clear();
    flow_ends_.reserve(flows_.flows.size());
    for (const Flow& f : flows_.flows) {
        const LivePeer& to = live_peer(f.to);
        if (to.receiver_index == kNotReceiver) fault("rebuild_flows: flow into a seed");
        PeerRecord* from = live_peer(f.from).record;
        flow_ends_.push_back({from, to.record, to.receiver_index, swarm_.link(*from, *to.record)});
    }
    flows_dirty_ = false;
}

void Simulation::update_senders() {
    std::sort(dirty_senders_.begin(), dirty_senders_.end());
    dirty_senders_.erase(std::unique(dirty_senders_.begin(), dirty_senders_.end()), dirty_senders_.end());
    for (PeerId id : dirty_senders_) {
        PeerRecord& sender = swarm_.peer(id);
        requests_.clear();
        for (const SlotAssignment& s : sender.slots) requests_.push_back({id, s.target, s.granted_rate});
        const SenderUpdate u = replace_sender_flows(flows_, id, requests_, cfg_.r_down, cfg_.upload_rate());

        const auto at = flow_ends_.begin() + static_cast<std::ptrdiff_t>(u.begin);
        flow_ends_.erase(at, at + static_cast<std::ptrdiff_t>(u.removed));
        std::vector<FlowEnds> fresh;
        fresh.reserve(u.inserted);
        for (std::size_t i = u.begin; i < u.begin + u.inserted; ++i) {
            const LivePeer& to = live_peer(flows_.flows[i].to);
            if (to.receiver_index == kNotReceiver) fault("update_senders: flow into a seed");
            fresh.push_back({&sender, to.record, to.receiver_index, swarm_.link(sender, *to.record)});
        }
        flow_ends_.insert(flow_ends_.begin() + static_cast<std::ptrdiff_t>(u.begin), fresh.begin(), fresh.end());
    }
}

const Simulation::LivePeer& Simulation::live_peer(PeerId id) const {
    auto it = std::lower_bound(live_.begin(), live_.end(), id, [](const LivePeer& p, PeerId key) { return p.id < key; });
    if (it == live_.end() || it->id != id) fault("flow references unknown peer " + peer_str(id));
    return *it;
}

void Simulation::reschedule_completion() {
    inbound_scratch_.assign(receivers_.size(), 0.0);
    for (std::size_t i = 0; i < flow_ends_.size(); ++i) {
        const FlowEnds& ends = flow_ends_[i];
        if (ends.sender->is_seed() || ends.sender->progress_bytes > ends.receiver->progress_bytes) {
            inbound_scratch_[ends.receiver_index] += flows_.flows[i].effective_rate;
        }
    }

    std::optional<SimTime> best;
    PeerId best_peer{};
    const SimTime now = engine_.now();
    for (std::size_t r = 0; r < receivers_.size(); ++r) {
        if (inbound_scratch_[r] <= 0) continue;
        const double rate = inbound_scratch_[r];
        auto dt = completion_time(cfg_.content_bytes - receivers_[r]->progress_bytes, std::span(&rate, 1),
                                  cfg_.occupancy);
        if (dt && (!best || now + *dt < *best)) {
            best = now + *dt;
            best_peer = receivers_[r]->id;
        }
    }

    if (best && engine_.is_pending(completion_event_) && completion_at_ == *best) return;
    engine_.cancel(completion_event_);
    completion_event_ = EventHandle{};
    if (best && *best <= horizon_) {
        completion_event_ = engine_.schedule(*best, EventKind::TransferCompletion, best_peer);
        completion_at_ = *best;
    }
}

void Simulation::check_invariants(bool membership_changed) {
    const std::int64_t content = cfg_.content_bytes;
    if (swarm_.leecher_count() != static_cast<std::size_t>(cfg_.m) ||
        swarm_.seed_count() != static_cast<std::size_t>(cfg_.n)) {
        violation("population drifted to " + std::to_string(swarm_.leecher_count()) + " leechers and " +
                  std::to_string(swarm_.seed_count()) + " seeds");
    }

    std::int64_t uploaded = swarm_.departed_uploaded();
    std::int64_t downloaded = swarm_.departed_downloaded();
    const int slot_bound = policy_.total_slots();
    for (const auto& [id, peer] : swarm_.peers()) {
        uploaded += peer.uploaded_bytes;
        downloaded += peer.downloaded_bytes;

        if (peer.progress_bytes < 0 || peer.progress_bytes > content) {
            violation("peer " + peer_str(id) + " progress out of range");
        }
        if (peer.progress_bytes % cfg_.block_bytes != 0) violation("peer " + peer_str(id) + " progress not block-aligned");
        if (peer.is_seed() != (peer.progress_bytes == content)) {
            violation("peer " + peer_str(id) + " seed state disagrees with progress");
        }
        auto [it, fresh] = last_progress_.try_emplace(id, peer.progress_bytes);
        if (!fresh) {
            if (peer.progress_bytes < it->second) violation("peer " + peer_str(id) + " progress decreased");
            it->second = peer.progress_bytes;
        }

        const bool exception = peer.slot_count(SlotKind::Optimistic) > static_cast<std::size_t>(policy_.optimistic_slots);
        const std::size_t bound = static_cast<std::size_t>(exception ? 2 * slot_bound : slot_bound);
        if (peer.slots.size() > bound) {
            violation("peer " + peer_str(id) + " holds " + std::to_string(peer.slots.size()) + " slots");
        }
        for (const SlotAssignment& s : peer.slots) {
            if (!peer.neighbors.contains(s.target)) violation("peer " + peer_str(id) + " unchokes a non-neighbor");
            if (s.kind == SlotKind::Regular && peer.snubbed_by.contains(s.target)) {
                violation("peer " + peer_str(id) + " keeps a regular slot for snubbing peer " + peer_str(s.target));
            }
        }
        if (membership_changed) {
            for (PeerId nid : peer.neighbors) {
                const PeerRecord* other = swarm_.find(nid);
                if (other == nullptr || !other->neighbors.contains(id)) {
                    violation("neighbor link " + peer_str(id) + " -> " + peer_str(nid) + " is not symmetric");
                }
            }
        }
        auto ev = peer_events_.find(id);
        if (ev == peer_events_.end() || !engine_.is_pending(ev->second.regular) ||
            !engine_.is_pending(ev->second.optimistic)) {
            if (!finished_) violation("peer " + peer_str(id) + " has no pending ticks");
        }
    }
    if (uploaded != downloaded) {
        violation("byte conservation: uploaded " + std::to_string(uploaded) + " != downloaded " +
                  std::to_string(downloaded));
    }
}

RunResult Simulation::run() {
    run_until(horizon_);

    RunResult result;
    result.seed = rng_.seed();
    result.horizon = horizon_;
    result.warmup_auto = !cfg_.warmup.has_value();
    result.warmup_end = warmup_end_.value_or(horizon_);
    result.total_completions = swarm_.clients_served();
    result.dispatched_events = dispatched_;

    const double exclusive = cfg_.exclusive_time();
    for (const Departure& d : departures_) {
        if (d.arrival >= result.warmup_end && d.departure <= horizon_) {
            result.ledger.add({d.id, d.arrival, d.departure, exclusive, d.departure - d.arrival});
        } else {
            ++result.excluded_warmup;
        }
    }
    for (const auto& [id, peer] : swarm_.peers()) {
        if (peer.is_leecher() && peer.arrival_time >= result.warmup_end) ++result.censored_at_end;
    }
    std::int64_t bytes = swarm_.departed_downloaded();
    for (const auto& [id, peer] : swarm_.peers()) bytes += peer.downloaded_bytes;
    result.bytes_transferred = bytes;
    result.invariant_violations = violations_;
    result.violation_samples = violation_samples_;

    if (result.ledger.empty()) {
        throw MetricError(warmup_end_ ? "no download both started and finished inside the measurement window"
                                      : "warm-up did not finish before the horizon; increase the horizon");
    }
    finalize_metrics(result);
    if (!(result.erc >= 0.0 && result.erc <= 1.0)) {
        ++result.invariant_violations;
        result.violation_samples.push_back("ERC " + std::to_string(result.erc) + " outside [0, 1]");
    }
    return result;
}

RunResult run_replication(const ScenarioConfig& cfg, std::uint64_t seed, const RunOptions& options) {
    Simulation sim(cfg, seed, options);
    return sim.run();
}

} // namespace swarmsim
