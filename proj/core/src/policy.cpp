#include "swarmsim/policy.hpp"

#include <algorithm>
#include <cctype>
#include <span>
#include <tuple>

namespace swarmsim {

PolicySpec builtin_policy(PolicyName name) {
    using OC = OrderingCriterion;
    switch (name) {
    case PolicyName::BT:
        return {name, 3, 1, 10, 30, OC::UploadRateToLocal, OC::UploadRateFromLocal};
    case PolicyName::SBNP:
        return {name, 2, 2, 10, 30, OC::UploadRateToLocal, OC::LastUnchokedTime};
    case PolicyName::SONP:
        return {name, 1, 3, 10, 20, OC::UploadRateToLocal, OC::LastUnchokedTime};
    case PolicyName::SRNP:
        return {name, 3, 1, 10, 30, OC::RateThenLastReceived, OC::LastUnchokedTime};
    }
    fault("builtin_policy: unknown policy");
}

const std::vector<PolicyName>& all_policies() {
    static const std::vector<PolicyName> names{PolicyName::BT, PolicyName::SBNP, PolicyName::SONP,
                                               PolicyName::SRNP};
    return names;
}

std::string to_string(PolicyName name) {
    switch (name) {
    case PolicyName::BT: return "bt";
    case PolicyName::SBNP: return "sbnp";
    case PolicyName::SONP: return "sonp";
    case PolicyName::SRNP: return "srnp";
    }
    return "unknown";
}

const char* to_string(OrderingCriterion criterion) noexcept {
    switch (criterion) {
    case OrderingCriterion::UploadRateToLocal: return "upload_rate_to_local";
    case OrderingCriterion::UploadRateFromLocal: return "upload_rate_from_local";
    case OrderingCriterion::LastUnchokedTime: return "last_unchoked_time";
    case OrderingCriterion::RateThenLastReceived: return "rate_then_last_received";
    }
    return "unknown";
}

std::optional<PolicyName> parse_policy(std::string_view text) {
    std::string lower(text);
    std::transform(lower.begin(), lower.end(), lower.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    for (PolicyName name : all_policies()) {
        if (to_string(name) == lower) return name;
    }
    return std::nullopt;
}

std::vector<PeerId> interested_neighbors(const PeerRecord& local, const Swarm& swarm) {
    std::vector<PeerId> out;
    out.reserve(local.neighbors.size());
    for (PeerId id : local.neighbors) {
        if (Swarm::interested(swarm.peer(id), local)) out.push_back(id);
    }
    return out;
}

bool snubbed_by_all_sources(const PeerRecord& local) {
    if (!local.is_leecher() || local.last_received_piece_at.empty()) return false;
    for (const auto& [source, when] : local.last_received_piece_at) {
        if (!local.snubbed_by.contains(source)) return false;
    }
    return true;
}

std::vector<PeerId> regular_candidates(const PeerRecord& local, const Swarm& swarm) {
    std::vector<PeerId> out;
    for (PeerId id : interested_neighbors(local, swarm)) {
        if (local.snubbed_by.contains(id)) continue;
        const SlotAssignment* held = local.slot_for(id);
        if (held != nullptr && held->kind == SlotKind::Optimistic) continue;
        out.push_back(id);
    }
    return out;
}

namespace {

// Sort key: smaller sorts first.
struct RankKey {
    double primary;
    double secondary;
    auto operator<=>(const RankKey&) const = default;
};

RankKey rank_key(OrderingCriterion criterion, const PeerRecord& local, const PeerRecord& cand, SimTime t) {
    switch (criterion) {
    case OrderingCriterion::UploadRateToLocal:
        return {-local.upload_rate_to_me(cand.id, t), 0.0};
    case OrderingCriterion::UploadRateFromLocal:
        return {-local.my_upload_rate_to(cand.id, t), 0.0};
    case OrderingCriterion::LastUnchokedTime:
        // kNever negates to +inf and lands last.
        return {-local.unchoked_at(cand.id), -local.my_upload_rate_to(cand.id, t)};
    case OrderingCriterion::RateThenLastReceived:
        return {cand.last_piece_at, -local.upload_rate_to_me(cand.id, t)};
    }
    return {0.0, 0.0};
}

} // namespace

std::vector<SlotAssignment> regular_unchoke(const PeerRecord& local, const Swarm& swarm,
                                            const PolicySpec& policy, SimTime t, RngStream& rng) {
    std::vector<PeerId> candidates = regular_candidates(local, swarm);
    rng.shuffle(std::span<PeerId>(candidates));

    const OrderingCriterion criterion = policy.order_for(local);
    std::vector<std::pair<RankKey, PeerId>> ranked;
    ranked.reserve(candidates.size());
    for (PeerId id : candidates) ranked.emplace_back(rank_key(criterion, local, swarm.peer(id), t), id);
    std::stable_sort(ranked.begin(), ranked.end(),
                     [](const auto& a, const auto& b) { return a.first < b.first; });

    const std::size_t take = std::min<std::size_t>(static_cast<std::size_t>(policy.regular_slots), ranked.size());
    std::vector<SlotAssignment> out;
    out.reserve(take);
    for (std::size_t i = 0; i < take; ++i) out.push_back({SlotKind::Regular, ranked[i].second, 0.0});
    return out;
}

std::vector<SlotAssignment> optimistic_unchoke(const PeerRecord& local, const Swarm& swarm,
                                               const PolicySpec& policy, SimTime /*t*/, RngStream& rng) {
    std::vector<PeerId> candidates;
    for (PeerId id : interested_neighbors(local, swarm)) {
        const SlotAssignment* held = local.slot_for(id);
        if (held != nullptr && held->kind == SlotKind::Regular) continue;
        candidates.push_back(id);
    }
    const int wanted = snubbed_by_all_sources(local) ? policy.total_slots() : policy.optimistic_slots;
    const std::size_t take = std::min<std::size_t>(static_cast<std::size_t>(wanted), candidates.size());

    std::vector<SlotAssignment> out;
    out.reserve(take);
    for (std::size_t idx : rng.sample(candidates.size(), take)) {
        out.push_back({SlotKind::Optimistic, candidates[idx], 0.0});
    }
    return out;
}

bool snub_check(PeerRecord& local, PeerId remote, SimTime t, SimTime timeout) {
    require(local.is_leecher(), "snub_check: only leechers judge snubbing");
    auto it = local.last_received_piece_at.find(remote);
    require(it != local.last_received_piece_at.end(), "snub_check: never downloaded from this remote");
    if (t - it->second <= timeout) return local.snubbed_by.contains(remote);

    local.snubbed_by.insert(remote);
    std::erase_if(local.slots,
                  [&](const SlotAssignment& s) { return s.target == remote && s.kind == SlotKind::Regular; });
    return true;
}

AssignmentDelta apply_assignments(PeerRecord& local, std::vector<SlotAssignment> new_slots, AssignmentScope scope,
                                  SimTime t, double slot_rate, int max_slots, bool allow_overflow) {
    auto in_scope = [scope](SlotKind kind) {
        return scope == AssignmentScope::All || (scope == AssignmentScope::Regular && kind == SlotKind::Regular) ||
               (scope == AssignmentScope::Optimistic && kind == SlotKind::Optimistic);
    };
    auto in_new = [&](PeerId id) {
        return std::any_of(new_slots.begin(), new_slots.end(), [id](const SlotAssignment& s) { return s.target == id; });
    };

    AssignmentDelta delta;
    std::vector<SlotAssignment> kept;
    for (const SlotAssignment& s : local.slots) {
        if (!in_scope(s.kind)) {
            if (in_new(s.target)) fault("apply_assignments: peer already holds a slot of the other kind");
            kept.push_back(s);
        } else if (!in_new(s.target)) {
            delta.choked.push_back(s.target);
        }
    }
    for (SlotAssignment& s : new_slots) {
        if (!in_scope(s.kind)) fault("apply_assignments: slot kind outside scope");
        if (!local.unchokes(s.target)) {
            delta.unchoked.push_back(s.target);
            local.last_unchoked_at[s.target] = t;
        }
        s.granted_rate = slot_rate;
        kept.push_back(s);
    }
    for (std::size_t i = 0; i < kept.size(); ++i) {
        for (std::size_t j = i + 1; j < kept.size(); ++j) {
            if (kept[i].target == kept[j].target) fault("apply_assignments: duplicate slot target");
        }
    }
    const std::size_t bound = static_cast<std::size_t>(allow_overflow ? 2 * max_slots : max_slots);
    if (kept.size() > bound) fault("apply_assignments: too many slots assigned");
    local.slots = std::move(kept);
    return delta;
}

} // namespace swarmsim
