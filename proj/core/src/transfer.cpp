#include "swarmsim/transfer.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <string>
#include <utility>
#include <vector>


namespace swarmsim {

std::optional<OccupancyProfile> OccupancyProfile::from_label(std::string_view label) {
    std::string upper(label);
    std::transform(upper.begin(), upper.end(), upper.begin(),
                   [](unsigned char c) { return static_cast<char>(std::toupper(c)); });
    if (upper == "HI") return OccupancyProfile{kHigh};
    if (upper == "MI") return OccupancyProfile{kMedium};
    if (upper == "LI") return OccupancyProfile{kLow};
    if (upper == "NI") return OccupancyProfile{kNone};
    return std::nullopt;
}

std::optional<std::string_view> OccupancyProfile::label() const {
    if (occupancy == kHigh) return "HI";
    if (occupancy == kMedium) return "MI";
    if (occupancy == kLow) return "LI";
    if (occupancy == kNone) return "NI";
    return std::nullopt;
}

double FlowSet::inbound(PeerId to) const {
    double sum = 0;
    for (const Flow& f : flows) {
        if (f.to == to) sum += f.effective_rate;
    }
    return sum;
}

double FlowSet::outbound(PeerId from) const {
    double sum = 0;
    for (const Flow& f : flows) {
        if (f.from == from) sum += f.effective_rate;
    }
    return sum;
}

const Flow* FlowSet::find(PeerId from, PeerId to) const {
    auto it = std::lower_bound(flows.begin(), flows.end(), std::pair{from, to},
                               [](const Flow& f, const std::pair<PeerId, PeerId>& key) {
                                   return std::pair{f.from, f.to} < key;
                               });
    if (it == flows.end() || it->from != from || it->to != to) return nullptr;
    return &*it;
}

void FlowSet::inherit_residues(const FlowSet& previous) {
    auto prev = previous.flows.begin();
    for (Flow& f : flows) {
        while (prev != previous.flows.end() && std::pair{prev->from, prev->to} < std::pair{f.from, f.to}) ++prev;
        if (prev != previous.flows.end() && prev->from == f.from && prev->to == f.to) {
            f.residue_bytes = prev->residue_bytes;
        }
    }
}

FlowSet resolve_rates(std::span<const FlowRequest> requests, double r_down, double r_up) {
    FlowSet set;
    set.flows.reserve(requests.size());
    for (const FlowRequest& r : requests) {
        require(r.granted_rate >= 0, "resolve_rates: negative granted rate");
        set.flows.push_back({r.from, r.to, r.granted_rate, r.granted_rate, r.granted_rate, 0.0});
    }
    std::sort(set.flows.begin(), set.flows.end(),
              [](const Flow& a, const Flow& b) { return std::pair{a.from, a.to} < std::pair{b.from, b.to}; });

    // Flows are grouped by sender after the sort.
    for (std::size_t begin = 0; begin < set.flows.size();) {
        std::size_t end = begin;
        double sum = 0;
        while (end < set.flows.size() && set.flows[end].from == set.flows[begin].from) {
            sum += set.flows[end].effective_rate;
            ++end;
        }
        if (sum > r_up) {
            for (std::size_t i = begin; i < end; ++i) set.flows[i].effective_rate *= r_up / sum;
        }
        for (std::size_t i = begin; i < end; ++i) set.flows[i].sender_rate = set.flows[i].effective_rate;
        begin = end;
    }

    // Receiver totals: visit flows ordered by receiver and scale each group.
    std::vector<std::size_t> by_receiver(set.flows.size());
    for (std::size_t i = 0; i < by_receiver.size(); ++i) by_receiver[i] = i;
    std::sort(by_receiver.begin(), by_receiver.end(), [&](std::size_t a, std::size_t b) {
        return std::pair{set.flows[a].to, a} < std::pair{set.flows[b].to, b};
    });
    for (std::size_t begin = 0; begin < by_receiver.size();) {
        const PeerId to = set.flows[by_receiver[begin]].to;
        std::size_t end = begin;
        double sum = 0;
        while (end < by_receiver.size() && set.flows[by_receiver[end]].to == to) {
            sum += set.flows[by_receiver[end]].effective_rate;
            ++end;
        }
        if (sum > r_down) {
            for (std::size_t i = begin; i < end; ++i) set.flows[by_receiver[i]].effective_rate *= r_down / sum;
        }
        begin = end;
    }
    return set;
}

SenderUpdate replace_sender_flows(FlowSet& set, PeerId from, std::span<const FlowRequest> requests, double r_down,
                                  double r_up) {
    auto& flows = set.flows;
    auto first = std::lower_bound(flows.begin(), flows.end(), from, [](const Flow& f, PeerId key) { return f.from < key; });
    auto last = std::find_if(first, flows.end(), [from](const Flow& f) { return f.from != from; });

    std::vector<Flow> fresh;
    fresh.reserve(requests.size());
    for (const FlowRequest& r : requests) {
        require(r.from == from, "replace_sender_flows: request from another sender");
        require(r.granted_rate >= 0, "replace_sender_flows: negative granted rate");
        fresh.push_back({r.from, r.to, r.granted_rate, r.granted_rate, r.granted_rate, 0.0});
    }
    std::sort(fresh.begin(), fresh.end(), [](const Flow& a, const Flow& b) { return a.to < b.to; });
    double granted_sum = 0;
    for (const Flow& f : fresh) granted_sum += f.granted_rate;

    // Receivers whose totals can move: everyone the sender fed before or feeds now.
    std::vector<PeerId> affected;
    affected.reserve(static_cast<std::size_t>(last - first) + fresh.size());
    auto old = first;
    for (Flow& f : fresh) {
        while (old != last && old->to < f.to) ++old;
        if (old != last && old->to == f.to) f.residue_bytes = old->residue_bytes;
        if (granted_sum > r_up) f.sender_rate *= r_up / granted_sum;
        affected.push_back(f.to);
    }
    for (auto it = first; it != last; ++it) affected.push_back(it->to);
    std::sort(affected.begin(), affected.end());
    affected.erase(std::unique(affected.begin(), affected.end()), affected.end());

    SenderUpdate update{static_cast<std::size_t>(first - flows.begin()), static_cast<std::size_t>(last - first),
                        fresh.size()};
    auto pos = flows.erase(first, last);
    flows.insert(pos, fresh.begin(), fresh.end());

    // Receiver caps, summed in flow order exactly as resolve_rates does.
    auto slot_of = [&](PeerId to) {
        std::size_t k = 0;
        while (k < affected.size() && affected[k] != to) ++k;
        return k;
    };
    std::vector<double> sums(affected.size(), 0.0);
    for (const Flow& f : flows) {
        const std::size_t k = slot_of(f.to);
        if (k < affected.size()) sums[k] += f.sender_rate;
    }
    for (Flow& f : flows) {
        const std::size_t k = slot_of(f.to);
        if (k == affected.size()) continue;
        double rate = f.sender_rate;
        if (sums[k] > r_down) rate *= r_down / sums[k];
        f.effective_rate = rate;
    }
    return update;
}

void advance_flows(FlowSet& flows, SimTime dt, OccupancyProfile occupancy, std::int64_t block_bytes,
                   std::vector<Delivery>& out) {
    require(dt >= 0, "advance_flows: negative interval");
    require(block_bytes > 0, "advance_flows: block size must be positive");
    const double block = static_cast<double>(block_bytes);
    for (Flow& f : flows.flows) {
        const double owed = f.residue_bytes + f.effective_rate * occupancy.occupancy * dt;
        const double blocks = std::floor(owed / block);
        const auto bytes = static_cast<std::int64_t>(blocks) * block_bytes;
        f.residue_bytes = owed - blocks * block;
        out.push_back({f.from, f.to, bytes});
    }
}

std::optional<SimTime> completion_time(std::int64_t remaining_bytes, std::span<const double> inbound_rates,
                                       OccupancyProfile occupancy, std::optional<SimTime> within) {
    if (remaining_bytes <= 0) return SimTime{0};
    double rate = 0;
    for (double r : inbound_rates) rate += r;
    rate *= occupancy.occupancy;
    if (!(rate > 0)) return std::nullopt;
    const SimTime dt = static_cast<double>(remaining_bytes) / rate;
    if (within && dt > *within) return std::nullopt;
    return dt;
}

} // namespace swarmsim
