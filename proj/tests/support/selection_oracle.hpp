#pragma once

#include <algorithm>
#include <set>
#include <string>
#include <vector>

#include "fixtures.hpp"
#include "swarmsim/policy.hpp"

// Exhaustive oracle for regular unchoke selection: a selection is valid iff it
// is the prefix of some ordering of the eligible candidates in which no pair is
// strictly out of order under the documented criterion.
namespace swarmsim::testing {

struct OracleCandidate {
    PeerId id;
    double rate_in, rate_out;
    SimTime last_unchoked, last_piece;
};

// True when `a` must come strictly before `b`.
inline bool strictly_before(PolicyName policy, bool local_is_seed, const OracleCandidate& a,
                            const OracleCandidate& b) {
    if (local_is_seed) {
        if (policy == PolicyName::BT) return a.rate_out > b.rate_out;
        if (a.last_unchoked != b.last_unchoked) return a.last_unchoked > b.last_unchoked;
        return a.rate_out > b.rate_out;
    }
    if (policy == PolicyName::SRNP) {
        if (a.last_piece != b.last_piece) return a.last_piece < b.last_piece;
        return a.rate_in > b.rate_in;
    }
    return a.rate_in > b.rate_in;
}

inline std::set<std::vector<PeerId>> valid_prefixes(PolicyName policy, bool local_is_seed,
                                                    std::vector<OracleCandidate> cands, std::size_t k) {
    const auto by_id = [](const OracleCandidate& x, const OracleCandidate& y) { return x.id < y.id; };
    std::sort(cands.begin(), cands.end(), by_id);
    std::set<std::vector<PeerId>> out;
    do {
        bool ok = true;
        for (std::size_t i = 0; i < cands.size() && ok; ++i) {
            for (std::size_t j = i + 1; j < cands.size() && ok; ++j) {
                if (strictly_before(policy, local_is_seed, cands[j], cands[i])) ok = false;
            }
        }
        if (!ok) continue;
        std::vector<PeerId> prefix;
        for (std::size_t i = 0; i < std::min(k, cands.size()); ++i) prefix.push_back(cands[i].id);
        out.insert(prefix);
    } while (std::next_permutation(cands.begin(), cands.end(), by_id));
    return out;
}

struct OracleOutcome {
    int checked = 0;
    int mismatches = 0;
    std::string first_mismatch;
};

/// Builds `trials` random snapshots with up to six remotes, coarse rate and
/// time levels so ties are common, and a sprinkling of uninterested, snubbing
/// and optimistically-held peers, then compares each selection to the oracle.
inline OracleOutcome check_random_snapshots(int trials, std::uint64_t seed) {
    RngStream gen(seed);
    const double rate_levels[] = {0, 0, 50, 100, 100, 400};
    const SimTime time_levels[] = {kNever, 10, 20, 20, 35};
    const SimTime now = 40;
    OracleOutcome outcome;
    for (int trial = 0; trial < trials; ++trial) {
        const PolicyName policy = all_policies()[gen.draw_uniform(4)];
        const bool seed_local = gen.draw_uniform(3) == 0;
        Snapshot snap(gen.draw_uniform(7), seed_local ? PeerState::Seed : PeerState::Leecher);
        PeerRecord& me = snap.me();

        std::vector<OracleCandidate> eligible;
        for (PeerId id : snap.remotes) {
            PeerRecord& r = snap.swarm.peer(id);
            const bool uninterested = gen.draw_uniform(6) == 0;
            if (uninterested) r.progress_bytes = seed_local ? kContent : kContent - 16;
            if (uninterested && seed_local) r.state = PeerState::Seed;

            const double rin = rate_levels[gen.draw_uniform(6)];
            const double rout = rate_levels[gen.draw_uniform(6)];
            snap.set_rate_in(id, rin, now);
            snap.set_rate_out(id, rout, now);
            const SimTime unchoked = time_levels[gen.draw_uniform(5)];
            if (unchoked != kNever) me.last_unchoked_at[id] = unchoked;
            r.last_piece_at = time_levels[gen.draw_uniform(5)];

            bool excluded = uninterested;
            if (!seed_local && gen.draw_uniform(5) == 0) {
                me.snubbed_by.insert(id);
                excluded = true;
            }
            if (gen.draw_uniform(6) == 0) {
                me.slots.push_back({SlotKind::Optimistic, id, 2500});
                excluded = true;
            }
            if (!excluded) eligible.push_back({id, rin, rout, unchoked, r.last_piece_at});
        }

        const PolicySpec spec = builtin_policy(policy);
        RngStream tie_rng(std::uint64_t(trial) + 1);
        std::vector<PeerId> got;
        for (const SlotAssignment& s : regular_unchoke(me, snap.swarm, spec, now, tie_rng)) got.push_back(s.target);
        const auto allowed = valid_prefixes(policy, seed_local, eligible, std::size_t(spec.regular_slots));
        if (!allowed.contains(got) && outcome.mismatches++ == 0) {
            outcome.first_mismatch = "trial " + std::to_string(trial) + " policy " + std::string(to_string(policy));
        }
        ++outcome.checked;
    }
    return outcome;
}

} // namespace swarmsim::testing
