#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "swarmsim/rng.hpp"
#include "swarmsim/swarm.hpp"
#include "swarmsim/types.hpp"

namespace swarmsim {

enum class PolicyName : std::uint8_t { BT, SBNP, SONP, SRNP };

/// How candidates are ranked for a regular unchoke.
enum class OrderingCriterion : std::uint8_t {
    /// Fastest uploaders to the local peer first.
    UploadRateToLocal,
    /// Peers the local peer uploads to fastest first.
    UploadRateFromLocal,
    /// Most recently unchoked first (never-unchoked last); ties by
    /// upload rate from the local peer, higher first.
    LastUnchokedTime,
    /// Peers that went longest without receiving data first (never
    /// received counts as longest); ties by upload rate to the local
    /// peer, higher first.
    RateThenLastReceived,
};

struct PolicySpec {
    PolicyName name = PolicyName::BT;
    int regular_slots = 3;
    int optimistic_slots = 1;
    SimTime regular_period = 10;
    SimTime optimistic_period = 30;
    OrderingCriterion leecher_order = OrderingCriterion::UploadRateToLocal;
    OrderingCriterion seed_order = OrderingCriterion::UploadRateFromLocal;

    int total_slots() const noexcept { return regular_slots + optimistic_slots; }
    OrderingCriterion order_for(const PeerRecord& local) const noexcept {
        return local.is_seed() ? seed_order : leecher_order;
    }
};

/// The built-in policy rows (regular and optimistic slot counts and periods).
PolicySpec builtin_policy(PolicyName name);
const std::vector<PolicyName>& all_policies();

std::string to_string(PolicyName name);
const char* to_string(OrderingCriterion criterion) noexcept;
/// Accepts "bt", "sbnp", "sonp", "srnp" (case-insensitive).
std::optional<PolicyName> parse_policy(std::string_view text);

inline constexpr SimTime kDefaultSnubTimeout = 60.0;

/// Neighbors of `local` that are interested in it.
std::vector<PeerId> interested_neighbors(const PeerRecord& local, const Swarm& swarm);

/// True when `local` is a leecher whose every former source now snubs it.
bool snubbed_by_all_sources(const PeerRecord& local);

/// Candidates for the regular slots: interested neighbors that are not
/// snubbing `local` and do not currently hold one of its optimistic slots.
std::vector<PeerId> regular_candidates(const PeerRecord& local, const Swarm& swarm);

/// Ranks the regular candidates per the policy and returns the first
/// min(regular_slots, #candidates). Equal keys are broken uniformly at
/// random. Assignments carry granted_rate = 0; apply_assignments sets it.
std::vector<SlotAssignment> regular_unchoke(const PeerRecord& local, const Swarm& swarm,
                                            const PolicySpec& policy, SimTime t, RngStream& rng);

/// Uniform random pick, without replacement, among interested neighbors
/// not regular-unchoked by `local`. Snub marks do not exclude anyone. The
/// pick size is optimistic_slots, or total_slots while `local` is snubbed
/// by all of its sources.
std::vector<SlotAssignment> optimistic_unchoke(const PeerRecord& local, const Swarm& swarm,
                                               const PolicySpec& policy, SimTime t, RngStream& rng);

/// Marks `remote` as snubbing `local` once more than `timeout` seconds
/// have passed since `local` last received from it, and drops any
/// regular slot `local` holds for `remote`. Returns whether `remote` is
/// now marked. Faults unless `local` is a leecher that has downloaded
/// from `remote`.
bool snub_check(PeerRecord& local, PeerId remote, SimTime t, SimTime timeout = kDefaultSnubTimeout);

enum class AssignmentScope : std::uint8_t { Regular, Optimistic, All };

struct AssignmentDelta {
    std::vector<PeerId> choked;
    std::vector<PeerId> unchoked;
    bool empty() const noexcept { return choked.empty() && unchoked.empty(); }
};

/// Replaces the slots of `local` within `scope` by `new_slots`, each
/// granted `slot_rate`. Peers losing their slot are choked; peers gaining
/// one get last_unchoked_at = t. Exceeding `max_slots` faults unless
/// `allow_overflow` (the all-snubbed exception) is set, in which case the
/// bound is 2 * max_slots.
AssignmentDelta apply_assignments(PeerRecord& local, std::vector<SlotAssignment> new_slots, AssignmentScope scope,
                                  SimTime t, double slot_rate, int max_slots, bool allow_overflow = false);

} // namespace swarmsim
