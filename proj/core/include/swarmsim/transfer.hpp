#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "swarmsim/types.hpp"

namespace swarmsim {

/// Fraction of unchoked slot time actually spent moving data.
struct OccupancyProfile {
    double occupancy = 1.0;

    static constexpr double kHigh = 0.40;
    static constexpr double kMedium = 0.60;
    static constexpr double kLow = 0.90;
    static constexpr double kNone = 1.00;

    /// "HI", "MI", "LI", "NI" (case-insensitive); nullopt otherwise.
    static std::optional<OccupancyProfile> from_label(std::string_view label);
    /// The interactivity label when the value is one of the four presets.
    std::optional<std::string_view> label() const;
    bool valid() const noexcept { return occupancy > 0.0 && occupancy <= 1.0; }
    friend bool operator==(const OccupancyProfile&, const OccupancyProfile&) = default;
};

struct FlowRequest {
    PeerId from{};
    PeerId to{};
    double granted_rate = 0; ///< bytes/s
};

struct Flow {
    PeerId from{};
    PeerId to{};
    double granted_rate = 0;
    double sender_rate = 0;    ///< granted rate after the sender's R_up cap
    double effective_rate = 0; ///< after both caps
    /// Sub-block bytes owed to the receiver, carried between intervals.
    double residue_bytes = 0;
};

struct FlowSet {
    /// Sorted by (from, to).
    std::vector<Flow> flows;

    double inbound(PeerId to) const;
    double outbound(PeerId from) const;
    const Flow* find(PeerId from, PeerId to) const;
    /// Copies residues of flows that persist from `previous`.
    void inherit_residues(const FlowSet& previous);
};

/// Turns granted slot rates into effective rates: a sender above r_up,
/// then a receiver above r_down, is scaled down proportionally.
FlowSet resolve_rates(std::span<const FlowRequest> requests, double r_down, double r_up);

/// Position of one sender's flows inside a FlowSet after an update.
struct SenderUpdate {
    std::size_t begin = 0;    ///< index of the sender's first flow
    std::size_t removed = 0;  ///< flows the sender had before
    std::size_t inserted = 0; ///< flows the sender has now
};

/// Replaces every flow of `from` with `requests` (all must originate at
/// `from`) and re-resolves the rates the change can affect. The result is
/// identical to calling resolve_rates on the full request list and then
/// inherit_residues from the previous set.
SenderUpdate replace_sender_flows(FlowSet& set, PeerId from, std::span<const FlowRequest> requests, double r_down,
                                  double r_up);

struct Delivery {
    PeerId from{};
    PeerId to{};
    std::int64_t bytes = 0;
};

/// Moves each flow forward by `dt` seconds: delivers
/// floor_to_block(residue + effective_rate * occupancy * dt) and keeps the
/// remainder as the new residue. Appends one Delivery per flow to `out`.
void advance_flows(FlowSet& flows, SimTime dt, OccupancyProfile occupancy, std::int64_t block_bytes,
                   std::vector<Delivery>& out);

inline std::vector<Delivery> advance_flows(FlowSet& flows, SimTime dt, OccupancyProfile occupancy,
                                           std::int64_t block_bytes) {
    std::vector<Delivery> out;
    advance_flows(flows, dt, occupancy, block_bytes, out);
    return out;
}

/// Seconds until `remaining_bytes` arrive at the summed inbound rate
/// (thinned by occupancy). nullopt when nothing flows or when the
/// instant falls beyond `within`.
std::optional<SimTime> completion_time(std::int64_t remaining_bytes, std::span<const double> inbound_rates,
                                       OccupancyProfile occupancy, std::optional<SimTime> within = std::nullopt);

} // namespace swarmsim
