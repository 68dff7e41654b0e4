#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "swarmsim/types.hpp"

namespace swarmsim {

/// One completed download.
struct ServiceEntry {
    PeerId peer{};
    SimTime arrival = 0;
    SimTime departure = 0;
    /// Download time over an exclusive channel: content / R_down.
    double exclusive_time = 0;
    /// Time spent in the swarm: departure - arrival.
    double service_time = 0;
};

/// Completed downloads that both arrived and finished inside the
/// measurement window.
class ServiceLedger {
public:
    /// Faults on non-positive or inconsistent times.
    void add(const ServiceEntry& entry);

    const std::vector<ServiceEntry>& entries() const noexcept { return entries_; }
    std::size_t clients_served() const noexcept { return entries_.size(); }
    bool empty() const noexcept { return entries_.empty(); }

private:
    std::vector<ServiceEntry> entries_;
};

/// Efficiency retrieving coefficient: sum of exclusive-channel times over
/// sum of in-swarm times. Throws MetricError on an empty ledger.
double erc(const ServiceLedger& ledger);

struct ServiceTimeStats {
    double mean = 0;
    double median = 0;
    double max = 0;
};

/// Throws MetricError on an empty ledger.
ServiceTimeStats service_time_stats(const ServiceLedger& ledger);

/// Outcome of one replication.
struct RunResult {
    std::uint64_t seed = 0;
    ServiceLedger ledger;
    double erc = 0;
    ServiceTimeStats service_time;
    std::uint64_t clients_served = 0;

    SimTime warmup_end = 0;
    SimTime horizon = 0;
    bool warmup_auto = true;
    /// Every departure during the run, including those outside the window.
    std::uint64_t total_completions = 0;
    /// Departures of leechers that arrived before warm-up ended.
    std::uint64_t excluded_warmup = 0;
    /// Leechers that arrived after warm-up and were still downloading at the horizon.
    std::uint64_t censored_at_end = 0;

    std::uint64_t dispatched_events = 0;
    std::int64_t bytes_transferred = 0;
    std::uint64_t invariant_violations = 0;
    std::vector<std::string> violation_samples;
};

/// Fills erc / service_time / clients_served from the ledger.
void finalize_metrics(RunResult& result);

struct MetricSummary {
    double mean = 0;
    double half_width = 0; ///< 95% Student-t
    std::vector<double> values;

    /// half_width <= fraction * |mean|.
    bool within(double fraction) const;
};

struct ReplicationSummary {
    MetricSummary erc;
    MetricSummary service_time;
    MetricSummary clients_served;
    std::size_t replications = 0;
    std::vector<std::uint64_t> seeds;
    bool converged = false;
    /// Extra replications estimated to bring every half-width under 5%;
    /// zero when converged.
    std::size_t recommended_additional = 0;
};

inline constexpr double kConvergenceFraction = 0.05;

/// Two-sided 95% Student-t critical value, t(0.975, df).
double t_critical_95(std::size_t degrees_of_freedom);

/// Mean and 95% half-width: t(0.975, n-1) * s / sqrt(n).
MetricSummary summarize_values(std::vector<double> values);

/// Needs >= 2 replications with pairwise distinct seeds (faults otherwise).
ReplicationSummary summarize(std::span<const RunResult> replications);

} // namespace swarmsim
