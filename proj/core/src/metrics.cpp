#include "swarmsim/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include <boost/math/distributions/students_t.hpp>

namespace swarmsim {

void ServiceLedger::add(const ServiceEntry& entry) {
    require(entry.exclusive_time > 0, "ServiceLedger: exclusive time must be positive");
    require(entry.departure > entry.arrival, "ServiceLedger: departure must follow arrival");
    require(entry.service_time > 0, "ServiceLedger: service time must be positive");
    entries_.push_back(entry);
}

double erc(const ServiceLedger& ledger) {
    if (ledger.empty()) throw MetricError("erc: no completed downloads in the measurement window");
    double exclusive = 0;
    double in_swarm = 0;
    for (const ServiceEntry& e : ledger.entries()) {
        exclusive += e.exclusive_time;
        in_swarm += e.service_time;
    }
    return exclusive / in_swarm;
}

ServiceTimeStats service_time_stats(const ServiceLedger& ledger) {
    if (ledger.empty()) throw MetricError("service_time_stats: no completed downloads in the measurement window");
    std::vector<double> times;
    times.reserve(ledger.entries().size());
    for (const ServiceEntry& e : ledger.entries()) times.push_back(e.service_time);
    std::sort(times.begin(), times.end());

    ServiceTimeStats stats;
    stats.mean = std::accumulate(times.begin(), times.end(), 0.0) / static_cast<double>(times.size());
    const std::size_t n = times.size();
    stats.median = n % 2 == 1 ? times[n / 2] : 0.5 * (times[n / 2 - 1] + times[n / 2]);
    stats.max = times.back();
    return stats;
}

void finalize_metrics(RunResult& result) {
    result.erc = erc(result.ledger);
    result.service_time = service_time_stats(result.ledger);
    result.clients_served = result.ledger.clients_served();
}

bool MetricSummary::within(double fraction) const { return half_width <= fraction * std::abs(mean); }

double t_critical_95(std::size_t degrees_of_freedom) {
    require(degrees_of_freedom >= 1, "t_critical_95: need at least one degree of freedom");
    boost::math::students_t dist(static_cast<double>(degrees_of_freedom));
    return boost::math::quantile(dist, 0.975);
}

MetricSummary summarize_values(std::vector<double> values) {
    require(values.size() >= 2, "summarize: need at least two values");
    MetricSummary s;
    const double n = static_cast<double>(values.size());
    s.mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
    double ss = 0;
    for (double v : values) ss += (v - s.mean) * (v - s.mean);
    const double sd = std::sqrt(ss / (n - 1));
    s.half_width = t_critical_95(values.size() - 1) * sd / std::sqrt(n);
    s.values = std::move(values);
    return s;
}

namespace {

// Replications needed for half_width <= 5% of the mean, assuming the
// sample deviation holds and using the current t value.
std::size_t replications_needed(const MetricSummary& s) {
    const double target = kConvergenceFraction * std::abs(s.mean);
    if (s.half_width <= target) return s.values.size();
    if (target <= 0) return s.values.size() * 4;
    const double ratio = s.half_width / target;
    return static_cast<std::size_t>(std::ceil(static_cast<double>(s.values.size()) * ratio * ratio));
}

} // namespace

ReplicationSummary summarize(std::span<const RunResult> replications) {
    require(replications.size() >= 2, "summarize: need at least two replications");
    std::set<std::uint64_t> seen;
    ReplicationSummary out;
    std::vector<double> ercs, times, served;
    for (const RunResult& r : replications) {
        if (!seen.insert(r.seed).second) fault("summarize: replications share seed " + std::to_string(r.seed));
        out.seeds.push_back(r.seed);
        ercs.push_back(r.erc);
        times.push_back(r.service_time.mean);
        served.push_back(static_cast<double>(r.clients_served));
    }
    out.replications = replications.size();
    out.erc = summarize_values(std::move(ercs));
    out.service_time = summarize_values(std::move(times));
    out.clients_served = summarize_values(std::move(served));
    out.converged = out.erc.within(kConvergenceFraction) && out.service_time.within(kConvergenceFraction) &&
                    out.clients_served.within(kConvergenceFraction);
    if (!out.converged) {
        const std::size_t needed = std::max({replications_needed(out.erc), replications_needed(out.service_time),
                                             replications_needed(out.clients_served)});
        out.recommended_additional = needed > out.replications ? needed - out.replications : 1;
    }
    return out;
}

} // namespace swarmsim
