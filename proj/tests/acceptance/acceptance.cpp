// End-to-end acceptance run. Prints one PASS/FAIL line per criterion and
// exits non-zero if any criterion fails. Every simulation here runs with the
// invariant checker on; criterion 9 totals the violations.
//
// usage: swarmsim_acceptance <config-dir> <output-dir> <python3> <recompute_erc.py>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <map>
#include <numeric>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "selection_oracle.hpp"
#include "swarmsim/config.hpp"
#include "swarmsim/experiment.hpp"
#include "swarmsim/policy.hpp"
#include "swarmsim/report.hpp"
#include "swarmsim/simulation.hpp"

using namespace swarmsim;
namespace fs = std::filesystem;

namespace {

struct Totals {
    std::uint64_t runs = 0;
    std::uint64_t violations = 0;
    std::vector<std::string> samples;

    void add(const RunResult& r) {
        ++runs;
        violations += r.invariant_violations;
        for (const std::string& s : r.violation_samples) {
            if (samples.size() < 5) samples.push_back(s);
        }
    }
    void add(const std::vector<CellResult>& cells) {
        for (const CellResult& c : cells) {
            for (const RunResult& r : c.runs) add(r);
        }
    }
};

Totals g_totals;
std::map<int, std::string> g_verdicts;
int g_failed = 0;

// Criteria run in whatever order shares work best; lines print in number order at the end.
void verdict(int number, bool pass, const std::string& detail) {
    g_verdicts[number] = std::string(pass ? "PASS" : "FAIL") + "  " + detail;
    if (!pass) ++g_failed;
}

std::string fmt(double v, int precision = 4) {
    std::ostringstream o;
    o.precision(precision);
    o << v;
    return o.str();
}

void progress(const std::string& what) { std::cout << "... " << what << std::endl; }

double seconds_since(std::chrono::steady_clock::time_point start) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

ExperimentOptions checked_options() {
    ExperimentOptions o;
    o.check_invariants = true;
    o.jobs = std::max(1u, std::thread::hardware_concurrency());
    o.resume = false;
    return o;
}

bool all_ok(const std::vector<CellResult>& cells, std::string& why) {
    for (const CellResult& c : cells) {
        if (!c.ok()) {
            why = c.key + ": " + c.error;
            return false;
        }
    }
    return true;
}

// Two-sided 95% t quantiles, kept apart from the library's own table.
std::optional<double> t975(std::size_t df) {
    switch (df) {
    case 1: return std::tan(M_PI * 0.475);
    case 2: return 1.95 / std::sqrt(2 * 0.975 * 0.025);
    case 9: return 2.262157162798205508644962330;
    default: return std::nullopt;
    }
}

// Criteria 1 and 3: the full preset grid.
void preset_grid(const fs::path& config_dir, const fs::path& out, const std::string& python,
                 const std::string& script, std::vector<CellResult>& grid_cells) {
    progress("preset grid (16 cells x 10 replications)");
    const ExperimentGrid grid = load_grid(config_dir / "preset_grid.conf");
    ExperimentOptions opts = checked_options();
    opts.cell_dir = out / "preset_grid" / "cells";
    fs::remove_all(*opts.cell_dir);
    const auto start = std::chrono::steady_clock::now();
    grid_cells = run_experiment(grid, opts);
    progress("preset grid took " + fmt(seconds_since(start), 3) + " s");
    g_totals.add(grid_cells);
    for (ReportFormat f : {ReportFormat::Csv, ReportFormat::Json, ReportFormat::Svg}) {
        emit_report(grid_cells, f, out / "preset_grid");
    }

    std::string why;
    bool ok = grid_cells.size() == 16 && all_ok(grid_cells, why);
    std::size_t runs = 0, out_of_range = 0;
    for (const CellResult& c : grid_cells) {
        for (const RunResult& r : c.runs) {
            ++runs;
            if (!(r.erc >= 0 && r.erc <= 1)) ++out_of_range;
        }
    }
    const std::string cmd = python + " " + script + " " + (out / "preset_grid" / "cells").string() + " --tolerance 1e-9";
    const int status = std::system(cmd.c_str());
    ok = ok && runs == 160 && out_of_range == 0 && status == 0;
    verdict(1, ok,
            "runs=" + std::to_string(runs) + " erc_outside_[0,1]=" + std::to_string(out_of_range) +
                " independent_recompute=" + (status == 0 ? "match" : "MISMATCH") + (why.empty() ? "" : " " + why));

    // Criterion 3: per preset, every policy within 10% of the cross-policy
    // mean and every pair of 95% intervals overlapping.
    std::map<std::string, std::vector<const CellResult*>> by_preset;
    for (const CellResult& c : grid_cells) {
        if (c.ok()) by_preset[c.config.scenario].push_back(&c);
    }
    bool pass = by_preset.size() == 4;
    std::string detail;
    for (const auto& [preset, cells] : by_preset) {
        double mean = 0;
        for (const CellResult* c : cells) mean += c->summary->erc.mean;
        mean /= double(cells.size());
        double worst_band = 0;
        std::vector<std::string> disjoint;
        for (std::size_t i = 0; i < cells.size(); ++i) {
            const MetricSummary& a = cells[i]->summary->erc;
            worst_band = std::max(worst_band, std::abs(a.mean - mean) / mean);
            for (std::size_t j = i + 1; j < cells.size(); ++j) {
                const MetricSummary& b = cells[j]->summary->erc;
                const bool overlap = a.mean - a.half_width <= b.mean + b.half_width &&
                                     b.mean - b.half_width <= a.mean + a.half_width;
                if (!overlap) {
                    disjoint.push_back(std::string(to_string(cells[i]->config.policy)) + "/" +
                                       std::string(to_string(cells[j]->config.policy)));
                }
            }
        }
        const bool preset_ok = cells.size() == 4 && worst_band < 0.10 && disjoint.empty();
        pass = pass && preset_ok;
        detail += preset + "{mean=" + fmt(mean) + " max_dev=" + fmt(100 * worst_band, 3) + "%";
        if (!disjoint.empty()) {
            detail += " disjoint_ci=";
            for (std::size_t i = 0; i < disjoint.size(); ++i) detail += (i ? "," : "") + disjoint[i];
        }
        detail += "} ";
    }
    verdict(3, pass, detail);
}

// Criterion 2: one seed feeding one leecher through one slot.
void analytic_baseline() {
    progress("analytic baseline");
    bool pass = true;
    double worst_t = 0, worst_erc = 0;
    std::size_t entries = 0;
    for (PolicyName policy : all_policies()) {
        ScenarioConfig cfg = parse_scenario("m = 1\nn = 1\nO_s = 20000000\nb_s = 16\nR_down = 10000\nR_up = 10000\n"
                                            "occupancy = 1.0\nreplications = 2\n");
        cfg.policy = policy;
        CellResult cell = run_cell(cfg, checked_options());
        g_totals.add(std::vector<CellResult>{cell});
        if (!cell.ok()) {
            pass = false;
            continue;
        }
        const double t_expected = 20e6 / 2500;
        const double erc_expected = (20e6 / 1e4) / t_expected;
        for (const RunResult& r : cell.runs) {
            for (const ServiceEntry& e : r.ledger.entries()) {
                worst_t = std::max(worst_t, std::abs(e.service_time - t_expected));
                ++entries;
            }
            worst_erc = std::max(worst_erc, std::abs(r.erc - erc_expected));
        }
    }
    pass = pass && entries > 0 && worst_t <= 10 && worst_erc <= 0.005;
    verdict(2, pass,
            "downloads=" + std::to_string(entries) + " max|T-8000|=" + fmt(worst_t) + "s max|ERC-0.25|=" +
                fmt(worst_erc));
}

// Criterion 4: content size sweep.
void size_sweep(const fs::path& config_dir, const fs::path& out) {
    progress("size sweep");
    const ExperimentGrid grid = load_grid(config_dir / "size_sweep.conf");
    std::vector<CellResult> cells;
    double largest_wall = 0;
    for (const ScenarioConfig& cfg : grid.cells()) {
        const auto start = std::chrono::steady_clock::now();
        cells.push_back(run_cell(cfg, checked_options()));
        const double wall = seconds_since(start);
        progress(std::to_string(cfg.content_bytes / kMegabyte) + " MB cell took " + fmt(wall, 3) + " s");
        if (cfg.content_bytes == 20'000 * kMegabyte) largest_wall = wall;
    }
    g_totals.add(cells);
    emit_report(cells, ReportFormat::Csv, out / "size_sweep");
    emit_report(cells, ReportFormat::Svg, out / "size_sweep");

    std::string why;
    bool pass = cells.size() == 4 && all_ok(cells, why);
    std::string detail;
    if (pass) {
        double lo = 1e300, hi = 0, sum = 0;
        for (const CellResult& c : cells) {
            lo = std::min(lo, c.summary->erc.mean);
            hi = std::max(hi, c.summary->erc.mean);
            sum += c.summary->erc.mean;
        }
        const double spread = (hi - lo) / (sum / double(cells.size()));
        detail = "erc_spread=" + fmt(100 * spread, 3) + "% decade_ratios=";
        bool ratios_ok = true;
        for (std::size_t i = 1; i < cells.size(); ++i) {
            const double ratio = cells[i].summary->service_time.mean / cells[i - 1].summary->service_time.mean;
            ratios_ok = ratios_ok && ratio >= 8 && ratio <= 12;
            detail += (i > 1 ? "," : "") + fmt(ratio);
        }
        constexpr double kWallLimit = 300;
        pass = spread < 0.10 && ratios_ok && largest_wall > 0 && largest_wall < kWallLimit;
        detail += " wall_20GB=" + fmt(largest_wall, 3) + "s (limit " + fmt(kWallLimit) + "s)";
    }
    verdict(4, pass, detail + why);
}

// Criterion 5: interactivity.
void occupancy_sweep(const fs::path& config_dir, const fs::path& out, std::vector<CellResult>& cells) {
    progress("occupancy sweep");
    const ExperimentGrid grid = load_grid(config_dir / "occupancy_sweep.conf");
    cells = run_experiment(grid, checked_options());
    g_totals.add(cells);
    emit_report(cells, ReportFormat::Csv, out / "occupancy_sweep");
    emit_report(cells, ReportFormat::Svg, out / "occupancy_sweep");

    std::string why;
    bool pass = cells.size() == 4 && all_ok(cells, why);
    std::string detail;
    if (pass) {
        std::vector<const CellResult*> sorted;
        for (const CellResult& c : cells) sorted.push_back(&c);
        std::sort(sorted.begin(), sorted.end(),
                  [](auto* a, auto* b) { return a->config.occupancy.occupancy < b->config.occupancy.occupancy; });
        const double full = sorted.back()->summary->erc.mean;
        for (std::size_t i = 0; i < sorted.size(); ++i) {
            const double o = sorted[i]->config.occupancy.occupancy;
            const double ratio = sorted[i]->summary->erc.mean / full;
            if (o < 1) pass = pass && std::abs(ratio - o) <= 0.15;
            if (i > 0) {
                pass = pass && sorted[i]->summary->service_time.mean < sorted[i - 1]->summary->service_time.mean;
            }
            detail += "o=" + fmt(o) + ":ratio=" + fmt(ratio) + ",T=" + fmt(sorted[i]->summary->service_time.mean, 6) +
                      " ";
        }
    }
    verdict(5, pass, detail + why);
}

// Criterion 6: order-of-magnitude checks.
void sanity(const std::vector<CellResult>& grid_cells, const std::vector<CellResult>& occupancy_cells) {
    progress("horizon regression");
    double best_am = 0;
    for (const auto* set : {&grid_cells, &occupancy_cells}) {
        for (const CellResult& c : *set) {
            if (c.ok() && c.config.scenario == "am") best_am = std::max(best_am, c.summary->erc.mean);
        }
    }
    const bool erc_ok = best_am >= 0.3 && best_am <= 0.8;

    RunOptions run_options;
    run_options.check_invariants = true;
    std::vector<double> xs, ys;
    for (int k = 1; k <= 8; ++k) {
        ScenarioConfig cfg = preset_config("am");
        cfg.warmup = 10'000;
        cfg.horizon = 50'000.0 * k;
        double served = 0;
        for (std::uint64_t seed = 1; seed <= 3; ++seed) {
            RunResult r = run_replication(cfg, seed, run_options);
            g_totals.add(r);
            served += double(r.clients_served);
        }
        xs.push_back(*cfg.horizon);
        ys.push_back(served / 3);
    }
    const double n = double(xs.size());
    const double mx = std::accumulate(xs.begin(), xs.end(), 0.0) / n;
    const double my = std::accumulate(ys.begin(), ys.end(), 0.0) / n;
    double sxy = 0, sxx = 0, syy = 0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        sxy += (xs[i] - mx) * (ys[i] - my);
        sxx += (xs[i] - mx) * (xs[i] - mx);
        syy += (ys[i] - my) * (ys[i] - my);
    }
    const double r2 = syy > 0 ? sxy * sxy / (sxx * syy) : 0;
    verdict(6, erc_ok && r2 > 0.99,
            "best_am_erc=" + fmt(best_am) + " (want [0.3,0.8]) served_vs_horizon_r2=" + fmt(r2, 6) + " (want >0.99)");
}

// Criterion 7: selection against the exhaustive oracle, optimistic uniformity.
void selection() {
    progress("selection oracle");
    const auto outcome = testing::check_random_snapshots(1000, 20240601);
    bool pass = outcome.checked == 1000 && outcome.mismatches == 0;
    std::string detail = "oracle_mismatches=" + std::to_string(outcome.mismatches) + "/" +
                         std::to_string(outcome.checked) + " " + outcome.first_mismatch;

    for (PolicyName name : all_policies()) {
        const PolicySpec spec = builtin_policy(name);
        if (spec.optimistic_slots == 0) continue;
        testing::Snapshot snap(6);
        std::map<PeerId, int> hits;
        constexpr int kTrials = 10'000;
        for (int i = 0; i < kTrials; ++i) {
            RngStream rng(std::uint64_t(i) + 1);
            for (const SlotAssignment& s : optimistic_unchoke(snap.me(), snap.swarm, spec, 0, rng)) ++hits[s.target];
        }
        const double expected = double(spec.optimistic_slots) / 6.0;
        double worst = hits.size() == 6 ? 0 : 1;
        for (const auto& [id, count] : hits) worst = std::max(worst, std::abs(double(count) / kTrials - expected));
        pass = pass && worst <= 0.02;
        detail += std::string(to_string(name)) + "_optimistic_max_dev=" + fmt(worst, 3) + " ";
    }
    verdict(7, pass, detail);
}

// Criterion 8: determinism and interval arithmetic.
void statistics(const std::vector<CellResult>& grid_cells) {
    progress("determinism");
    ScenarioConfig cfg = preset_config("am");
    cfg.replications = 3;
    cfg.seed = 11;
    std::vector<CellResult> a{run_cell(cfg, checked_options())};
    std::vector<CellResult> b{run_cell(cfg, checked_options())};
    g_totals.add(a);
    g_totals.add(b);
    const bool identical = a[0].ok() && to_csv(a) == to_csv(b);

    std::size_t checked = 0, interval_bad = 0, flag_bad = 0;
    double worst = 0;
    for (const CellResult& c : grid_cells) {
        if (!c.ok()) continue;
        const ReplicationSummary& s = *c.summary;
        for (const MetricSummary* m : {&s.erc, &s.service_time, &s.clients_served}) {
            const double n = double(m->values.size());
            const double mean = std::accumulate(m->values.begin(), m->values.end(), 0.0) / n;
            double ss = 0;
            for (double v : m->values) ss += (v - mean) * (v - mean);
            const auto t = t975(m->values.size() - 1);
            if (!t) {
                ++interval_bad;
                continue;
            }
            const double expected = *t * std::sqrt(ss / (n - 1)) / std::sqrt(n);
            worst = std::max(worst, std::abs(expected - m->half_width));
            if (std::abs(expected - m->half_width) > 1e-9) ++interval_bad;
            ++checked;
        }
        const auto tight = [](const MetricSummary& m) { return m.half_width <= 0.05 * std::abs(m.mean); };
        if (s.converged != (tight(s.erc) && tight(s.service_time) && tight(s.clients_served))) ++flag_bad;
    }
    verdict(8, identical && checked > 0 && interval_bad == 0 && flag_bad == 0,
            std::string("csv_identical=") + (identical ? "yes" : "no") + " intervals_checked=" + std::to_string(checked) +
                " max_half_width_diff=" + fmt(worst, 3) + " converged_flag_mismatches=" + std::to_string(flag_bad));
}

} // namespace

int main(int argc, char** argv) {
    if (argc != 5) {
        std::cerr << "usage: swarmsim_acceptance <config-dir> <output-dir> <python3> <recompute_erc.py>\n";
        return 2;
    }
    const fs::path config_dir = argv[1];
    const fs::path out = argv[2];
    fs::create_directories(out);
    const auto start = std::chrono::steady_clock::now();

    std::vector<CellResult> grid_cells, occupancy_cells;
    try {
        analytic_baseline();
        selection();
        preset_grid(config_dir, out, argv[3], argv[4], grid_cells);
        statistics(grid_cells);
        occupancy_sweep(config_dir, out, occupancy_cells);
        sanity(grid_cells, occupancy_cells);
        size_sweep(config_dir, out);
    } catch (const std::exception& e) {
        std::cout << "acceptance aborted: " << e.what() << std::endl;
        return 1;
    }

    std::string detail = "runs=" + std::to_string(g_totals.runs) + " violations=" + std::to_string(g_totals.violations);
    for (const std::string& s : g_totals.samples) detail += " | " + s;
    verdict(9, g_totals.runs > 0 && g_totals.violations == 0, detail);

    for (const auto& [number, line] : g_verdicts) std::cout << "criterion " << number << ": " << line << '\n';
    std::cout << "total " << fmt(seconds_since(start), 4) << " s, " << (9 - g_failed) << "/9 criteria passed"
              << std::endl;
    return g_failed == 0 ? 0 : 1;
}
