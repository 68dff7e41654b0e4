// Command-line front end: run one scenario, sweep a grid, re-emit reports.
//
// Exit codes: 0 success, 1 invalid configuration or arguments, 2 runtime
// failure, 3 grid finished with at least one failed cell.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "swarmsim/config.hpp"
#include "swarmsim/experiment.hpp"
#include "swarmsim/report.hpp"

namespace fs = std::filesystem;
using namespace swarmsim;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitValidation = 1;
constexpr int kExitRuntime = 2;
constexpr int kExitPartial = 3;

struct CommonFlags {
    std::optional<std::uint64_t> seed;
    std::optional<int> replications;
    std::optional<std::string> out;
    unsigned jobs = std::max(1u, std::thread::hardware_concurrency());
    bool check_invariants = false;
    bool quiet = false;
};

void apply_flags(ScenarioConfig& cfg, const CommonFlags& flags) {
    if (flags.seed) cfg.seed = *flags.seed;
    if (flags.replications) cfg.replications = *flags.replications;
    cfg.validate();
}

void print_cell(const CellResult& cell) {
    if (!cell.ok()) {
        std::fprintf(stderr, "FAILED %s: %s\n", cell.key.c_str(), cell.error.c_str());
        return;
    }
    const ReplicationSummary& s = *cell.summary;
    std::fprintf(stderr, "%-40s ERC %.4f ±%.4f  T %.1f s ±%.1f  served %.1f%s%s\n", cell.key.c_str(), s.erc.mean,
                 s.erc.half_width, s.service_time.mean, s.service_time.half_width, s.clients_served.mean,
                 s.converged ? "" : "  (not converged)", cell.resumed ? "  [resumed]" : "");
}

std::uint64_t violation_total(const std::vector<CellResult>& cells) {
    std::uint64_t total = 0;
    for (const CellResult& c : cells) {
        for (const RunResult& r : c.runs) total += r.invariant_violations;
    }
    return total;
}

int execute(const std::vector<ScenarioConfig>& cells, const std::vector<ReportFormat>& formats, const fs::path& out,
            const CommonFlags& flags, bool resume) {
    ExperimentOptions options;
    options.jobs = flags.jobs;
    options.check_invariants = flags.check_invariants;
    options.cell_dir = out / "cells";
    options.resume = resume;
    if (!flags.quiet) options.on_cell_done = print_cell;

    std::vector<CellResult> results = run_experiment(cells, options);
    for (ReportFormat f : formats) {
        const fs::path written = emit_report(results, f, out);
        if (!flags.quiet) std::fprintf(stderr, "wrote %s\n", written.string().c_str());
    }

    std::size_t failed = 0;
    for (const CellResult& c : results) failed += c.ok() ? 0 : 1;
    if (const std::uint64_t v = violation_total(results); v > 0) {
        std::fprintf(stderr, "%llu invariant violations recorded; see the JSON report\n",
                     static_cast<unsigned long long>(v));
    }
    if (failed == 0) return kExitOk;
    std::fprintf(stderr, "%zu of %zu cells failed\n", failed, results.size());
    return failed == results.size() && results.size() == 1 ? kExitRuntime : kExitPartial;
}

void add_common(CLI::App& cmd, CommonFlags& flags) {
    cmd.add_option("--seed", flags.seed, "Master seed; replication i uses seed + i");
    cmd.add_option("--replications", flags.replications, "Replications per cell")->check(CLI::Range(2, 1000000));
    cmd.add_option("--out", flags.out, "Output directory");
    cmd.add_option("--jobs,-j", flags.jobs, "Worker threads")->check(CLI::PositiveNumber);
    cmd.add_flag("--check-invariants", flags.check_invariants, "Verify simulation invariants after every event");
    cmd.add_flag("--quiet,-q", flags.quiet, "Suppress progress output");
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"swarmsim: discrete-event simulator of BitTorrent-like swarms under alternative choke policies"};
    app.require_subcommand(1);

    CommonFlags flags;
    std::string config_path;
    std::vector<std::string> formats_text;
    bool no_resume = false;

    CLI::App* run = app.add_subcommand("run", "Run every replication of one scenario");
    run->add_option("config", config_path, "Scenario config file")->required();
    run->add_option("--format", formats_text, "Report formats (csv, json, svg)")->delimiter(',');
    add_common(*run, flags);

    CLI::App* grid = app.add_subcommand("grid", "Run a grid of scenarios");
    grid->add_option("config", config_path, "Grid config file")->required();
    grid->add_flag("--no-resume", no_resume, "Re-run cells even when results already exist");
    add_common(*grid, flags);

    std::string results_dir;
    std::string report_format;
    std::optional<std::string> report_out;
    CLI::App* report = app.add_subcommand("report", "Re-emit a report from a results directory");
    report->add_option("dir", results_dir, "Results directory written by run or grid")->required();
    report->add_option("--format", report_format, "csv, json or svg")->required();
    report->add_option("--out", report_out, "Output directory (defaults to the results directory)");

    CLI::App* presets_cmd = app.add_subcommand("presets", "List the built-in scenario presets");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitValidation;
    }

    try {
        if (*presets_cmd) {
            std::printf("%-5s %4s %3s %12s %6s %6s %10s  %s\n", "name", "m", "n", "O_s", "p_s", "b_s", "R_down",
                        "description");
            for (const Preset& p : presets()) {
                std::printf("%-5s %4d %3d %12lld %6lld %6lld %10g  %.*s\n", std::string(p.name).c_str(), p.m, p.n,
                            static_cast<long long>(p.content_bytes), static_cast<long long>(p.piece_bytes),
                            static_cast<long long>(p.block_bytes), p.r_down, static_cast<int>(p.description.size()),
                            p.description.data());
            }
            std::printf("R_up defaults to R_down for every preset (symmetric access links).\n");
            return kExitOk;
        }

        if (*report) {
            const std::optional<ReportFormat> format = parse_format(report_format);
            if (!format) {
                std::fprintf(stderr, "error: unknown format '%s' (expected csv, json or svg)\n", report_format.c_str());
                return kExitValidation;
            }
            const std::vector<CellResult> cells = load_results_dir(results_dir);
            const fs::path written = emit_report(cells, *format, report_out ? fs::path(*report_out) : fs::path(results_dir));
            std::printf("%s\n", written.string().c_str());
            return kExitOk;
        }

        if (*run) {
            ScenarioConfig cfg = load_scenario(config_path);
            apply_flags(cfg, flags);
            std::vector<ReportFormat> formats{ReportFormat::Csv, ReportFormat::Json};
            if (!formats_text.empty()) {
                formats.clear();
                for (const std::string& f : formats_text) {
                    auto parsed = parse_format(f);
                    if (!parsed) throw ConfigError("format", "unknown format '" + f + "'");
                    formats.push_back(*parsed);
                }
            }
            return execute({cfg}, formats, flags.out ? fs::path(*flags.out) : fs::path("results"), flags, false);
        }

        ExperimentGrid g = load_grid(config_path);
        std::vector<ScenarioConfig> cells = g.cells();
        for (ScenarioConfig& cfg : cells) apply_flags(cfg, flags);
        return execute(cells, g.formats, flags.out ? fs::path(*flags.out) : g.output_dir, flags, !no_resume);
    } catch (const ConfigError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitValidation;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitRuntime;
    }
}
