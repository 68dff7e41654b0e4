#include <gtest/gtest.h>

#include <filesystem>
#include <regex>

#include <nlohmann/json.hpp>

#include "swarmsim/experiment.hpp"
#include "swarmsim/report.hpp"

using namespace swarmsim;
namespace fs = std::filesystem;

namespace {

ScenarioConfig tiny_cell(PolicyName policy = PolicyName::SBNP) {
    ScenarioConfig cfg = parse_scenario("m = 3\nn = 1\nO_s = 80000\nR_down = 10000\nR_up = 10000\nreplications = 3\n");
    cfg.policy = policy;
    return cfg;
}

// A finished cell with made-up replication values; no simulation needed.
CellResult synthetic_cell(const std::string& preset, PolicyName policy, double erc_mean) {
    CellResult cell;
    cell.config = preset_config(preset);
    cell.config.policy = policy;
    cell.key = cell_key(cell.config);
    for (std::uint64_t i = 0; i < 3; ++i) {
        RunResult r;
        r.seed = cell.config.seed + i;
        r.erc = erc_mean + 0.01 * double(i);
        r.service_time = {1000.0 + double(i), 1000, 1002};
        r.clients_served = 200 + i;
        cell.runs.push_back(r);
    }
    cell.summary = summarize(cell.runs);
    return cell;
}

struct TempDir {
    fs::path path;
    explicit TempDir(const std::string& name) : path(fs::temp_directory_path() / name) {
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

std::size_t count(const std::string& haystack, const std::string& needle) {
    std::size_t n = 0;
    for (std::size_t pos = haystack.find(needle); pos != std::string::npos; pos = haystack.find(needle, pos + 1)) ++n;
    return n;
}

} // namespace

TEST(Experiment, SeedsAreConsecutive) {
    ScenarioConfig cfg = tiny_cell();
    cfg.seed = 40;
    cfg.replications = 4;
    EXPECT_EQ(replication_seeds(cfg), (std::vector<std::uint64_t>{40, 41, 42, 43}));
}

TEST(Experiment, KeysAreFileSafe) {
    ScenarioConfig cfg = preset_config("am");
    cfg.occupancy = OccupancyProfile{0.4};
    EXPECT_EQ(cell_key(cfg), "am_sbnp_occ0.4_os20000000");
    EXPECT_EQ(cell_key(tiny_cell(PolicyName::BT)), "custom_bt_occ1_os80000");
}

TEST(Experiment, EmptyGridGivesEmptyResult) {
    EXPECT_TRUE(run_experiment(parse_grid("scenarios =\n")).empty());
}

TEST(Experiment, ParallelMatchesSerial) {
    std::vector<ScenarioConfig> cells{tiny_cell(PolicyName::BT), tiny_cell(PolicyName::SONP)};
    ExperimentOptions serial, parallel;
    parallel.jobs = 4;
    auto a = run_experiment(cells, serial);
    auto b = run_experiment(cells, parallel);
    ASSERT_EQ(a.size(), 2u);
    ASSERT_EQ(b.size(), 2u);
    for (std::size_t i = 0; i < 2; ++i) {
        ASSERT_TRUE(a[i].ok()) << a[i].error;
        EXPECT_EQ(a[i].config.policy, cells[i].policy);
        EXPECT_EQ(to_csv(std::span(&a[i], 1)), to_csv(std::span(&b[i], 1)));
    }
}

TEST(Experiment, FailedCellIsRecordedAndGridContinues) {
    ScenarioConfig doomed = tiny_cell();
    doomed.horizon = 5; // nothing can finish
    auto results = run_experiment({doomed, tiny_cell(PolicyName::SRNP)});
    ASSERT_EQ(results.size(), 2u);
    EXPECT_FALSE(results[0].ok());
    EXPECT_FALSE(results[0].error.empty());
    EXPECT_TRUE(results[1].ok());
    EXPECT_EQ(count(to_csv(results), "\n"), 2u);
}

TEST(Experiment, ResumeReusesMatchingCells) {
    TempDir dir("swarmsim_resume_test");
    ExperimentOptions opts;
    opts.cell_dir = dir.path;
    auto first = run_experiment({tiny_cell()}, opts);
    ASSERT_TRUE(first[0].ok());
    EXPECT_FALSE(first[0].resumed);
    ASSERT_TRUE(fs::exists(dir.path / (first[0].key + ".json")));

    auto second = run_experiment({tiny_cell()}, opts);
    EXPECT_TRUE(second[0].resumed);
    EXPECT_EQ(to_csv(first), to_csv(second));

    ScenarioConfig changed = tiny_cell();
    changed.seed = 2;
    EXPECT_FALSE(run_experiment({changed}, opts)[0].resumed);
    opts.resume = false;
    EXPECT_FALSE(run_experiment({tiny_cell()}, opts)[0].resumed);
}

TEST(Report, CsvHeaderPlusOneRow) {
    std::vector<CellResult> cells{synthetic_cell("am", PolicyName::SBNP, 0.25)};
    const std::string csv = to_csv(cells);
    const std::string header(kCsvHeader);
    ASSERT_EQ(csv.substr(0, header.size() + 1), header + "\n");
    EXPECT_EQ(header,
              "scenario,policy,occupancy,content_bytes,replications,erc_mean,erc_ci95,service_time_mean_s,"
              "service_time_ci95,clients_served_mean,converged");
    EXPECT_EQ(count(csv, "\n"), 2u);
    const std::string row = csv.substr(header.size() + 1);
    EXPECT_EQ(row.rfind("am,sbnp,1,20000000,3,", 0), 0u) << row;
    EXPECT_EQ(count(row, ","), 10u);
}

TEST(Report, JsonRoundTripRecomputesSameSummary) {
    CellResult cell = run_cell(tiny_cell(PolicyName::BT));
    ASSERT_TRUE(cell.ok()) << cell.error;
    CellResult back = cell_from_json(cell_to_json(cell));
    EXPECT_EQ(back.config, cell.config);
    EXPECT_EQ(back.key, cell.key);
    ASSERT_TRUE(back.summary.has_value());
    EXPECT_EQ(back.summary->erc.mean, cell.summary->erc.mean);
    EXPECT_EQ(back.summary->erc.half_width, cell.summary->erc.half_width);
    EXPECT_EQ(back.summary->service_time.mean, cell.summary->service_time.mean);
    EXPECT_EQ(back.summary->clients_served.half_width, cell.summary->clients_served.half_width);
    EXPECT_EQ(back.summary->converged, cell.summary->converged);
    ASSERT_EQ(back.runs.size(), cell.runs.size());
    for (std::size_t i = 0; i < back.runs.size(); ++i) {
        EXPECT_EQ(back.runs[i].ledger.entries().size(), cell.runs[i].ledger.entries().size());
        EXPECT_EQ(back.runs[i].erc, cell.runs[i].erc);
    }
    EXPECT_EQ(cell_to_json(back), cell_to_json(cell));
}

TEST(Report, JsonEchoesConfigAndSeed) {
    std::vector<CellResult> cells{synthetic_cell("ts", PolicyName::SONP, 0.3)};
    const auto doc = nlohmann::json::parse(to_json(cells));
    ASSERT_EQ(doc.at("cells").size(), 1u);
    const auto& c = doc.at("cells")[0];
    EXPECT_EQ(c.at("master_seed"), 1);
    EXPECT_EQ(parse_scenario(c.at("config_text").get<std::string>()), cells[0].config);
    EXPECT_EQ(c.at("summary").at("erc").at("values").size(), 3u);
}

TEST(Report, SvgHasScenarioGroupsTimesPolicies) {
    std::vector<CellResult> cells;
    for (const char* preset : {"mf", "ts", "m", "am"}) {
        for (PolicyName p : all_policies()) cells.push_back(synthetic_cell(preset, p, 0.2));
    }
    const std::string svg = to_svg(cells);
    EXPECT_EQ(svg.rfind("<svg", 0), 0u);
    EXPECT_EQ(count(svg, "class=\"panel\""), 3u);
    EXPECT_EQ(count(svg, "class=\"bar\""), 3u * 4u * 4u);
    for (const char* label : {">mf<", ">ts<", ">m<", ">am<"}) EXPECT_EQ(count(svg, label), 3u) << label;
}

TEST(Report, UnwritableDirectoryIsIoError) {
    std::vector<CellResult> cells{synthetic_cell("am", PolicyName::BT, 0.25)};
    EXPECT_THROW(emit_report(cells, ReportFormat::Csv, "/proc/swarmsim-cannot-write"), IoError);
    EXPECT_THROW(write_text_file("/nonexistent-dir/x.csv", "x"), IoError);
}

TEST(Report, EmitAndLoadDirectory) {
    TempDir dir("swarmsim_emit_test");
    std::vector<CellResult> cells{synthetic_cell("am", PolicyName::BT, 0.25), synthetic_cell("am", PolicyName::SRNP, 0.24)};
    for (ReportFormat f : {ReportFormat::Csv, ReportFormat::Json, ReportFormat::Svg}) {
        EXPECT_TRUE(fs::exists(emit_report(cells, f, dir.path)));
    }
    fs::create_directories(dir.path / "cells");
    for (const CellResult& c : cells) write_text_file(dir.path / "cells" / (c.key + ".json"), cell_to_json(c));
    auto loaded = load_results_dir(dir.path);
    ASSERT_EQ(loaded.size(), 2u);
    EXPECT_EQ(to_csv(report_order(loaded)), to_csv(report_order(cells)));
}

namespace {
struct CommaDecimal : std::numpunct<char> {
    char do_decimal_point() const override { return ','; }
};
} // namespace

TEST(Report, CsvIsLocaleIndependent) {
    const std::locale previous = std::locale::global(std::locale(std::locale::classic(), new CommaDecimal));
    std::vector<CellResult> cells{synthetic_cell("am", PolicyName::BT, 0.25)};
    const std::string csv = to_csv(cells);
    std::locale::global(previous);
    EXPECT_EQ(csv, [&] {
        std::vector<CellResult> again{synthetic_cell("am", PolicyName::BT, 0.25)};
        return to_csv(again);
    }());
    EXPECT_TRUE(std::regex_search(csv, std::regex(",0\\.26,")));
    EXPECT_EQ(count(csv.substr(csv.find('\n') + 1), ","), 10u);
}
