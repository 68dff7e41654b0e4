#include "swarmsim/report.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include <nlohmann/json.hpp>

namespace swarmsim {

using Json = nlohmann::ordered_json;

namespace {

std::string fmt(double v) {
    char buf[64];
    auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, end);
}

std::string fmt_fixed(double v, int precision) {
    char buf[64];
    auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::fixed, precision);
    return std::string(buf, end);
}

Json optional_time(const std::optional<SimTime>& t) { return t ? Json(*t) : Json(nullptr); }

Json config_json(const ScenarioConfig& cfg) {
    Json j;
    j["scenario"] = cfg.scenario;
    j["m"] = cfg.m;
    j["n"] = cfg.n;
    j["O_s"] = cfg.content_bytes;
    j["p_s"] = cfg.piece_bytes;
    j["b_s"] = cfg.block_bytes;
    j["R_down"] = cfg.r_down;
    j["R_up"] = cfg.r_up ? Json(*cfg.r_up) : Json(nullptr);
    j["occupancy"] = cfg.occupancy.occupancy;
    j["policy"] = to_string(cfg.policy);
    j["horizon"] = optional_time(cfg.horizon);
    j["resolved_horizon"] = cfg.resolved_horizon();
    j["warmup"] = optional_time(cfg.warmup);
    j["replications"] = cfg.replications;
    j["seed"] = cfg.seed;
    return j;
}

Json metric_json(const MetricSummary& s) {
    Json j;
    j["mean"] = s.mean;
    j["ci95"] = s.half_width;
    j["values"] = s.values;
    return j;
}

Json run_json(const RunResult& r) {
    Json j;
    j["seed"] = r.seed;
    j["erc"] = r.erc;
    j["service_time"] = {{"mean", r.service_time.mean}, {"median", r.service_time.median}, {"max", r.service_time.max}};
    j["clients_served"] = r.clients_served;
    j["warmup_end"] = r.warmup_end;
    j["warmup_auto"] = r.warmup_auto;
    j["horizon"] = r.horizon;
    j["total_completions"] = r.total_completions;
    j["excluded_warmup"] = r.excluded_warmup;
    j["censored_at_end"] = r.censored_at_end;
    j["dispatched_events"] = r.dispatched_events;
    j["bytes_transferred"] = r.bytes_transferred;
    j["invariant_violations"] = r.invariant_violations;
    j["violation_samples"] = r.violation_samples;
    Json ledger = Json::array();
    for (const ServiceEntry& e : r.ledger.entries()) {
        ledger.push_back(Json::array({to_index(e.peer), e.arrival, e.departure, e.exclusive_time, e.service_time}));
    }
    j["ledger_columns"] = Json::array({"peer", "arrival", "departure", "exclusive_time", "service_time"});
    j["ledger"] = std::move(ledger);
    return j;
}

RunResult run_from_json(const Json& j) {
    RunResult r;
    r.seed = j.at("seed").get<std::uint64_t>();
    r.erc = j.at("erc").get<double>();
    const Json& st = j.at("service_time");
    r.service_time = {st.at("mean").get<double>(), st.at("median").get<double>(), st.at("max").get<double>()};
    r.clients_served = j.at("clients_served").get<std::uint64_t>();
    r.warmup_end = j.at("warmup_end").get<double>();
    r.warmup_auto = j.at("warmup_auto").get<bool>();
    r.horizon = j.at("horizon").get<double>();
    r.total_completions = j.at("total_completions").get<std::uint64_t>();
    r.excluded_warmup = j.at("excluded_warmup").get<std::uint64_t>();
    r.censored_at_end = j.at("censored_at_end").get<std::uint64_t>();
    r.dispatched_events = j.at("dispatched_events").get<std::uint64_t>();
    r.bytes_transferred = j.at("bytes_transferred").get<std::int64_t>();
    r.invariant_violations = j.at("invariant_violations").get<std::uint64_t>();
    r.violation_samples = j.at("violation_samples").get<std::vector<std::string>>();
    for (const Json& row : j.at("ledger")) {
        r.ledger.add({PeerId{row.at(0).get<std::uint32_t>()}, row.at(1).get<double>(), row.at(2).get<double>(),
                      row.at(3).get<double>(), row.at(4).get<double>()});
    }
    return r;
}

Json cell_object(const CellResult& cell) {
    const ScenarioConfig& cfg = cell.config;
    Json j;
    j["key"] = cell.key;
    j["scenario"] = cfg.scenario;
    j["policy"] = to_string(cfg.policy);
    j["occupancy"] = cfg.occupancy.occupancy;
    j["content_bytes"] = cfg.content_bytes;
    j["replications"] = cfg.replications;
    j["master_seed"] = cfg.seed;
    j["config"] = config_json(cfg);
    j["config_text"] = to_config_text(cfg);
    Json notes = Json::array();
    if (cfg.scenario != "custom" && cfg.r_up && *cfg.r_up == cfg.r_down) {
        notes.push_back("R_up is the preset default R_up = R_down (symmetric access links), not a measured value");
    }
    j["notes"] = std::move(notes);
    j["error"] = cell.error.empty() ? Json(nullptr) : Json(cell.error);
    if (cell.summary) {
        const ReplicationSummary& s = *cell.summary;
        Json sj;
        sj["erc_mean"] = s.erc.mean;
        sj["erc_ci95"] = s.erc.half_width;
        sj["service_time_mean_s"] = s.service_time.mean;
        sj["service_time_ci95"] = s.service_time.half_width;
        sj["clients_served_mean"] = s.clients_served.mean;
        sj["clients_served_ci95"] = s.clients_served.half_width;
        sj["converged"] = s.converged;
        sj["recommended_additional_replications"] = s.recommended_additional;
        sj["seeds"] = s.seeds;
        sj["erc"] = metric_json(s.erc);
        sj["service_time_s"] = metric_json(s.service_time);
        sj["clients_served"] = metric_json(s.clients_served);
        j["summary"] = std::move(sj);
    } else {
        j["summary"] = nullptr;
    }
    Json runs = Json::array();
    for (const RunResult& r : cell.runs) runs.push_back(run_json(r));
    j["runs"] = std::move(runs);
    return j;
}

CellResult cell_from_object(const Json& j) {
    CellResult cell;
    cell.config = parse_scenario(j.at("config_text").get<std::string>());
    cell.key = j.at("key").get<std::string>();
    if (const Json& err = j.at("error"); !err.is_null()) cell.error = err.get<std::string>();
    for (const Json& r : j.at("runs")) cell.runs.push_back(run_from_json(r));
    if (cell.error.empty()) cell.summary = summarize(cell.runs);
    return cell;
}

int scenario_rank(const std::string& name) {
    const auto& all = presets();
    for (std::size_t i = 0; i < all.size(); ++i) {
        if (all[i].name == name) return static_cast<int>(i);
    }
    return static_cast<int>(all.size());
}

} // namespace

std::string cell_to_json(const CellResult& cell) { return cell_object(cell).dump(2) + "\n"; }

CellResult cell_from_json(std::string_view text) {
    try {
        return cell_from_object(Json::parse(text));
    } catch (const Json::exception& e) {
        throw IoError(std::string("malformed cell JSON: ") + e.what());
    }
}

std::vector<CellResult> report_order(std::span<const CellResult> cells) {
    std::vector<CellResult> out(cells.begin(), cells.end());
    std::stable_sort(out.begin(), out.end(), [](const CellResult& a, const CellResult& b) {
        const ScenarioConfig& x = a.config;
        const ScenarioConfig& y = b.config;
        auto key = [](const ScenarioConfig& c) {
            return std::tuple(scenario_rank(c.scenario), c.scenario, c.content_bytes, c.occupancy.occupancy,
                              static_cast<int>(c.policy));
        };
        return key(x) < key(y);
    });
    return out;
}

std::string to_csv(std::span<const CellResult> cells) {
    std::string out(kCsvHeader);
    out += '\n';
    for (const CellResult& cell : report_order(cells)) {
        if (!cell.ok()) continue;
        const ScenarioConfig& c = cell.config;
        const ReplicationSummary& s = *cell.summary;
        out += c.scenario + ',' + to_string(c.policy) + ',' + fmt(c.occupancy.occupancy) + ',' +
               std::to_string(c.content_bytes) + ',' + std::to_string(s.replications) + ',' + fmt(s.erc.mean) + ',' +
               fmt(s.erc.half_width) + ',' + fmt(s.service_time.mean) + ',' + fmt(s.service_time.half_width) + ',' +
               fmt(s.clients_served.mean) + ',' + (s.converged ? "true" : "false") + '\n';
    }
    return out;
}

std::string to_json(std::span<const CellResult> cells) {
    Json doc;
    doc["format"] = "swarmsim-results";
    doc["version"] = 1;
    Json arr = Json::array();
    for (const CellResult& cell : report_order(cells)) arr.push_back(cell_object(cell));
    doc["cells"] = std::move(arr);
    return doc.dump(2) + "\n";
}

namespace {

std::string xml_escape(std::string_view s) {
    std::string out;
    for (char c : s) {
        switch (c) {
        case '&': out += "&amp;"; break;
        case '<': out += "&lt;"; break;
        case '>': out += "&gt;"; break;
        case '"': out += "&quot;"; break;
        default: out += c;
        }
    }
    return out;
}

const char* policy_color(PolicyName p) {
    switch (p) {
    case PolicyName::BT: return "#4e79a7";
    case PolicyName::SBNP: return "#f28e2b";
    case PolicyName::SONP: return "#59a14f";
    case PolicyName::SRNP: return "#e15759";
    }
    return "#999999";
}

std::string group_label(const ScenarioConfig& c, bool show_size, bool show_occupancy) {
    std::string label = c.scenario;
    if (show_size) label += " " + fmt(static_cast<double>(c.content_bytes) / kMegabyte) + "MB";
    if (show_occupancy) label += " occ " + fmt(c.occupancy.occupancy);
    return label;
}

struct Panel {
    std::string title;
    double (*mean)(const ReplicationSummary&);
    double (*ci)(const ReplicationSummary&);
};

} // namespace

std::string to_svg(std::span<const CellResult> cells) {
    std::vector<CellResult> ok;
    for (CellResult& c : report_order(cells)) {
        if (c.ok()) ok.push_back(std::move(c));
    }

    // Sizes only need a label when one scenario appears with several of them.
    bool vary_size = false;
    bool vary_occ = false;
    std::map<std::string, std::int64_t> size_of;
    std::vector<PolicyName> policies;
    for (const CellResult& c : ok) {
        auto [it, fresh] = size_of.emplace(c.config.scenario, c.config.content_bytes);
        vary_size |= !fresh && it->second != c.config.content_bytes;
        vary_occ |= c.config.occupancy.occupancy != ok.front().config.occupancy.occupancy;
        if (std::find(policies.begin(), policies.end(), c.config.policy) == policies.end()) {
            policies.push_back(c.config.policy);
        }
    }
    std::sort(policies.begin(), policies.end());

    // Groups keep first-appearance order; bars inside a group follow policy order.
    std::vector<std::string> groups;
    std::map<std::string, std::map<PolicyName, const CellResult*>> bars;
    for (const CellResult& c : ok) {
        const std::string g = group_label(c.config, vary_size, vary_occ);
        if (!bars.contains(g)) groups.push_back(g);
        bars[g][c.config.policy] = &c;
    }

    const Panel panels[] = {
        {"ERC", [](const ReplicationSummary& s) { return s.erc.mean; },
         [](const ReplicationSummary& s) { return s.erc.half_width; }},
        {"Service time (s)", [](const ReplicationSummary& s) { return s.service_time.mean; },
         [](const ReplicationSummary& s) { return s.service_time.half_width; }},
        {"Clients served", [](const ReplicationSummary& s) { return s.clients_served.mean; },
         [](const ReplicationSummary& s) { return s.clients_served.half_width; }},
    };

    const double bar_w = 18;
    const double group_gap = 24;
    const double left = 70;
    const double panel_h = 220;
    const double plot_h = 150;
    const double top = 40;
    const double group_w = bar_w * static_cast<double>(std::max<std::size_t>(policies.size(), 1)) + group_gap;
    const double width = left + group_w * static_cast<double>(std::max<std::size_t>(groups.size(), 1)) + 140;
    const double height = top + panel_h * 3 + 20;

    std::ostringstream svg;
    svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << fmt_fixed(width, 0) << "\" height=\""
        << fmt_fixed(height, 0) << "\" font-family=\"sans-serif\" font-size=\"11\">\n";
    svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";

    for (std::size_t p = 0; p < policies.size(); ++p) {
        const double y = 12 + 14 * static_cast<double>(p);
        const double x = width - 120;
        svg << "<rect x=\"" << fmt_fixed(x, 1) << "\" y=\"" << fmt_fixed(y, 1) << "\" width=\"10\" height=\"10\" fill=\""
            << policy_color(policies[p]) << "\"/>";
        svg << "<text x=\"" << fmt_fixed(x + 14, 1) << "\" y=\"" << fmt_fixed(y + 9, 1) << "\">"
            << to_string(policies[p]) << "</text>\n";
    }

    for (std::size_t k = 0; k < std::size(panels); ++k) {
        const Panel& panel = panels[k];
        const double base_y = top + panel_h * static_cast<double>(k) + plot_h;
        double max_v = 0;
        for (const CellResult& c : ok) max_v = std::max(max_v, panel.mean(*c.summary) + panel.ci(*c.summary));
        if (!(max_v > 0)) max_v = 1;
        const double scale = plot_h / max_v;

        svg << "<g class=\"panel\">\n";
        svg << "<text x=\"" << fmt_fixed(left, 1) << "\" y=\"" << fmt_fixed(base_y - plot_h - 8, 1)
            << "\" font-weight=\"bold\">" << xml_escape(panel.title) << "</text>\n";
        svg << "<line x1=\"" << fmt_fixed(left - 4, 1) << "\" y1=\"" << fmt_fixed(base_y, 1) << "\" x2=\""
            << fmt_fixed(width - 140, 1) << "\" y2=\"" << fmt_fixed(base_y, 1) << "\" stroke=\"black\"/>\n";
        svg << "<text x=\"" << fmt_fixed(left - 8, 1) << "\" y=\"" << fmt_fixed(base_y - plot_h + 4, 1)
            << "\" text-anchor=\"end\">" << fmt(max_v) << "</text>\n";

        for (std::size_t g = 0; g < groups.size(); ++g) {
            const double gx = left + group_w * static_cast<double>(g);
            for (std::size_t p = 0; p < policies.size(); ++p) {
                auto it = bars[groups[g]].find(policies[p]);
                if (it == bars[groups[g]].end()) continue;
                const ReplicationSummary& s = *it->second->summary;
                const double v = panel.mean(s);
                const double h = v * scale;
                const double x = gx + bar_w * static_cast<double>(p);
                svg << "<rect class=\"bar\" x=\"" << fmt_fixed(x, 1) << "\" y=\"" << fmt_fixed(base_y - h, 1)
                    << "\" width=\"" << fmt_fixed(bar_w - 2, 1) << "\" height=\"" << fmt_fixed(h, 1) << "\" fill=\""
                    << policy_color(policies[p]) << "\"><title>" << xml_escape(groups[g]) << " "
                    << to_string(policies[p]) << ": " << fmt(v) << "</title></rect>\n";
                const double ci = panel.ci(s) * scale;
                const double cx = x + (bar_w - 2) / 2;
                svg << "<line x1=\"" << fmt_fixed(cx, 1) << "\" y1=\"" << fmt_fixed(base_y - h - ci, 1) << "\" x2=\""
                    << fmt_fixed(cx, 1) << "\" y2=\"" << fmt_fixed(base_y - h + ci, 1) << "\" stroke=\"black\"/>\n";
            }
            svg << "<text x=\"" << fmt_fixed(gx + (group_w - group_gap) / 2, 1) << "\" y=\""
                << fmt_fixed(base_y + 14, 1) << "\" text-anchor=\"middle\">" << xml_escape(groups[g]) << "</text>\n";
        }
        svg << "</g>\n";
    }
    svg << "</svg>\n";
    return svg.str();
}

void write_text_file(const std::filesystem::path& path, std::string_view text) {
    // Write-then-rename so an interrupted grid never leaves a truncated file behind.
    std::filesystem::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw IoError("cannot write '" + path.string() + "'");
        out.write(text.data(), static_cast<std::streamsize>(text.size()));
        if (!out) throw IoError("write failed for '" + path.string() + "'");
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) throw IoError("cannot write '" + path.string() + "': " + ec.message());
}

std::string read_text_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot read '" + path.string() + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::filesystem::path emit_report(std::span<const CellResult> cells, ReportFormat format,
                                  const std::filesystem::path& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec || !std::filesystem::is_directory(dir)) throw IoError("cannot create output directory '" + dir.string() + "'");
    std::filesystem::path path = dir / (std::string("results.") + to_string(format));
    switch (format) {
    case ReportFormat::Csv: write_text_file(path, to_csv(cells)); break;
    case ReportFormat::Json: write_text_file(path, to_json(cells)); break;
    case ReportFormat::Svg: write_text_file(path, to_svg(cells)); break;
    }
    return path;
}

std::vector<CellResult> load_results_dir(const std::filesystem::path& dir) {
    std::error_code ec;
    if (!std::filesystem::is_directory(dir, ec)) throw IoError("results directory '" + dir.string() + "' not found");
    std::filesystem::path cells_dir = dir / "cells";
    if (!std::filesystem::is_directory(cells_dir, ec)) cells_dir = dir;

    std::vector<std::filesystem::path> files;
    for (const auto& entry : std::filesystem::directory_iterator(cells_dir)) {
        if (entry.is_regular_file() && entry.path().extension() == ".json" && entry.path().filename() != "results.json") {
            files.push_back(entry.path());
        }
    }
    std::sort(files.begin(), files.end());
    std::vector<CellResult> out;
    out.reserve(files.size());
    for (const auto& f : files) out.push_back(cell_from_json(read_text_file(f)));
    return report_order(out);
}

} // namespace swarmsim
