#include "swarmsim/config.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

namespace swarmsim {

namespace {

std::string_view trim(std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
    return s;
}

std::string lower(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return out;
}

double parse_real(std::string_view key, std::string_view value) {
    value = trim(value);
    double out = 0;
    auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
    if (ec != std::errc{} || ptr != value.data() + value.size() || !std::isfinite(out)) {
        throw ConfigError(std::string(key), "invalid number for '" + std::string(key) + "': '" + std::string(value) + "'");
    }
    return out;
}

std::int64_t parse_integer(std::string_view key, std::string_view value) {
    const double v = parse_real(key, value);
    if (v != std::floor(v) || std::abs(v) > 9.0e18) {
        throw ConfigError(std::string(key), "'" + std::string(key) + "' must be an integer, got '" + std::string(value) + "'");
    }
    return static_cast<std::int64_t>(v);
}

std::optional<SimTime> parse_time_or_auto(std::string_view key, std::string_view value) {
    if (lower(trim(value)) == "auto") return std::nullopt;
    return parse_real(key, value);
}

std::vector<std::string> split_list(std::string_view value) {
    std::vector<std::string> out;
    value = trim(value);
    if (value.empty()) return out;
    std::size_t start = 0;
    while (start <= value.size()) {
        std::size_t comma = value.find(',', start);
        if (comma == std::string_view::npos) comma = value.size();
        std::string_view item = trim(value.substr(start, comma - start));
        if (!item.empty()) out.emplace_back(item);
        start = comma + 1;
    }
    return out;
}

std::string format_real(double v) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, ptr);
}

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("path", "cannot read config file '" + path.string() + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

const std::set<std::string, std::less<>>& scenario_keys() {
    static const std::set<std::string, std::less<>> keys{"preset", "m", "n", "O_s", "p_s", "b_s", "R_down", "R_up",
                                                         "occupancy", "policy", "horizon", "completions", "warmup",
                                                         "replications", "seed"};
    return keys;
}

} // namespace

double ScenarioConfig::upload_rate() const {
    if (!r_up) throw ConfigError("R_up", "R_up is not set");
    return *r_up;
}

SimTime ScenarioConfig::resolved_horizon() const {
    if (horizon) return *horizon;
    // Under prefix interest only seeds can feed the most advanced leecher,
    // one slot each, so that frontier rate paces every download.
    const double slot_rate = upload_rate() / builtin_policy(policy).total_slots();
    const double frontier = std::min(r_down, static_cast<double>(n) * slot_rate) * occupancy.occupancy;
    const double download = static_cast<double>(content_bytes) / frontier;
    // One download for the warm-up, then enough for the target completions, plus 10% slack.
    const double downloads = 1.0 + std::ceil(static_cast<double>(target_completions) / static_cast<double>(m));
    return 1.1 * download * downloads;
}

void ScenarioConfig::validate() const {
    auto fail = [](const char* field, const std::string& why) { throw ConfigError(field, std::string(field) + ": " + why); };
    if (m < 1) fail("m", "need at least one leecher (m >= 1)");
    if (n < 1) fail("n", "need at least one seed (n >= 1)");
    if (block_bytes <= 0) fail("b_s", "block size must be positive");
    if (content_bytes < block_bytes) fail("O_s", "content must be at least one block (O_s >= b_s)");
    if (content_bytes % block_bytes != 0) fail("O_s", "content must be a whole number of blocks");
    if (piece_bytes < block_bytes) fail("p_s", "piece must be at least one block (p_s >= b_s)");
    if (!(r_down > 0)) fail("R_down", "download rate must be positive");
    if (!r_up) {
        fail("R_up", "upload rate is not set; custom scenarios must give R_up explicitly (presets default to R_up = R_down)");
    }
    if (!(*r_up > 0)) fail("R_up", "upload rate must be positive");
    if (!occupancy.valid()) fail("occupancy", "slot occupancy must lie in (0, 1]");
    if (horizon && !(*horizon > 0)) fail("horizon", "horizon must be positive");
    if (target_completions < 1) fail("completions", "need a target of at least one completion");
    if (warmup && !(*warmup >= 0)) fail("warmup", "warm-up must be non-negative");
    if (warmup && !(*warmup <= resolved_horizon())) fail("warmup", "warm-up must not exceed the horizon");
    if (replications < 2) fail("replications", "need at least two replications for confidence intervals");
}

const std::vector<Preset>& presets() {
    static const std::vector<Preset> table{
        {"mf", "Music files", 10, 1, 10 * kMegabyte, 256, 16, 1e4},
        {"ts", "TV series", 15, 1, 100 * kMegabyte, 256, 16, 1e5},
        {"m", "Movies", 25, 1, 200 * kMegabyte, 256, 16, 1e4},
        {"am", "All media", 7, 1, 20 * kMegabyte, 256, 16, 1e4},
    };
    return table;
}

const Preset* find_preset(std::string_view name) {
    const std::string key = lower(trim(name));
    for (const Preset& p : presets()) {
        if (p.name == key) return &p;
    }
    return nullptr;
}

ScenarioConfig preset_config(std::string_view name) {
    const Preset* p = find_preset(name);
    if (p == nullptr) throw ConfigError("preset", "unknown preset '" + std::string(name) + "' (expected mf, ts, m, am)");
    ScenarioConfig cfg;
    cfg.scenario = std::string(p->name);
    cfg.m = p->m;
    cfg.n = p->n;
    cfg.content_bytes = p->content_bytes;
    cfg.piece_bytes = p->piece_bytes;
    cfg.block_bytes = p->block_bytes;
    cfg.r_down = p->r_down;
    cfg.r_up = p->r_down;
    return cfg;
}

void apply_override(ScenarioConfig& cfg, std::string_view key, std::string_view value) {
    const std::string k(key);
    auto as_int = [&](int& field) {
        const std::int64_t v = parse_integer(key, value);
        if (v < std::numeric_limits<int>::min() || v > std::numeric_limits<int>::max()) {
            throw ConfigError(k, k + " out of range");
        }
        field = static_cast<int>(v);
    };
    if (k == "preset") {
        ScenarioConfig fresh = preset_config(value);
        fresh.occupancy = cfg.occupancy;
        fresh.policy = cfg.policy;
        fresh.horizon = cfg.horizon;
        fresh.warmup = cfg.warmup;
        fresh.replications = cfg.replications;
        fresh.seed = cfg.seed;
        cfg = fresh;
    } else if (k == "m") {
        as_int(cfg.m);
    } else if (k == "n") {
        as_int(cfg.n);
    } else if (k == "O_s") {
        cfg.content_bytes = parse_integer(key, value);
    } else if (k == "p_s") {
        cfg.piece_bytes = parse_integer(key, value);
    } else if (k == "b_s") {
        cfg.block_bytes = parse_integer(key, value);
    } else if (k == "R_down") {
        cfg.r_down = parse_real(key, value);
    } else if (k == "R_up") {
        cfg.r_up = parse_real(key, value);
    } else if (k == "occupancy") {
        if (auto labelled = OccupancyProfile::from_label(trim(value))) {
            cfg.occupancy = *labelled;
        } else {
            cfg.occupancy = OccupancyProfile{parse_real(key, value)};
        }
    } else if (k == "policy") {
        auto p = parse_policy(trim(value));
        if (!p) throw ConfigError(k, "unknown policy '" + std::string(value) + "' (expected bt, sbnp, sonp, srnp)");
        cfg.policy = *p;
    } else if (k == "horizon") {
        cfg.horizon = parse_time_or_auto(key, value);
    } else if (k == "completions") {
        as_int(cfg.target_completions);
    } else if (k == "warmup") {
        cfg.warmup = parse_time_or_auto(key, value);
    } else if (k == "replications") {
        as_int(cfg.replications);
    } else if (k == "seed") {
        const std::int64_t v = parse_integer(key, value);
        if (v < 0) throw ConfigError(k, "seed must be non-negative");
        cfg.seed = static_cast<std::uint64_t>(v);
    } else {
        throw ConfigError(k, "unknown key '" + k + "'");
    }
}

KeyValues parse_key_values(std::string_view text) {
    KeyValues out;
    std::set<std::string, std::less<>> seen;
    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        std::size_t eol = text.find('\n', pos);
        if (eol == std::string_view::npos) eol = text.size();
        std::string_view line = text.substr(pos, eol - pos);
        pos = eol + 1;
        ++line_no;
        if (auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        const std::size_t eq = line.find('=');
        if (eq == std::string_view::npos) {
            throw ConfigError("line " + std::to_string(line_no), "line " + std::to_string(line_no) + ": expected 'key = value'");
        }
        std::string key(trim(line.substr(0, eq)));
        std::string value(trim(line.substr(eq + 1)));
        if (key.empty()) throw ConfigError("line " + std::to_string(line_no), "line " + std::to_string(line_no) + ": empty key");
        if (!seen.insert(key).second) throw ConfigError(key, "duplicate key '" + key + "'");
        out.emplace_back(std::move(key), std::move(value));
    }
    return out;
}

ScenarioConfig parse_scenario(std::string_view text) {
    const KeyValues kv = parse_key_values(text);
    ScenarioConfig cfg;
    // Preset expansion happens before any override.
    for (const auto& [k, v] : kv) {
        if (k == "preset") apply_override(cfg, k, v);
    }
    for (const auto& [k, v] : kv) {
        if (k != "preset") apply_override(cfg, k, v);
    }
    cfg.validate();
    return cfg;
}

ScenarioConfig load_scenario(const std::filesystem::path& path) { return parse_scenario(read_file(path)); }

std::string to_config_text(const ScenarioConfig& cfg) {
    std::ostringstream out;
    if (cfg.scenario != "custom") out << "preset = " << cfg.scenario << '\n';
    out << "m = " << cfg.m << '\n'
        << "n = " << cfg.n << '\n'
        << "O_s = " << cfg.content_bytes << '\n'
        << "p_s = " << cfg.piece_bytes << '\n'
        << "b_s = " << cfg.block_bytes << '\n'
        << "R_down = " << format_real(cfg.r_down) << '\n';
    if (cfg.r_up) out << "R_up = " << format_real(*cfg.r_up) << '\n';
    out << "occupancy = " << format_real(cfg.occupancy.occupancy) << '\n'
        << "policy = " << to_string(cfg.policy) << '\n'
        << "horizon = " << (cfg.horizon ? format_real(*cfg.horizon) : std::string("auto")) << '\n'
        << "completions = " << cfg.target_completions << '\n'
        << "warmup = " << (cfg.warmup ? format_real(*cfg.warmup) : std::string("auto")) << '\n'
        << "replications = " << cfg.replications << '\n'
        << "seed = " << cfg.seed << '\n';
    return out.str();
}

std::optional<ReportFormat> parse_format(std::string_view text) {
    const std::string t = lower(trim(text));
    if (t == "csv") return ReportFormat::Csv;
    if (t == "json") return ReportFormat::Json;
    if (t == "svg") return ReportFormat::Svg;
    return std::nullopt;
}

const char* to_string(ReportFormat format) noexcept {
    switch (format) {
    case ReportFormat::Csv: return "csv";
    case ReportFormat::Json: return "json";
    case ReportFormat::Svg: return "svg";
    }
    return "unknown";
}

std::vector<ScenarioConfig> ExperimentGrid::cells() const {
    std::vector<ScenarioConfig> out;
    for (const std::string& scenario : scenarios) {
        ScenarioConfig base;
        if (scenario != "custom") base = preset_config(scenario);
        for (const auto& [k, v] : overrides) apply_override(base, k, v);

        std::vector<std::int64_t> sizes = content_sizes;
        if (sizes.empty()) sizes.push_back(base.content_bytes);
        for (std::int64_t size : sizes) {
            for (double occ : occupancies) {
                for (PolicyName policy : policies) {
                    ScenarioConfig cell = base;
                    cell.content_bytes = size;
                    cell.occupancy = OccupancyProfile{occ};
                    cell.policy = policy;
                    cell.validate();
                    out.push_back(std::move(cell));
                }
            }
        }
    }
    return out;
}

ExperimentGrid parse_grid(std::string_view text) {
    const KeyValues kv = parse_key_values(text);
    ExperimentGrid grid;
    bool have_scenarios = false, have_policies = false, have_occupancies = false, have_sizes = false;
    std::optional<std::string> single_preset, single_policy, single_occupancy, single_size;

    for (const auto& [k, v] : kv) {
        if (k == "scenarios") {
            have_scenarios = true;
            for (const std::string& s : split_list(v)) {
                if (s != "custom" && find_preset(s) == nullptr) throw ConfigError(k, "unknown preset '" + s + "'");
                grid.scenarios.push_back(lower(s));
            }
        } else if (k == "policies") {
            have_policies = true;
            for (const std::string& s : split_list(v)) {
                auto p = parse_policy(s);
                if (!p) throw ConfigError(k, "unknown policy '" + s + "'");
                grid.policies.push_back(*p);
            }
        } else if (k == "occupancies") {
            have_occupancies = true;
            for (const std::string& s : split_list(v)) {
                if (auto labelled = OccupancyProfile::from_label(s)) {
                    grid.occupancies.push_back(labelled->occupancy);
                } else {
                    grid.occupancies.push_back(parse_real(k, s));
                }
            }
        } else if (k == "content_sizes") {
            have_sizes = true;
            for (const std::string& s : split_list(v)) grid.content_sizes.push_back(parse_integer(k, s));
        } else if (k == "formats") {
            grid.formats.clear();
            for (const std::string& s : split_list(v)) {
                auto f = parse_format(s);
                if (!f) throw ConfigError(k, "unknown format '" + s + "' (expected csv, json, svg)");
                grid.formats.push_back(*f);
            }
        } else if (k == "out") {
            grid.output_dir = v;
        } else if (k == "preset") {
            single_preset = v;
        } else if (k == "policy") {
            single_policy = v;
        } else if (k == "occupancy") {
            single_occupancy = v;
        } else if (k == "O_s") {
            single_size = v;
        } else if (scenario_keys().contains(k)) {
            grid.overrides.emplace_back(k, v);
        } else {
            throw ConfigError(k, "unknown key '" + k + "'");
        }
    }

    auto both = [](const char* scalar, const char* axis) {
        throw ConfigError(axis, std::string("give either '") + scalar + "' or '" + axis + "', not both");
    };
    if (single_preset) {
        if (have_scenarios) both("preset", "scenarios");
        if (find_preset(*single_preset) == nullptr) throw ConfigError("preset", "unknown preset '" + *single_preset + "'");
        grid.scenarios = {lower(*single_preset)};
    } else if (!have_scenarios) {
        grid.scenarios = {"custom"};
    }
    if (single_policy) {
        if (have_policies) both("policy", "policies");
        auto p = parse_policy(*single_policy);
        if (!p) throw ConfigError("policy", "unknown policy '" + *single_policy + "'");
        grid.policies = {*p};
    } else if (!have_policies) {
        grid.policies = all_policies();
    }
    if (single_occupancy) {
        if (have_occupancies) both("occupancy", "occupancies");
        ScenarioConfig tmp;
        apply_override(tmp, "occupancy", *single_occupancy);
        grid.occupancies = {tmp.occupancy.occupancy};
    } else if (!have_occupancies) {
        grid.occupancies = {OccupancyProfile::kNone};
    }
    if (single_size) {
        if (have_sizes) both("O_s", "content_sizes");
        grid.content_sizes = {parse_integer("O_s", *single_size)};
    }
    // Surface bad overrides now rather than per cell.
    (void)grid.cells();
    return grid;
}

ExperimentGrid load_grid(const std::filesystem::path& path) { return parse_grid(read_file(path)); }

} // namespace swarmsim
