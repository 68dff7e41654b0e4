#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "swarmsim/policy.hpp"
#include "swarmsim/transfer.hpp"
#include "swarmsim/types.hpp"

namespace swarmsim {

inline constexpr std::int64_t kMegabyte = 1'000'000;

/// One swarm scenario. Field names in config files: m, n, O_s, p_s, b_s,
/// R_down, R_up, occupancy, policy, horizon, completions, warmup,
/// replications, seed.
struct ScenarioConfig {
    std::string scenario = "custom"; ///< preset name, or "custom"
    int m = 1;                       ///< leechers
    int n = 1;                       ///< seeds
    std::int64_t content_bytes = 0;  ///< O_s
    std::int64_t piece_bytes = 256;  ///< p_s (carried, does not affect the fluid model)
    std::int64_t block_bytes = 16;   ///< b_s
    double r_down = 0;               ///< bytes/s
    std::optional<double> r_up;      ///< bytes/s; required for custom scenarios
    OccupancyProfile occupancy{};
    PolicyName policy = PolicyName::SBNP;
    std::optional<SimTime> horizon;  ///< nullopt: auto
    int target_completions = 200;    ///< sizes the auto horizon
    std::optional<SimTime> warmup;   ///< nullopt: auto (first cohort done)
    int replications = 10;
    std::uint64_t seed = 1;

    /// O_s / R_down.
    double exclusive_time() const { return static_cast<double>(content_bytes) / r_down; }
    double upload_rate() const;
    /// Explicit horizon, or an estimate leaving room for one warm-up
    /// download followed by at least `target_completions` completions.
    SimTime resolved_horizon() const;

    /// Throws ConfigError naming the first failing field.
    void validate() const;

    friend bool operator==(const ScenarioConfig&, const ScenarioConfig&) = default;
};

struct Preset {
    std::string_view name;
    std::string_view description;
    int m;
    int n;
    std::int64_t content_bytes;
    std::int64_t piece_bytes;
    std::int64_t block_bytes;
    double r_down;
};

/// Music files, TV series, movies, all media.
const std::vector<Preset>& presets();
const Preset* find_preset(std::string_view name);

/// The preset expanded into a scenario, with R_up = R_down.
ScenarioConfig preset_config(std::string_view name);

/// Applies one `key = value` override. Throws ConfigError on unknown keys
/// or unparsable values.
void apply_override(ScenarioConfig& cfg, std::string_view key, std::string_view value);

using KeyValues = std::vector<std::pair<std::string, std::string>>;

/// Flat `key = value` text; '#' starts a comment. Duplicate keys are rejected.
KeyValues parse_key_values(std::string_view text);

/// Preset expansion first, then overrides, then validation.
ScenarioConfig parse_scenario(std::string_view text);
ScenarioConfig load_scenario(const std::filesystem::path& path);

/// Serializes to the key-value form parse_scenario accepts.
std::string to_config_text(const ScenarioConfig& cfg);

enum class ReportFormat : std::uint8_t { Csv, Json, Svg };
std::optional<ReportFormat> parse_format(std::string_view text);
const char* to_string(ReportFormat format) noexcept;

/// Cartesian sweep over scenario presets, content sizes, occupancies and
/// policies. An empty axis list means "no cells".
struct ExperimentGrid {
    std::vector<std::string> scenarios;
    std::vector<std::int64_t> content_sizes; ///< empty: each preset's own size
    std::vector<double> occupancies;
    std::vector<PolicyName> policies;
    /// Overrides applied to every cell after preset expansion.
    KeyValues overrides;
    std::vector<ReportFormat> formats{ReportFormat::Csv, ReportFormat::Json};
    std::filesystem::path output_dir{"results"};

    /// Expanded and validated cells in scenario, size, occupancy, policy order.
    std::vector<ScenarioConfig> cells() const;
};

/// Grid keys: scenarios, content_sizes, occupancies, policies, formats,
/// out, plus any scenario key as a per-cell override. `preset`, `policy`,
/// `occupancy` and `O_s` act as one-element axes.
ExperimentGrid parse_grid(std::string_view text);
ExperimentGrid load_grid(const std::filesystem::path& path);

} // namespace swarmsim
