#pragma once

#include <filesystem>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "swarmsim/config.hpp"
#include "swarmsim/experiment.hpp"

namespace swarmsim {

class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

inline constexpr std::string_view kCsvHeader =
    "scenario,policy,occupancy,content_bytes,replications,erc_mean,erc_ci95,service_time_mean_s,"
    "service_time_ci95,clients_served_mean,converged";

std::string cell_to_json(const CellResult& cell);
CellResult cell_from_json(std::string_view text);

/// Cells in report order: scenario (preset table order, then by name),
/// content size, occupancy, policy.
std::vector<CellResult> report_order(std::span<const CellResult> cells);

std::string to_csv(std::span<const CellResult> cells);
std::string to_json(std::span<const CellResult> cells);
std::string to_svg(std::span<const CellResult> cells);

/// Writes results.csv, results.json or results.svg into `dir` and returns
/// the path written. Failed cells appear only in the JSON document.
std::filesystem::path emit_report(std::span<const CellResult> cells, ReportFormat format,
                                  const std::filesystem::path& dir);

void write_text_file(const std::filesystem::path& path, std::string_view text);
std::string read_text_file(const std::filesystem::path& path);

/// Loads every cells/<key>.json below `dir` (or `dir` itself when it holds
/// the cell files directly).
std::vector<CellResult> load_results_dir(const std::filesystem::path& dir);

} // namespace swarmsim
