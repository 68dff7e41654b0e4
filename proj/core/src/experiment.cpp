#include "swarmsim/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <exception>
#include <memory>
#include <mutex>
#include <thread>

#include "swarmsim/report.hpp"
#include "swarmsim/simulation.hpp"

namespace swarmsim {

std::string cell_key(const ScenarioConfig& cfg) {
    char occ[32];
    auto [end, ec] = std::to_chars(occ, occ + sizeof(occ), cfg.occupancy.occupancy);
    std::string key = cfg.scenario + "_" + to_string(cfg.policy) + "_occ" + std::string(occ, end) + "_os" +
                      std::to_string(cfg.content_bytes);
    for (char& c : key) {
        const bool safe = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '_' ||
                          c == '.' || c == '-';
        if (!safe) c = '-';
    }
    return key;
}

std::vector<std::uint64_t> replication_seeds(const ScenarioConfig& cfg) {
    std::vector<std::uint64_t> seeds;
    seeds.reserve(static_cast<std::size_t>(cfg.replications));
    for (int i = 0; i < cfg.replications; ++i) seeds.push_back(cfg.seed + static_cast<std::uint64_t>(i));
    return seeds;
}

namespace {

struct CellWork {
    CellResult result;
    std::vector<std::uint64_t> seeds;
    std::vector<RunResult> runs;
    std::vector<std::string> errors;
    std::atomic<std::size_t> remaining{0};
};

std::optional<CellResult> try_resume(const ScenarioConfig& cfg, const ExperimentOptions& options) {
    if (!options.cell_dir || !options.resume) return std::nullopt;
    const auto path = *options.cell_dir / (cell_key(cfg) + ".json");
    std::error_code ec;
    if (!std::filesystem::exists(path, ec)) return std::nullopt;
    try {
        CellResult cached = cell_from_json(read_text_file(path));
        // Only a successful cell for the identical resolved config counts.
        if (!cached.ok() || !(cached.config == cfg)) return std::nullopt;
        cached.resumed = true;
        return cached;
    } catch (const std::exception&) {
        return std::nullopt;
    }
}

void finish_cell(CellWork& work) {
    CellResult& cell = work.result;
    std::string first_error;
    for (std::size_t i = 0; i < work.errors.size(); ++i) {
        if (!work.errors[i].empty()) {
            first_error = "replication seed " + std::to_string(work.seeds[i]) + ": " + work.errors[i];
            break;
        }
    }
    if (!first_error.empty()) {
        cell.error = first_error;
        for (std::size_t i = 0; i < work.runs.size(); ++i) {
            if (work.errors[i].empty()) cell.runs.push_back(std::move(work.runs[i]));
        }
        return;
    }
    cell.runs = std::move(work.runs);
    try {
        cell.summary = summarize(cell.runs);
    } catch (const std::exception& e) {
        cell.error = e.what();
    }
}

} // namespace

CellResult run_cell(const ScenarioConfig& cfg, const ExperimentOptions& options) {
    std::vector<CellResult> out = run_experiment(std::vector<ScenarioConfig>{cfg}, options);
    return std::move(out.front());
}

std::vector<CellResult> run_experiment(const std::vector<ScenarioConfig>& cells, const ExperimentOptions& options) {
    std::vector<std::unique_ptr<CellWork>> work;
    work.reserve(cells.size());
    struct Task {
        std::size_t cell;
        std::size_t replication;
    };
    std::vector<Task> tasks;
    std::mutex done_mutex;

    auto publish = [&](CellResult& cell) {
        std::lock_guard lock(done_mutex);
        if (options.cell_dir && !cell.resumed) {
            try {
                std::filesystem::create_directories(*options.cell_dir);
                write_text_file(*options.cell_dir / (cell.key + ".json"), cell_to_json(cell));
            } catch (const std::exception& e) {
                if (cell.error.empty()) cell.error = e.what();
            }
        }
        if (options.on_cell_done) options.on_cell_done(cell);
    };

    for (std::size_t c = 0; c < cells.size(); ++c) {
        auto w = std::make_unique<CellWork>();
        w->result.config = cells[c];
        w->result.key = cell_key(cells[c]);
        if (auto cached = try_resume(cells[c], options)) {
            w->result = std::move(*cached);
            publish(w->result);
        } else {
            try {
                cells[c].validate();
                w->seeds = replication_seeds(cells[c]);
            } catch (const std::exception& e) {
                w->result.error = e.what();
            }
            w->runs.resize(w->seeds.size());
            w->errors.resize(w->seeds.size());
            w->remaining = w->seeds.size();
            for (std::size_t r = 0; r < w->seeds.size(); ++r) tasks.push_back({c, r});
            if (w->seeds.empty()) publish(w->result);
        }
        work.push_back(std::move(w));
    }

    RunOptions run_options;
    run_options.check_invariants = options.check_invariants;
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= tasks.size()) return;
            CellWork& w = *work[tasks[i].cell];
            const std::size_t r = tasks[i].replication;
            try {
                w.runs[r] = run_replication(w.result.config, w.seeds[r], run_options);
            } catch (const std::exception& e) {
                w.errors[r] = e.what();
                if (w.errors[r].empty()) w.errors[r] = "unknown failure";
            }
            if (w.remaining.fetch_sub(1) == 1) {
                finish_cell(w);
                publish(w.result);
            }
        }
    };

    const unsigned jobs = std::max(1u, std::min<unsigned>(options.jobs, static_cast<unsigned>(tasks.size())));
    if (jobs <= 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        pool.reserve(jobs);
        for (unsigned j = 0; j < jobs; ++j) pool.emplace_back(worker);
    }

    std::vector<CellResult> out;
    out.reserve(work.size());
    for (auto& w : work) out.push_back(std::move(w->result));
    return out;
}

} // namespace swarmsim
