#include <benchmark/benchmark.h>

#include "swarmsim/config.hpp"
#include "swarmsim/engine.hpp"
#include "swarmsim/policy.hpp"
#include "swarmsim/simulation.hpp"
#include "swarmsim/swarm.hpp"

using namespace swarmsim;

// Eight peers ticking every 10 s, the steady-state shape of a small swarm.
static void BM_EngineTicks(benchmark::State& state) {
    const auto peers = static_cast<std::uint32_t>(state.range(0));
    std::uint64_t total = 0;
    for (auto _ : state) {
        Engine engine;
        for (std::uint32_t p = 0; p < peers; ++p) engine.schedule(p * 0.1, EventKind::RegularUnchokeTick, PeerId{p});
        const auto stats = engine.run_until(10'000, [&](const Event& e) {
            engine.schedule(e.fire_at + 10, EventKind::RegularUnchokeTick, e.peer);
        });
        total += stats.dispatched;
    }
    state.SetItemsProcessed(static_cast<std::int64_t>(total));
}
BENCHMARK(BM_EngineTicks)->Arg(8)->Arg(26)->Arg(256);

static void BM_RegularUnchoke(benchmark::State& state) {
    const PolicySpec spec = builtin_policy(static_cast<PolicyName>(state.range(0)));
    SwarmParams params;
    params.content_bytes = 1'000'000;
    params.block_bytes = 16;
    Swarm swarm(params);
    RngStream rng(3);
    PeerRecord& local = swarm.add_peer(PeerState::Leecher, 0, rng);
    local.progress_bytes = params.content_bytes / 2;
    const PeerId me = local.id;
    for (int i = 0; i < 24; ++i) {
        const PeerId id = swarm.add_peer(PeerState::Leecher, 0, rng).id;
        auto& est = swarm.peer(me).rate_in.try_emplace(id, params.rate_window).first->second;
        est.add(5, 1000 * (i % 7));
        swarm.peer(id).last_piece_at = double(i % 5);
    }
    for (auto _ : state) {
        auto picks = regular_unchoke(swarm.peer(me), swarm, spec, 10, rng);
        benchmark::DoNotOptimize(picks);
    }
    state.SetLabel(to_string(spec.name));
}
BENCHMARK(BM_RegularUnchoke)->DenseRange(0, 3);

// One full replication of the all-media preset.
static void BM_AmReplication(benchmark::State& state) {
    ScenarioConfig cfg = preset_config("am");
    cfg.policy = static_cast<PolicyName>(state.range(0));
    std::uint64_t events = 0;
    std::uint64_t seed = 1;
    for (auto _ : state) {
        RunResult r = run_replication(cfg, seed++);
        events += r.dispatched_events;
        benchmark::DoNotOptimize(r.erc);
    }
    state.SetItemsProcessed(static_cast<std::int64_t>(events));
    state.SetLabel(to_string(cfg.policy));
}
BENCHMARK(BM_AmReplication)->DenseRange(0, 3)->Unit(benchmark::kMillisecond)->Iterations(2);
BENCHMARK_MAIN();
