#include "ferrosim/flow.hpp"
#include "ferrosim/geometry.hpp"
#include "ferrosim/profile1d.hpp"

#include <benchmark/benchmark.h>

using namespace ferrosim;

namespace {

FlowConfig config_for(int n, double eps) {
    FlowConfig c;
    c.params = ModelParams::with_default_friction(1.0, eps);
    c.grid_n = n;
    return c;
}

void BM_Rhs(benchmark::State& st) {
    const FlowConfig c = config_for(static_cast<int>(st.range(0)), 0.05);
    const FieldState s = initial_condition(Grid(c.grid_n), 1, c.params);
    for (auto _ : st) benchmark::DoNotOptimize(rhs(s, c.params));
    st.SetItemsProcessed(st.iterations() * static_cast<long>(s.grid.nodes()));
}
BENCHMARK(BM_Rhs)->Arg(50)->Arg(100)->Arg(200);

// One implicit step from the initial condition, where Newton works hardest.
void BM_Step(benchmark::State& st) {
    const FlowConfig c = config_for(static_cast<int>(st.range(0)), 0.05);
    const auto consts = potential_constants(c.params);
    const FieldState init = initial_condition(Grid(c.grid_n), 1, c.params);
    for (auto _ : st) {
        st.PauseTiming();
        FieldState s = init;
        st.ResumeTiming();
        benchmark::DoNotOptimize(step(s, c, consts));
    }
}
BENCHMARK(BM_Step)->Arg(50)->Arg(100)->Unit(benchmark::kMillisecond);

void BM_MinimalConnection(benchmark::State& st) {
    std::vector<Point2> pts;
    for (int i = 0; i < st.range(0); ++i)
        pts.push_back({0.1 + 0.8 * ((i * 37) % 101) / 101.0, 0.1 + 0.8 * ((i * 61) % 103) / 103.0});
    for (auto _ : st) benchmark::DoNotOptimize(minimal_connection(pts));
}
BENCHMARK(BM_MinimalConnection)->Arg(4)->Arg(8)->Arg(12)->Unit(benchmark::kMicrosecond);

void BM_RenormalizedEnergy(benchmark::State& st) {
    const Grid g(static_cast<int>(st.range(0)));
    const std::vector<Point2> pts{{0.5, 0.3}, {0.5, 0.7}};
    const auto sigmas = sigma_ladder(pts, g);
    for (auto _ : st) benchmark::DoNotOptimize(renormalized_energy(pts, 1, g, sigmas));
}
BENCHMARK(BM_RenormalizedEnergy)->Arg(100)->Arg(200)->Unit(benchmark::kMillisecond);

void BM_OptimalProfile(benchmark::State& st) {
    const ModelParams p = ModelParams::with_default_friction(1.0, 0.05);
    const double t_max = default_profile_t_max(p);
    for (auto _ : st) benchmark::DoNotOptimize(optimal_profile(p, t_max, static_cast<int>(st.range(0))));
}
BENCHMARK(BM_OptimalProfile)->Arg(1000)->Arg(10000)->Unit(benchmark::kMicrosecond);

void BM_CoreEnergy(benchmark::State& st) {
    const std::vector<double> eps{0.2, 0.1, 0.05};
    for (auto _ : st) benchmark::DoNotOptimize(core_energy(eps, static_cast<int>(st.range(0))));
}
BENCHMARK(BM_CoreEnergy)->Arg(1000)->Arg(4000)->Unit(benchmark::kMillisecond);

} // namespace
BENCHMARK_MAIN();
