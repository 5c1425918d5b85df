// Serial reference vs OpenMP kernel for the three hot loops.
// Run with OMP_NUM_THREADS set; on one core the pairs should tie.

#include <benchmark/benchmark.h>

#include <vector>

#include "fixtures.hpp"
#include "pival/commands.hpp"
#include "pival/mixture.hpp"
#include "pival/posterior.hpp"
#include "pival/priors.hpp"
#include "pival/replication.hpp"

using namespace pival;

namespace {

const Family kPoisson(FamilyKind::poisson);
const Link kLog(LinkKind::log);

template <auto Fn>
void replication(benchmark::State& state) {
    const ModelData d = fixture::credence_primary();
    const FitResult fit = fit_irls(kPoisson, kLog, d);
    ReplicationConfig cfg;
    cfg.n_sim = static_cast<int>(state.range(0));
    for (auto _ : state) benchmark::DoNotOptimize(Fn(fit, d, kPoisson, kLog, cfg));
}

template <auto Fn>
void grid(benchmark::State& state) {
    const ModelData d = fixture::credence_primary();
    const auto ll = glm_log_posterior(kPoisson, kLog, d, 1.0, {});
    const auto priors = prior_preset("student-t", 2);
    const std::vector<std::pair<double, double>> box = {{-4.0, 0.0}, {-1.0, 0.5}};
    for (auto _ : state) benchmark::DoNotOptimize(Fn(ll, priors, box, static_cast<int>(state.range(0)), {}));
}

template <auto Fn>
void em(benchmark::State& state) {
    RngStream r(7, 0);
    std::vector<double> x(static_cast<std::size_t>(state.range(0)));
    for (std::size_t i = 0; i < x.size(); ++i) x[i] = i % 3 ? r.normal(-0.35, 0.08) : r.normal(0.1, 0.2);
    MixtureModel1D init;
    init.components = {{0.5, -0.3, 0.1}, {0.5, 0.0, 0.3}};
    MixtureOptions opts;
    for (auto _ : state) benchmark::DoNotOptimize(Fn(x, init, opts));
}

}  // namespace

BENCHMARK(replication<static_cast<ReplicationReport (*)(const InitialPosterior&, const ModelData&, const Family&,
                                                        const Link&, const ReplicationConfig&)>(&run_replication)>)
    ->Name("replication/parallel")->Arg(5000)->Unit(benchmark::kMillisecond);
BENCHMARK(replication<&serial::run_replication>)->Name("replication/serial")->Arg(5000)->Unit(benchmark::kMillisecond);
BENCHMARK(grid<static_cast<GridPosterior (*)(const LogDensityFn&, const std::vector<PriorSpec>&,
                                             const std::vector<std::pair<double, double>>&, int, const GridOptions&)>(
    &grid_posterior)>)
    ->Name("grid/parallel")->Arg(401)->Unit(benchmark::kMillisecond);
BENCHMARK(grid<&serial::grid_posterior>)->Name("grid/serial")->Arg(401)->Unit(benchmark::kMillisecond);
BENCHMARK(em<static_cast<EmRun (*)(std::span<const double>, const MixtureModel1D&, const MixtureOptions&)>(&run_em)>)
    ->Name("em/parallel")->Arg(200000)->Unit(benchmark::kMillisecond);
BENCHMARK(em<&serial::run_em>)->Name("em/serial")->Arg(200000)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
