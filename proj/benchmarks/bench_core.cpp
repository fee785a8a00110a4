#include <random>
#include <vector>

#include <benchmark/benchmark.h>

#include "glvd/data.hpp"
#include "glvd/dynamics.hpp"
#include "glvd/inference.hpp"
#include "glvd/model_gen.hpp"
#include "glvd/rng.hpp"
#include "glvd/validation.hpp"

using namespace glvd;

namespace {

// S=10, s=4 calibration problem at the default settings
struct Problem {
    DetailedModel detailed = generate_detailed({.species = 10, .seed = 1});
    ReducedModel reduced = subsample_reduced(detailed, 4);
    std::vector<double> times = uniform_observation_times(10.0, 10);
    std::vector<Scenario> scenarios = sample_scenarios(6, 3, 4, 10, {}, 2);
    ObservationSet obs = synthesize_observations(detailed, 4, scenarios, times, 0.001, SolverConfig{}, 3);
    Eigen::VectorXd theta = (Eigen::VectorXd(8) << -0.5, -0.3, -0.8, -0.2, -0.1, -0.4, -0.2, -0.3).finished();
};

const Problem& problem() {
    static const Problem p;
    return p;
}

}  // namespace

static void BM_Generate(benchmark::State& state) {
    const int S = static_cast<int>(state.range(0));
    std::uint64_t seed = 0;
    for (auto _ : state) benchmark::DoNotOptimize(generate_detailed({.species = S, .seed = ++seed}));
}
BENCHMARK(BM_Generate)->Arg(10)->Arg(20)->Arg(100);

static void BM_RhsEnriched(benchmark::State& state) {
    const Problem& p = problem();
    const DiscrepancyParams d = DiscrepancyParams::from_theta(p.theta);
    const Eigen::VectorXd x = Eigen::VectorXd::Constant(4, 1.0);
    const auto mode = state.range(0) ? EnrichedMode::implicit : EnrichedMode::explicit_surrogate;
    for (auto _ : state) benchmark::DoNotOptimize(rhs_enriched(p.reduced, d, x, mode));
}
BENCHMARK(BM_RhsEnriched)->Arg(0)->Arg(1);

static void BM_IntegrateDetailed(benchmark::State& state) {
    const Problem& p = problem();
    const Eigen::VectorXd x0 = p.scenarios[0].full_initial();
    for (auto _ : state) benchmark::DoNotOptimize(integrate(p.detailed, x0, SolverConfig{}, p.times));
}
BENCHMARK(BM_IntegrateDetailed);

static void BM_IntegrateEnriched(benchmark::State& state) {
    const Problem& p = problem();
    const EnrichedModel e{p.reduced, DiscrepancyParams::from_theta(p.theta)};
    for (auto _ : state) benchmark::DoNotOptimize(integrate(e, p.scenarios[0].initial, SolverConfig{}, p.times));
}
BENCHMARK(BM_IntegrateEnriched);

static void BM_LogLikelihood(benchmark::State& state) {
    const Problem& p = problem();
    const ObservationSet cal = p.obs.restrict(Partition::calibration);
    for (auto _ : state) benchmark::DoNotOptimize(log_likelihood(p.theta, p.reduced, cal, SolverConfig{}));
}
BENCHMARK(BM_LogLikelihood);

static void BM_GammaValue(benchmark::State& state) {
    Rng rng = make_rng(5);
    std::normal_distribution<double> nd(0.0, 1.0);
    std::vector<double> e(static_cast<std::size_t>(state.range(0)));
    for (double& v : e) v = nd(rng);
    for (auto _ : state) benchmark::DoNotOptimize(gamma_value(1.0, e));
}
BENCHMARK(BM_GammaValue)->Arg(2000)->Arg(10000);

BENCHMARK_MAIN();
