#include <benchmark/benchmark.h>

#include "cwo/bench.hpp"
#include "cwo/estimators.hpp"
#include "cwo/glm.hpp"
#include "cwo/neural.hpp"
#include "cwo/scenario.hpp"
#include "cwo/weights.hpp"

namespace {

using namespace cwo;

void BM_SampleFrontdoor(benchmark::State& state) {
    const Scm scm = build_scenario({Scenario::FrontDoor, static_cast<int>(state.range(0)), 7, 0.1});
    std::uint64_t seed = 0;
    for (auto _ : state) {
        benchmark::DoNotOptimize(sample(scm, 10000, seed++));
    }
    state.SetItemsProcessed(state.iterations() * 10000);
}
BENCHMARK(BM_SampleFrontdoor)->Arg(1)->Arg(16);

void BM_ExactTruth(benchmark::State& state) {
    const Scm scm = build_scenario({Scenario::FrontDoor, static_cast<int>(state.range(0)), 7, 0.1});
    const TreatmentAssignment a{{{"X", 1}}};
    for (auto _ : state) benchmark::DoNotOptimize(exact_truth(scm, a));
}
BENCHMARK(BM_ExactTruth)->Arg(4)->Arg(16);

void BM_McTruth(benchmark::State& state) {
    const Scm scm = build_scenario({Scenario::Msbd, 2, 7, 0.1});
    const TreatmentAssignment a{{{"X1", 1}, {"X2", 0}}};
    for (auto _ : state) benchmark::DoNotOptimize(mc_truth(scm, a, state.range(0), 3));
    state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_McTruth)->Arg(100000);

void BM_FitWls(benchmark::State& state) {
    const Eigen::Index n = state.range(0), d = state.range(1);
    const Eigen::MatrixXd x = Eigen::MatrixXd::Random(n, d);
    const Eigen::VectorXd y = Eigen::VectorXd::Random(n);
    const Eigen::VectorXd w = Eigen::VectorXd::Ones(n);
    for (auto _ : state) benchmark::DoNotOptimize(fit_wls(x, y, w));
}
BENCHMARK(BM_FitWls)->Args({10000, 2})->Args({10000, 16});

void BM_FitLogistic(benchmark::State& state) {
    const Scm scm = build_scenario({Scenario::FrontDoor, static_cast<int>(state.range(0)), 7, 0.1});
    const Dataset data = sample(scm, 10000, 3);
    const Eigen::MatrixXd z = data.select(data.block("Z"));
    const Eigen::VectorXd x = data.column("X");
    for (auto _ : state) benchmark::DoNotOptimize(fit_logistic(z, x));
}
BENCHMARK(BM_FitLogistic)->Arg(2)->Arg(16);

void BM_FrontdoorWeights(benchmark::State& state) {
    const Scm scm = build_scenario({Scenario::FrontDoor, static_cast<int>(state.range(0)), 7, 0.1});
    const Dataset data = sample(scm, 10000, 3);
    for (auto _ : state) benchmark::DoNotOptimize(frontdoor_stage_weights(data, 0.01));
}
BENCHMARK(BM_FrontdoorWeights)->Arg(1)->Arg(16);

void BM_TrainEpoch(benchmark::State& state) {
    const Eigen::Index n = state.range(0);
    const Scm scm = build_scenario({Scenario::Surrogate, 2, 7, 0.1});
    const Dataset data = sample(scm, n, 3);
    Eigen::MatrixXd features(n, 2);
    features.col(0) = data.column("X");
    features.col(1) = data.column("W");
    const Eigen::VectorXd y = data.column("Y");
    const Eigen::VectorXd w = Eigen::VectorXd::Ones(n);
    Hyperparams hp;
    hp.epochs = 1;
    hp.patience = 1;
    std::uint64_t seed = 0;
    for (auto _ : state) {
        auto [mlp, report] = train(build_mlp(2, hp, seed), features, y, w, hp, seed);
        benchmark::DoNotOptimize(report.final_train_loss);
        ++seed;
    }
    state.SetItemsProcessed(state.iterations() * n);
}
BENCHMARK(BM_TrainEpoch)->Arg(2000)->Arg(10000);

void BM_EstimateCwo(benchmark::State& state) {
    const Scm scm = build_scenario({Scenario::FrontDoor, 16, 7, 0.1});
    const Dataset data = sample(scm, state.range(0), 3);
    EstimateOptions opt;
    opt.backend = Backend::Cwo;
    for (auto _ : state) benchmark::DoNotOptimize(estimate_frontdoor(data, opt));
}
BENCHMARK(BM_EstimateCwo)->Arg(4000);

}  // namespace

int main(int argc, char** argv) {
    benchmark::Initialize(&argc, argv);
    if (benchmark::ReportUnrecognizedArguments(argc, argv)) return 1;
    benchmark::RunSpecifiedBenchmarks();
    return 0;
}
