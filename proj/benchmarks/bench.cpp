#include <benchmark/benchmark.h>

#include <string>
#include <vector>

#include "costwise/circuit_io.hpp"
#include "costwise/cohort.hpp"
#include "costwise/dnf.hpp"
#include "costwise/eval.hpp"
#include "costwise/groups.hpp"
#include "costwise/rng.hpp"
#include "costwise/solver.hpp"

using namespace costwise;

namespace {

std::string graph(const std::string& name) {
    return std::string(COSTWISE_GRAPH_DIR) + "/" + name;
}

const CostCircuit& icu() {
    static CostCircuit c = load_circuit(graph("icu_sepsis.json"));
    return c;
}

}  // namespace

static void bm_reduce(benchmark::State& state) {
    const CostCircuit& c = icu();
    for (auto _ : state) {
        ThreeLayerForm form = reduce(c);
        benchmark::DoNotOptimize(form.extended_size);
    }
}
BENCHMARK(bm_reduce)->Unit(benchmark::kMillisecond);

static void bm_build_groups(benchmark::State& state) {
    const CostCircuit& c = icu();
    ThreeLayerForm form = reduce(c);
    for (auto _ : state) {
        GroupSpec spec = build_groups(form, c, "financial", 1e-3);
        benchmark::DoNotOptimize(spec.groups.size());
    }
}
BENCHMARK(bm_build_groups)->Unit(benchmark::kMicrosecond);

static void bm_prox_linf(benchmark::State& state) {
    Rng rng(1);
    Eigen::VectorXd v(state.range(0));
    for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = rng.normal();
    double tau = 0.3 * v.lpNorm<1>() / static_cast<double>(v.size());
    for (auto _ : state) {
        Eigen::VectorXd x = prox_linf(v, tau);
        benchmark::DoNotOptimize(x.sum());
    }
}
BENCHMARK(bm_prox_linf)->Arg(10)->Arg(100)->Arg(1000)->Unit(benchmark::kMicrosecond);

static void bm_logistic_grad(benchmark::State& state) {
    Rng rng(2);
    Dataset data;
    const int n = 2000, d = 105;
    data.X.resize(n, d);
    data.y.resize(n);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < d; ++j) data.X(i, j) = rng.normal();
        data.y(i) = rng.uniform() < 0.5 ? -1.0 : 1.0;
    }
    Eigen::VectorXd beta = Eigen::VectorXd::Zero(d);
    for (auto _ : state) {
        LossGrad lg = logistic_loss_grad(beta, 0.0, data);
        benchmark::DoNotOptimize(lg.loss);
    }
}
BENCHMARK(bm_logistic_grad)->Unit(benchmark::kMillisecond);

static void bm_fit_group_icu(benchmark::State& state) {
    const CostCircuit& c = icu();
    ThreeLayerForm form = reduce(c);
    GenOptions gen;
    gen.n_pos = 100;
    gen.n_neg = 300;
    gen.seed = 5;
    Cohort cohort = generate(c, gen);
    Dataset train = make_training_set(cohort, 5);
    Standardizer scaler = Standardizer::fit(train.X);
    train.X = scaler.apply(train.X);
    Dataset ext = extend_design(train, form);
    std::vector<GroupSpec> specs;
    for (const auto& ch : c.channels())
        if (ch.aggregation == Aggregation::Sum)
            specs.push_back(build_groups(form, c, ch.name,
                                         ch.anchor_layer == c.selection_layer() ? 1e-3 : 1e-7));
    FitConfig cfg;
    for (auto _ : state) {
        ExtendedModel m = fit_group(ext, specs, cfg);
        benchmark::DoNotOptimize(m.intercept);
    }
}
BENCHMARK(bm_fit_group_icu)->Unit(benchmark::kMillisecond)->Iterations(3);

BENCHMARK_MAIN();
