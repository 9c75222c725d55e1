#include <benchmark/benchmark.h>

#include <complex>
#include <cstdint>

#include "qitp/circuit.hpp"
#include "qitp/estimator.hpp"
#include "qitp/hamiltonian.hpp"
#include "qitp/linalg.hpp"
#include "qitp/propagator.hpp"
#include "qitp/rng.hpp"

namespace {

qitp::ComplexMatrix random_hermitian(int dim, std::uint64_t seed) {
    qitp::Rng rng(seed);
    qitp::ComplexMatrix m(dim, dim);
    for (int i = 0; i < dim; ++i)
        for (int j = 0; j < dim; ++j)
            m(i, j) = std::complex<double>(rng.next_double() - 0.5,
                                           rng.next_double() - 0.5);
    qitp::ComplexMatrix h = m + m.adjoint().eval();
    return h / 2.0;
}

qitp::Hamiltonian pair_model(int n) {
    return qitp::heisenberg_pair_model(n, qitp::PairCoupling{1.0, 1.0, 1.0},
                                       qitp::QubitField{0.0, 0.0, 0.5});
}

} // namespace

static void BM_HermitianEig(benchmark::State& state) {
    const qitp::ComplexMatrix m =
        random_hermitian(static_cast<int>(state.range(0)), 11);
    for (auto _ : state) {
        qitp::Eigensystem e = qitp::hermitian_eig(m);
        benchmark::DoNotOptimize(e);
    }
}
BENCHMARK(BM_HermitianEig)->Arg(16)->Arg(64)->Arg(256);

static void BM_ThermalMatrix(benchmark::State& state) {
    const qitp::Hamiltonian h = pair_model(static_cast<int>(state.range(0)));
    const qitp::QitpParams params{1.0, h.ground_energy(), 1.0};
    for (auto _ : state) {
        qitp::ComplexMatrix u = qitp::qitp_th_matrix(h, params);
        benchmark::DoNotOptimize(u);
    }
}
BENCHMARK(BM_ThermalMatrix)->Arg(2)->Arg(3)->Arg(4);

static void BM_GrayCompile(benchmark::State& state) {
    const qitp::Hamiltonian h = pair_model(static_cast<int>(state.range(0)));
    const qitp::QitpParams params{1.0, h.ground_energy(), 1.0};
    for (auto _ : state) {
        qitp::Circuit c = qitp::compile_qitp_gray(h, params);
        benchmark::DoNotOptimize(c);
    }
}
BENCHMARK(BM_GrayCompile)->Arg(2)->Arg(3)->Arg(4);

static void BM_PipelineSimulate(benchmark::State& state) {
    const qitp::Hamiltonian h = pair_model(static_cast<int>(state.range(0)));
    qitp::PipelineSpec spec;
    spec.params = qitp::QitpParams{1.0, h.ground_energy(), 1.0};
    const qitp::Circuit c = qitp::build_thermal_pipeline(h, spec);
    for (auto _ : state) {
        qitp::RegisterState r = qitp::simulate(c);
        benchmark::DoNotOptimize(r);
    }
}
BENCHMARK(BM_PipelineSimulate)->Arg(2)->Arg(3)->Arg(4);

static void BM_TrotterDistribution(benchmark::State& state) {
    const qitp::Hamiltonian h = pair_model(3);
    const int steps = static_cast<int>(state.range(0));
    qitp::PipelineSpec spec;
    spec.params = qitp::QitpParams{1.0, h.ground_energy(), 1.0};
    spec.plan = qitp::make_trotter_plan(h, 1.0, steps);
    const qitp::Circuit c = qitp::build_thermal_pipeline(h, spec);
    for (auto _ : state) {
        auto dist = qitp::outcome_distribution(c);
        benchmark::DoNotOptimize(dist);
    }
}
BENCHMARK(BM_TrotterDistribution)->Arg(1)->Arg(2);

static void BM_SampleShots(benchmark::State& state) {
    const qitp::Hamiltonian h = pair_model(3);
    qitp::PipelineSpec spec;
    spec.params = qitp::QitpParams{1.0, h.ground_energy(), 1.0};
    const qitp::Circuit c = qitp::build_thermal_pipeline(h, spec);
    const auto dist = qitp::outcome_distribution(c);
    const auto shots = static_cast<std::uint64_t>(state.range(0));
    for (auto _ : state) {
        qitp::ShotRecord rec = qitp::sample_from_distribution(dist, shots, 7);
        benchmark::DoNotOptimize(rec);
    }
    state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations()) *
                            state.range(0));
}
BENCHMARK(BM_SampleShots)->Arg(10000)->Arg(100000);

BENCHMARK_MAIN();
