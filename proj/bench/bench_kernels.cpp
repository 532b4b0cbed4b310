// Serial reference vs OpenMP kernels.
#include <benchmark/benchmark.h>

#include <vector>

#include "msh/kernels.hpp"
#include "msh/rng.hpp"
#include "msh/segments.hpp"

namespace {

using namespace msh;

std::vector<double> random_vector(std::size_t n, std::uint64_t seed) {
    Rng rng(seed);
    std::vector<double> v(n);
    for (auto& x : v) x = rng.uniform(-1.0, 1.0);
    return v;
}

SegmentsPtr ring_segments(std::size_t n, bool forward) {
    std::vector<std::size_t> of;
    for (std::size_t v = 0; v < n; ++v) {
        of.push_back(forward ? v : (v + 1) % n);
        of.push_back(forward ? (v + 1) % n : v);
    }
    return make_segments(of, n);
}

template <bool Parallel>
void BM_Matmul(benchmark::State& state) {
    const auto m = static_cast<std::size_t>(state.range(0));
    const std::size_t k = 64, n = 1024;
    const auto a = random_vector(m * k, 1), b = random_vector(k * n, 2);
    std::vector<double> c(m * n);
    for (auto _ : state) {
        if constexpr (Parallel)
            kernels::parallel::matmul(a, b, c, m, k, n);
        else
            kernels::serial::matmul(a, b, c, m, k, n);
        benchmark::DoNotOptimize(c.data());
    }
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(m * k * n));
}

template <bool Parallel>
void BM_MatmulTN(benchmark::State& state) {
    const auto m = static_cast<std::size_t>(state.range(0));
    const std::size_t k = 64, n = 1024;
    const auto a = random_vector(m * k, 3), b = random_vector(m * n, 4);
    std::vector<double> c(k * n);
    for (auto _ : state) {
        if constexpr (Parallel)
            kernels::parallel::matmul_tn(a, b, c, m, k, n);
        else
            kernels::serial::matmul_tn(a, b, c, m, k, n);
        benchmark::DoNotOptimize(c.data());
    }
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(m * k * n));
}

template <bool Parallel>
void BM_EdgeProject(benchmark::State& state) {
    const auto n = static_cast<std::size_t>(state.range(0));
    const std::size_t d = 64, F = 16;
    const auto src = ring_segments(n, true), dst = ring_segments(n, false);
    const auto fflat = random_vector(n * F * d, 5), h = random_vector(n * d, 6);
    std::vector<double> out(2 * n * F);
    for (auto _ : state) {
        if constexpr (Parallel)
            kernels::parallel::edge_project(fflat, h, *src, *dst, F, d, out);
        else
            kernels::serial::edge_project(fflat, h, *src, *dst, F, d, out);
        benchmark::DoNotOptimize(out.data());
    }
}

template <bool Parallel>
void BM_SegmentSum(benchmark::State& state) {
    const auto n = static_cast<std::size_t>(state.range(0));
    const std::size_t d = 64;
    const auto dst = ring_segments(n, false);
    const auto values = random_vector(2 * n * d, 7);
    std::vector<double> out(n * d);
    for (auto _ : state) {
        if constexpr (Parallel)
            kernels::parallel::segment_sum(values, *dst, d, out);
        else
            kernels::serial::segment_sum(values, *dst, d, out);
        benchmark::DoNotOptimize(out.data());
    }
}

template <bool Parallel>
void BM_HarmonicEncode(benchmark::State& state) {
    const auto E = static_cast<std::size_t>(state.range(0));
    const std::size_t F = 16;
    const std::vector<double> freqs{1.0, 2.0, 4.0};
    const auto p = random_vector(E * F, 8);
    std::vector<double> out(E * 2 * F * freqs.size());
    for (auto _ : state) {
        if constexpr (Parallel)
            kernels::parallel::harmonic_encode(p, freqs, E, F, out);
        else
            kernels::serial::harmonic_encode(p, freqs, E, F, out);
        benchmark::DoNotOptimize(out.data());
    }
}

}  // namespace

BENCHMARK(BM_Matmul<false>)->Arg(256)->Arg(2048);
BENCHMARK(BM_Matmul<true>)->Arg(256)->Arg(2048);
BENCHMARK(BM_MatmulTN<false>)->Arg(256)->Arg(2048);
BENCHMARK(BM_MatmulTN<true>)->Arg(256)->Arg(2048);
BENCHMARK(BM_EdgeProject<false>)->Arg(1024)->Arg(8192);
BENCHMARK(BM_EdgeProject<true>)->Arg(1024)->Arg(8192);
BENCHMARK(BM_SegmentSum<false>)->Arg(1024)->Arg(8192);
BENCHMARK(BM_SegmentSum<true>)->Arg(1024)->Arg(8192);
BENCHMARK(BM_HarmonicEncode<false>)->Arg(2048)->Arg(16384);
BENCHMARK(BM_HarmonicEncode<true>)->Arg(2048)->Arg(16384);

BENCHMARK_MAIN();
