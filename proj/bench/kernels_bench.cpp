// Serial against OpenMP versions of the data-parallel kernels.

#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "lipreach/bound_store.hpp"
#include "lipreach/kernels.hpp"
#include "lipreach/models.hpp"
#include "lipreach/oracle.hpp"

using namespace lipreach;

namespace {

struct Records {
    std::vector<double> sc, ac, lo, up;
    std::vector<int> st, at, rg;
    kernels::RecordView view;

    explicit Records(std::size_t n) {
        std::mt19937_64 r(1);
        std::uniform_real_distribution<double> u(0, 1);
        for (std::size_t i = 0; i < n; ++i) {
            sc.push_back(u(r));
            sc.push_back(u(r));
            ac.push_back(u(r));
            st.push_back(0);
            at.push_back(static_cast<int>(i % 2));
            rg.push_back(-1);
            lo.push_back(0.5 * u(r));
            up.push_back(0.5 + 0.5 * u(r));
        }
        view = {n, 2, 1, sc.data(), ac.data(), st.data(), at.data(), rg.data(), lo.data(), up.data()};
    }
};

template <double (*Scan)(const kernels::RecordView&, const kernels::PairQuery&)>
void scan_lower(benchmark::State& state) {
    Records rec(static_cast<std::size_t>(state.range(0)));
    const double s[] = {0.4, 0.6}, a[] = {0.3};
    kernels::PairQuery q{s, 0, a, 1, -1, 2.0};
    for (auto _ : state) benchmark::DoNotOptimize(Scan(rec.view, q));
    state.SetItemsProcessed(state.iterations() * state.range(0));
}

template <double (*Sweep)(const kernels::CsrMdp&, std::span<const double>, std::span<double>)>
void bellman_sweep(benchmark::State& state) {
    FiniteMdp f = models::random_finite_mdp(3, static_cast<std::size_t>(state.range(0)), 4);
    kernels::CsrMdp m = f.csr();
    std::vector<double> in(f.size(), 0.5), out(f.size());
    for (auto _ : state) benchmark::DoNotOptimize(Sweep(m, in, out));
    state.SetItemsProcessed(state.iterations() * state.range(0));
}

template <double (*Sum)(std::span<const double>, std::span<const std::size_t>, std::span<const std::size_t>,
                        const std::vector<std::vector<double>>&)>
void weighted_box_sum(benchmark::State& state) {
    const auto n = static_cast<std::size_t>(state.range(0));
    std::vector<double> values(n * n, 0.25);
    const std::vector<std::size_t> shape = {n, n}, first = {0, 0};
    const std::vector<std::vector<double>> w(2, std::vector<double>(n, 1.0 / static_cast<double>(n)));
    for (auto _ : state) benchmark::DoNotOptimize(Sum(values, shape, first, w));
    state.SetItemsProcessed(state.iterations() * state.range(0) * state.range(0));
}

}  // namespace

BENCHMARK(scan_lower<kernels::serial::scan_lower>)->Name("scan_lower/serial")->Range(1 << 10, 1 << 18);
BENCHMARK(scan_lower<kernels::parallel::scan_lower>)->Name("scan_lower/parallel")->Range(1 << 10, 1 << 18);
BENCHMARK(bellman_sweep<kernels::serial::bellman_sweep>)->Name("bellman_sweep/serial")->Range(1 << 8, 1 << 14);
BENCHMARK(bellman_sweep<kernels::parallel::bellman_sweep>)->Name("bellman_sweep/parallel")->Range(1 << 8, 1 << 14);
BENCHMARK(weighted_box_sum<kernels::serial::weighted_box_sum>)->Name("weighted_box_sum/serial")->Range(1 << 5, 1 << 10);
BENCHMARK(weighted_box_sum<kernels::parallel::weighted_box_sum>)
    ->Name("weighted_box_sum/parallel")
    ->Range(1 << 5, 1 << 10);

BENCHMARK_MAIN();
