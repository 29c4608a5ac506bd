#include <random>
#include <string>

#include <benchmark/benchmark.h>

#include "hccstage/gbdt.hpp"
#include "hccstage/select.hpp"

namespace {

using namespace hccstage;

struct Data {
    DenseMatrix x;
    std::vector<int> y;
    std::vector<std::string> names;
};

Data make_data(std::size_t rows, std::size_t cols) {
    std::mt19937_64 rng(7);
    std::normal_distribution<double> n01(0.0, 1.0);
    Data d{DenseMatrix(rows, cols), std::vector<int>(rows), {}};
    for (std::size_t r = 0; r < rows; ++r) {
        d.y[r] = static_cast<int>(r % 3);
        for (std::size_t c = 0; c < cols; ++c) d.x(r, c) = n01(rng) + (c < 3 ? d.y[r] : 0);
    }
    for (std::size_t c = 0; c < cols; ++c) d.names.push_back("f" + std::to_string(c));
    return d;
}

void BM_TrainBooster(benchmark::State& state) {
    const auto d = make_data(static_cast<std::size_t>(state.range(0)), 40);
    gbdt::Params p;
    for (auto _ : state) benchmark::DoNotOptimize(gbdt::train_booster(d.x, d.y, p));
}
BENCHMARK(BM_TrainBooster)->Arg(300)->Unit(benchmark::kMillisecond);

void BM_MiScores(benchmark::State& state) {
    const auto d = make_data(static_cast<std::size_t>(state.range(0)), 40);
    for (auto _ : state) benchmark::DoNotOptimize(select::mi_scores(d.x, d.y, d.names));
}
BENCHMARK(BM_MiScores)->Arg(300)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
