#include <cmath>
#include <random>

#include <benchmark/benchmark.h>

#include "hccstage/radiomics.hpp"
#include "hccstage/texture.hpp"
#include "hccstage/volumes.hpp"

namespace {

using namespace hccstage;

// Noisy ball of the given radius centred in a (2r+4)^3 grid.
std::pair<volumes::Volume3D, volumes::Mask> ball(int r) {
    const int n = 2 * r + 4;
    const volumes::Dims d{n, n, n};
    std::mt19937_64 rng(42);
    std::normal_distribution<double> noise(100.0, 15.0);
    std::vector<double> v(d.count());
    std::vector<std::uint8_t> m(d.count());
    const double c = (n - 1) / 2.0;
    for (int z = 0; z < n; ++z)
        for (int y = 0; y < n; ++y)
            for (int x = 0; x < n; ++x) {
                const auto i = d.index(x, y, z);
                v[i] = noise(rng);
                m[i] = std::hypot(x - c, y - c, z - c) <= r ? 1 : 0;
            }
    return {volumes::Volume3D(d, {}, std::move(v)), volumes::Mask(d, std::move(m))};
}

void BM_Glcm(benchmark::State& state) {
    auto [vol, mask] = ball(static_cast<int>(state.range(0)));
    const auto roi = volumes::discretize(vol, mask, 32);
    for (auto _ : state) benchmark::DoNotOptimize(radiomics::glcm_counts(roi));
    state.SetItemsProcessed(state.iterations() * static_cast<long>(roi.voxel_count()));
}
BENCHMARK(BM_Glcm)->Arg(6)->Arg(12);

void BM_Glszm(benchmark::State& state) {
    auto [vol, mask] = ball(static_cast<int>(state.range(0)));
    const auto roi = volumes::discretize(vol, mask, 32);
    for (auto _ : state) benchmark::DoNotOptimize(radiomics::glszm_counts(roi));
    state.SetItemsProcessed(state.iterations() * static_cast<long>(roi.voxel_count()));
}
BENCHMARK(BM_Glszm)->Arg(6)->Arg(12);

void BM_ExtractFeatureVector(benchmark::State& state) {
    auto [vol, mask] = ball(static_cast<int>(state.range(0)));
    for (auto _ : state) benchmark::DoNotOptimize(radiomics::extract_feature_vector(vol, mask, {}));
}
BENCHMARK(BM_ExtractFeatureVector)->Arg(6)->Arg(12)->Unit(benchmark::kMillisecond);

}  // namespace
