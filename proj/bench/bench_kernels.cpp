// Serial reference kernels against their OpenMP counterparts. Thread count
// follows OMP_NUM_THREADS / ODISPHERE_THREADS.

#include <random>

#include <benchmark/benchmark.h>

#include "odisphere/multiscale.hpp"
#include "odisphere/parallel.hpp"
#include "odisphere/patching.hpp"
#include "odisphere/reference.hpp"
#include "odisphere/saliency.hpp"

namespace {

using namespace odisphere;

Raster random_raster(std::size_t rows, std::size_t cols, std::size_t ch, unsigned seed)
{
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    Raster r(rows, cols, ch);
    for (double& v : r.values()) v = u(rng);
    return r;
}

const Raster& erp_image()
{
    static const Raster img = random_raster(200, 400, 3, 1);
    return img;
}

std::vector<Patch> patches()
{
    std::vector<Patch> out;
    for (const Direction& d : generate_view_directions(deg_to_rad(45.0)).directions)
        out.push_back(extract_patch(erp_image(), ViewFrustum::square(d, deg_to_rad(100.0), 96)));
    return out;
}

void BM_extract_parallel(benchmark::State& s)
{
    const ViewFrustum f = ViewFrustum::square(Direction::make(0.3, 0.2), deg_to_rad(110.0), 256);
    for (auto _ : s) benchmark::DoNotOptimize(extract_patch(erp_image(), f, Sampler::bilinear));
}

void BM_extract_serial(benchmark::State& s)
{
    const ViewFrustum f = ViewFrustum::square(Direction::make(0.3, 0.2), deg_to_rad(110.0), 256);
    for (auto _ : s) benchmark::DoNotOptimize(reference::extract_patch(erp_image(), f, Sampler::bilinear));
}

void BM_reproject_parallel(benchmark::State& s)
{
    const auto p = patches();
    for (auto _ : s) benchmark::DoNotOptimize(reproject_average(p, {100, 200}));
}

void BM_reproject_serial(benchmark::State& s)
{
    const auto p = patches();
    for (auto _ : s) benchmark::DoNotOptimize(reference::reproject_average(p, {100, 200}));
}

void BM_blur_parallel(benchmark::State& s)
{
    const Raster img = random_raster(256, 256, 1, 2);
    for (auto _ : s) benchmark::DoNotOptimize(gaussian_blur(img, 4.0));
}

void BM_blur_serial(benchmark::State& s)
{
    const Raster img = random_raster(256, 256, 1, 2);
    for (auto _ : s) benchmark::DoNotOptimize(reference::gaussian_blur(img, 4.0));
}

ConvLayer bench_layer()
{
    return AttentionParams::make(Architecture::deep_features, 3, 8, 3, 7).layers[1];
}

void BM_conv_parallel(benchmark::State& s)
{
    const Raster img = random_raster(128, 128, 8, 3);
    const ConvLayer layer = bench_layer();
    for (auto _ : s) benchmark::DoNotOptimize(conv2d(img, layer));
}

void BM_conv_serial(benchmark::State& s)
{
    const Raster img = random_raster(128, 128, 8, 3);
    const ConvLayer layer = bench_layer();
    for (auto _ : s) benchmark::DoNotOptimize(reference::conv2d(img, layer));
}

}  // namespace

BENCHMARK(BM_extract_parallel)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_extract_serial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_reproject_parallel)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_reproject_serial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_blur_parallel)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_blur_serial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_conv_parallel)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_conv_serial)->Unit(benchmark::kMillisecond);

int main(int argc, char** argv)
{
    odisphere::set_thread_count(odisphere::resolve_thread_count(std::nullopt));
    benchmark::Initialize(&argc, argv);
    benchmark::RunSpecifiedBenchmarks();
    benchmark::Shutdown();
    return 0;
}
