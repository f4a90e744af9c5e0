#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "odgi/box.hpp"
#include "odgi/grouping.hpp"
#include "odgi/metrics.hpp"
#include "odgi/pipeline.hpp"
#include "odgi/synth.hpp"
#include "odgi/training.hpp"
#include "odgi/transition.hpp"

using namespace odgi;

namespace {

Box random_box(std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    return {u(rng), u(rng), 0.01 + 0.2 * u(rng), 0.01 + 0.2 * u(rng)};
}

Dataset scenes(int count, double lambda, bool render = false) {
    SceneGenConfig g;
    g.seed = 17;
    g.render = render;
    g.mean_objects = lambda;
    g.clustering = {ClusteringKind::clustered, 2, 0.05};
    return generate(g, static_cast<std::size_t>(count));
}

void BM_Iou(benchmark::State& state) {
    std::mt19937_64 rng(1);
    std::vector<Box> boxes(1024);
    for (Box& b : boxes) b = random_box(rng);
    std::size_t k = 0;
    for (auto _ : state) {
        benchmark::DoNotOptimize(iou(boxes[k & 1023], boxes[(k + 1) & 1023]));
        ++k;
    }
}
BENCHMARK(BM_Iou);

void BM_Nms(benchmark::State& state) {
    std::mt19937_64 rng(2);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<ScoredBox> boxes(static_cast<std::size_t>(state.range(0)));
    for (ScoredBox& b : boxes) b = {random_box(rng), u(rng)};
    for (auto _ : state) benchmark::DoNotOptimize(nms(boxes, 0.5, 10));
    state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_Nms)->RangeMultiplier(4)->Range(16, 1024)->Complexity();

void BM_BuildTargets(benchmark::State& state) {
    const Dataset d = scenes(64, static_cast<double>(state.range(0)));
    const GridSpec grid = resolution_to_grid(512);
    std::size_t k = 0;
    for (auto _ : state) benchmark::DoNotOptimize(build_targets(d.scenes[k++ % d.scenes.size()], grid));
}
BENCHMARK(BM_BuildTargets)->Arg(5)->Arg(20)->Arg(80);

void BM_PipelineOracle(benchmark::State& state) {
    const Dataset d = scenes(64, 10);
    OracleDetector oracle(OracleConfig{});
    const Detector* ds[] = {&oracle, &oracle};
    const PipelineConfig cfg = PipelineConfig::two_stage(512, 256, {0.0, 1.0, 0.5, static_cast<int>(state.range(0))});
    std::size_t k = 0;
    for (auto _ : state) {
        const GroundTruthScene& s = d.scenes[k++ % d.scenes.size()];
        benchmark::DoNotOptimize(run_pipeline(nullptr, &s, ds, cfg));
    }
}
BENCHMARK(BM_PipelineOracle)->Arg(3)->Arg(10);

void BM_PipelineToy(benchmark::State& state) {
    const Dataset d = scenes(8, 10, true);
    ToyPredictor s1(512);
    ToyPredictor s2(256);
    s1.randomize(1, 0.1);
    s2.randomize(2, 0.1);
    const Detector* ds[] = {&s1, &s2};
    const PipelineConfig cfg = PipelineConfig::two_stage(512, 256, {0.0, 1.0, 0.5, 3});
    std::size_t k = 0;
    for (auto _ : state) {
        const std::size_t i = k++ % d.scenes.size();
        benchmark::DoNotOptimize(run_pipeline(&d.images[i], &d.scenes[i], ds, cfg));
    }
}
BENCHMARK(BM_PipelineToy)->Unit(benchmark::kMillisecond);

void BM_AveragePrecision(benchmark::State& state) {
    const Dataset d = scenes(static_cast<int>(state.range(0)), 10);
    OracleConfig oc;
    oc.kind = OracleKind::noisy;
    oc.jitter = 0.02;
    oc.p_spurious = 0.05;
    OracleDetector oracle(oc);
    const Detector* ds[] = {&oracle, &oracle};
    const PipelineConfig cfg = PipelineConfig::two_stage(512, 256, {0.0, 1.0, 0.5, 10});
    std::vector<ImageDetections> dets;
    for (const GroundTruthScene& s : d.scenes)
        dets.push_back({s.image_id, run_pipeline(nullptr, &s, ds, cfg).detections});
    for (auto _ : state) benchmark::DoNotOptimize(average_precision(dets, d.scenes, 0.5));
}
BENCHMARK(BM_AveragePrecision)->Arg(100)->Arg(1000);

}  // namespace
BENCHMARK_MAIN();
