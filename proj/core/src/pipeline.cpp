#include "odgi/pipeline.hpp"

#include <stdexcept>

namespace odgi {

namespace {

constexpr Box kWholeImage{0.5, 0.5, 1.0, 1.0};

std::int64_t cells_at(int resolution_px) { return resolution_to_grid(resolution_px).cells(); }

}  // namespace

void PipelineConfig::validate() const {
    if (stages.empty()) throw std::invalid_argument("pipeline needs at least one stage");
    for (std::size_t s = 0; s < stages.size(); ++s) {
        resolution_to_grid(stages[s].resolution_px);
        const bool last = s + 1 == stages.size();
        if (last && stages[s].transition) throw std::invalid_argument("last stage takes no transition config");
        if (!last && !stages[s].transition) throw std::invalid_argument("intermediate stage needs a transition config");
        if (!last) stages[s].transition->validate();
    }
    if (final_nms_iou < 0.0 || final_nms_iou > 1.0) throw std::invalid_argument("final NMS IoU must lie in [0, 1]");
}

PipelineConfig PipelineConfig::single_stage(int resolution_px) {
    PipelineConfig cfg;
    cfg.stages.push_back({resolution_px, std::nullopt});
    return cfg;
}

PipelineConfig PipelineConfig::two_stage(int res1, int res2, const TransitionConfig& transition) {
    PipelineConfig cfg;
    cfg.stages.push_back({res1, transition});
    cfg.stages.push_back({res2, std::nullopt});
    return cfg;
}

std::int64_t box_budget(const PipelineConfig& cfg) {
    cfg.validate();
    std::int64_t total = cells_at(cfg.stages.front().resolution_px);
    for (std::size_t s = 1; s < cfg.stages.size(); ++s)
        total += static_cast<std::int64_t>(cfg.stages[s - 1].transition->gamma) * cells_at(cfg.stages[s].resolution_px);
    return total;
}

std::int64_t pixel_budget(const PipelineConfig& cfg) {
    cfg.validate();
    auto sq = [](std::int64_t r) { return r * r; };
    std::int64_t total = sq(cfg.stages.front().resolution_px);
    for (std::size_t s = 1; s < cfg.stages.size(); ++s)
        total += static_cast<std::int64_t>(cfg.stages[s - 1].transition->gamma) * sq(cfg.stages[s].resolution_px);
    return total;
}

PipelineResult run_pipeline(const Image* image, const GroundTruthScene* scene,
                            std::span<const Detector* const> detectors, const PipelineConfig& cfg) {
    cfg.validate();
    if (detectors.size() != cfg.stages.size()) throw std::invalid_argument("one detector per stage is required");

    PipelineResult result;
    result.cost.max_boxes = box_budget(cfg);
    result.cost.pixels = pixel_budget(cfg);

    std::vector<ScoredDetection> pooled;
    std::vector<Box> regions{kWholeImage};
    const std::size_t num_stages = cfg.stages.size();

    for (std::size_t s = 0; s < num_stages; ++s) {
        const StageConfig& stage = cfg.stages[s];
        const bool final_stage = s + 1 == num_stages;
        const GridSpec grid = resolution_to_grid(stage.resolution_px);

        StageCost cost;
        cost.grid_cells = grid.cells();
        std::vector<CellPrediction> predictions;
        for (const Box& region : regions) {
            std::optional<Image> resampled;
            const Image* pixels = nullptr;
            if (image != nullptr) {
                const bool passthrough = region == kWholeImage && image->width == stage.resolution_px &&
                                         image->height == stage.resolution_px;
                if (passthrough) {
                    pixels = image;
                } else {
                    resampled = resample_region(*image, region, stage.resolution_px);
                    pixels = &*resampled;
                }
            }
            StageInput input;
            input.stage = static_cast<int>(s);
            input.final_stage = final_stage;
            input.resolution_px = stage.resolution_px;
            input.grid = grid;
            input.region = region;
            input.pixels = pixels;
            input.scene = scene;

            StageOutput out = detectors[s]->detect(input);
            if (!(out.grid() == grid)) throw std::runtime_error("grid contract violated");
            for (CellPrediction p : out.cells()) {
                p.box = clip_to(map_to_parent(p.box, region), region);
                predictions.push_back(p);
            }
            cost.inputs += 1;
            cost.pixels += static_cast<std::int64_t>(stage.resolution_px) * stage.resolution_px;
        }
        result.cost.boxes_evaluated += static_cast<std::int64_t>(cost.grid_cells) * cost.inputs;
        result.cost.pixels_processed += cost.pixels;
        result.cost.per_stage.push_back(cost);

        if (final_stage) {
            for (const CellPrediction& p : predictions) {
                if (!(p.confidence > 0.0)) continue;
                pooled.push_back({p.box, p.confidence, static_cast<int>(s)});
            }
            break;
        }
        TransitionResult transition =
            extract_crops(std::span<const CellPrediction>(predictions), *stage.transition, cfg.ablation,
                          static_cast<int>(s));
        pooled.insert(pooled.end(), transition.early_exits.begin(), transition.early_exits.end());
        regions.clear();
        for (const CropRegion& crop : transition.crops) regions.push_back(crop.region);
        if (regions.empty()) {
            // Nothing to refine; later stages process no input.
            for (std::size_t rest = s + 1; rest < num_stages; ++rest) {
                StageCost idle;
                idle.grid_cells = resolution_to_grid(cfg.stages[rest].resolution_px).cells();
                result.cost.per_stage.push_back(idle);
            }
            break;
        }
    }

    result.candidates_before_nms = pooled.size();
    std::vector<ScoredBox> scored;
    scored.reserve(pooled.size());
    for (const ScoredDetection& d : pooled) scored.push_back({d.box, d.confidence});
    for (std::size_t k : nms(scored, cfg.final_nms_iou)) result.detections.push_back(pooled[k]);
    return result;
}

}  // namespace odgi
