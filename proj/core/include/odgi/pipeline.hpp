#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "odgi/grouping.hpp"
#include "odgi/image.hpp"
#include "odgi/losses.hpp"
#include "odgi/transition.hpp"

namespace odgi {

/// Everything a stage detector may look at for one forward pass.
struct StageInput {
    int stage = 0;  // 0-based
    bool final_stage = true;
    int resolution_px = 0;
    GridSpec grid{};
    Box region{0.5, 0.5, 1.0, 1.0};               // image frame
    const Image* pixels = nullptr;                // region resampled at resolution_px, if available
    const GroundTruthScene* scene = nullptr;      // full-image annotations, for oracle detectors
};

/// One stage of the cascade. Output boxes are in the frame of input.region and
/// the output grid must equal input.grid.
class Detector {
public:
    virtual ~Detector() = default;
    virtual StageOutput detect(const StageInput& input) const = 0;
};

struct StageConfig {
    int resolution_px = 512;
    std::optional<TransitionConfig> transition;  // absent on the last stage
};

struct PipelineConfig {
    std::vector<StageConfig> stages;
    double final_nms_iou = 0.5;
    Ablation ablation{};

    /// Throws std::invalid_argument on an empty stage list, unsupported
    /// resolutions, or a missing/extra transition config.
    void validate() const;

    static PipelineConfig single_stage(int resolution_px);
    static PipelineConfig two_stage(int res1, int res2, const TransitionConfig& transition);
};

struct StageCost {
    int grid_cells = 0;     // cells per input
    int inputs = 0;         // crops processed (1 for the first stage)
    std::int64_t pixels = 0;
};

struct CostReport {
    std::int64_t max_boxes = 0;         // static budget
    std::int64_t pixels = 0;            // static budget
    std::int64_t boxes_evaluated = 0;   // actual
    std::int64_t pixels_processed = 0;  // actual
    std::vector<StageCost> per_stage;
};

struct PipelineResult {
    std::vector<ScoredDetection> detections;  // after the final NMS
    std::size_t candidates_before_nms = 0;
    CostReport cost;
};

std::int64_t box_budget(const PipelineConfig& cfg);
std::int64_t pixel_budget(const PipelineConfig& cfg);

/// Run the cascade on one image. `image` may be null when every detector works
/// from annotations only; `scene` may be null when none does. Throws
/// std::runtime_error("grid contract violated") on a detector grid mismatch.
PipelineResult run_pipeline(const Image* image, const GroundTruthScene* scene,
                            std::span<const Detector* const> detectors, const PipelineConfig& cfg);

}  // namespace odgi
