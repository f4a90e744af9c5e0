#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "odgi/dataset.hpp"
#include "odgi/pipeline.hpp"

namespace odgi {

struct ImageDetections {
    std::string image_id;
    std::vector<ScoredDetection> detections;
};

struct PRPoint {
    double recall = 0.0;
    double precision = 0.0;
};

struct PRCurve {
    std::vector<PRPoint> points;  // one per detection, in confidence order
    double ap = 0.0;
    std::size_t true_positives = 0;
    std::size_t num_ground_truth = 0;
};

/// Single-class average precision with all-point interpolation.
///
/// Detections from all images are ranked by confidence (descending, ties in
/// input order). Each is matched to the not-yet-matched ground-truth box of
/// its image with the highest IoU (ties to the lower index); it is a true
/// positive when that IoU reaches `iou_threshold`. AP is the area under the
/// precision envelope. With no ground truth, AP is 1 when there are also no
/// detections and 0 otherwise.
///
/// Throws std::invalid_argument for thresholds outside (0, 1) or detections
/// whose image_id has no scene.
PRCurve average_precision(std::span<const ImageDetections> detections, std::span<const GroundTruthScene> scenes,
                          double iou_threshold);

/// Sum over ground-truth boxes of the fraction of each box's area inside the crop.
double occupancy_rate(const Box& crop, const GroundTruthScene& scene);

struct RelevantCropStats {
    double mean_relevant = 0.0;
    int gamma = 0;
};

/// ceil(mean), treating values within 1e-9 of an integer as that integer.
int gamma_from_mean(double mean_relevant_crops);

/// Runs the first stage with the training-mode transition on every scene and
/// counts crops with non-zero occupancy. Throws on an empty dataset.
RelevantCropStats recommend_gamma(const Dataset& validation, const Detector& first_stage, int resolution_px);

struct DatasetStats {
    double avg_object_size_fraction = 0.0;  // mean box area over all boxes
    double empty_cell_ratio_16 = 0.0;       // mean over scenes, 16x16 grid
};

DatasetStats dataset_stats(std::span<const GroundTruthScene> scenes);

struct EvalResult {
    std::vector<double> iou_thresholds;
    std::vector<double> ap;                       // one per threshold
    std::vector<ImageDetections> detections;      // per scene
    std::int64_t max_boxes = 0;                   // static budget
    std::int64_t pixels = 0;                      // static budget
    double mean_boxes_evaluated = 0.0;
    double mean_pixels_processed = 0.0;
    double mean_crops = 0.0;
    std::size_t max_candidates_before_nms = 0;
};

/// Run the pipeline on every scene (in parallel) and score the detections.
EvalResult evaluate(const Dataset& data, std::span<const Detector* const> detectors, const PipelineConfig& cfg,
                    std::span<const double> iou_thresholds);

struct SweepGrid {
    std::vector<double> tau_low;
    std::vector<double> tau_high;
    std::vector<double> tau_nms;
    std::vector<int> gamma;

    /// tau_low {0,.1,.2,.3,.4}, tau_high {.6,.7,.8,.9,1}, tau_nms {.25,.5,.75}.
    static SweepGrid standard(std::vector<int> gammas);
    std::size_t size() const { return tau_low.size() * tau_high.size() * tau_nms.size() * gamma.size(); }
};

struct SweepRow {
    TransitionConfig transition;
    double map50 = 0.0;
    double map75 = 0.0;
    std::int64_t max_boxes = 0;
    std::int64_t pixels = 0;
};

struct SweepResult {
    std::vector<SweepRow> rows;
    std::size_t best = 0;

    const SweepRow& best_row() const { return rows.at(best); }
};

/// Evaluates every (tau_low, tau_high, tau_nms, gamma) combination on the
/// first transition of `base` with fixed detectors. Combinations with
/// tau_low > tau_high are skipped. Best = highest mAP@0.5, ties to the lowest
/// box budget, then to enumeration order.
SweepResult hyperparameter_sweep(const Dataset& validation, std::span<const Detector* const> detectors,
                                 const PipelineConfig& base, const SweepGrid& grid);

/// Columns: tau_low,tau_high,tau_nms,gamma,map50,map75,max_boxes,pixels
void write_sweep_csv(std::ostream& out, const SweepResult& result);

/// One line per detection: {"image_id", "cx", "cy", "w", "h", "confidence", "stage"}.
void write_detections_jsonl(std::ostream& out, std::span<const ImageDetections> detections);

/// mAP per threshold plus static and measured cost, as a JSON object.
std::string eval_report_json(const EvalResult& result);

/// {"max_boxes", "pixels", "per_stage": [{"grid_cells", "inputs", "pixels"}]}
std::string cost_report_json(const CostReport& cost);

/// Columns: iou,ap
void write_ap_csv(std::ostream& out, const EvalResult& result);

}  // namespace odgi
