#include "odgi/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>
#include <stdexcept>
#include <unordered_map>

#include <nlohmann/json.hpp>

#include "odgi/parallel.hpp"

namespace odgi {

PRCurve average_precision(std::span<const ImageDetections> detections, std::span<const GroundTruthScene> scenes,
                          double iou_threshold) {
    if (!(iou_threshold > 0.0 && iou_threshold < 1.0)) throw std::invalid_argument("IoU threshold must lie in (0, 1)");

    std::unordered_map<std::string, std::size_t> scene_of;
    std::size_t num_gt = 0;
    for (std::size_t s = 0; s < scenes.size(); ++s) {
        scene_of.emplace(scenes[s].image_id, s);
        num_gt += scenes[s].boxes.size();
    }

    struct Ranked {
        std::size_t scene;
        const ScoredDetection* det;
    };
    std::vector<Ranked> ranked;
    for (const ImageDetections& img : detections) {
        const auto it = scene_of.find(img.image_id);
        if (it == scene_of.end()) throw std::invalid_argument("detections for unknown image " + img.image_id);
        for (const ScoredDetection& d : img.detections) ranked.push_back({it->second, &d});
    }
    std::stable_sort(ranked.begin(), ranked.end(),
                     [](const Ranked& a, const Ranked& b) { return a.det->confidence > b.det->confidence; });

    PRCurve curve;
    curve.num_ground_truth = num_gt;
    if (num_gt == 0) {
        curve.ap = ranked.empty() ? 1.0 : 0.0;
        for (std::size_t k = 0; k < ranked.size(); ++k) curve.points.push_back({0.0, 0.0});
        return curve;
    }

    std::vector<std::vector<bool>> matched(scenes.size());
    for (std::size_t s = 0; s < scenes.size(); ++s) matched[s].assign(scenes[s].boxes.size(), false);

    std::size_t tp = 0;
    for (std::size_t k = 0; k < ranked.size(); ++k) {
        const auto& gt = scenes[ranked[k].scene].boxes;
        auto& used = matched[ranked[k].scene];
        double best = -1.0;
        std::size_t best_idx = gt.size();
        for (std::size_t g = 0; g < gt.size(); ++g) {
            if (used[g]) continue;
            const double v = iou(ranked[k].det->box, gt[g]);
            if (v > best) {
                best = v;
                best_idx = g;
            }
        }
        if (best_idx < gt.size() && best >= iou_threshold) {
            used[best_idx] = true;
            ++tp;
        }
        curve.points.push_back({static_cast<double>(tp) / static_cast<double>(num_gt),
                                static_cast<double>(tp) / static_cast<double>(k + 1)});
    }
    curve.true_positives = tp;

    // Precision envelope, then area under the step function at recall changes.
    std::vector<double> envelope(curve.points.size());
    double running = 0.0;
    for (std::size_t k = curve.points.size(); k-- > 0;) {
        running = std::max(running, curve.points[k].precision);
        envelope[k] = running;
    }
    double ap = 0.0;
    double prev_recall = 0.0;
    for (std::size_t k = 0; k < curve.points.size(); ++k) {
        const double r = curve.points[k].recall;
        if (r != prev_recall) {
            ap += (r - prev_recall) * envelope[k];
            prev_recall = r;
        }
    }
    curve.ap = std::clamp(ap, 0.0, 1.0);
    return curve;
}

double occupancy_rate(const Box& crop, const GroundTruthScene& scene) {
    double total = 0.0;
    for (const Box& b : scene.boxes) {
        const double area = b.area();
        if (!(area > 0.0)) continue;
        total += intersection_area(b, crop) / area;
    }
    return total;
}

int gamma_from_mean(double mean_relevant_crops) {
    const double nearest = std::round(mean_relevant_crops);
    if (std::abs(mean_relevant_crops - nearest) < 1e-9) return static_cast<int>(nearest);
    return static_cast<int>(std::ceil(mean_relevant_crops));
}

RelevantCropStats recommend_gamma(const Dataset& validation, const Detector& first_stage, int resolution_px) {
    if (validation.scenes.empty()) throw std::invalid_argument("empty validation set");
    const GridSpec grid = resolution_to_grid(resolution_px);
    std::vector<int> relevant(validation.scenes.size(), 0);
    parallel_for(validation.scenes.size(), [&](std::size_t k) {
        const GroundTruthScene& scene = validation.scenes[k];
        std::optional<Image> resized;
        const Image* pixels = nullptr;
        if (const Image* img = validation.image(k)) {
            if (img->width == resolution_px && img->height == resolution_px) {
                pixels = img;
            } else {
                resized = resample_region(*img, {0.5, 0.5, 1.0, 1.0}, resolution_px);
                pixels = &*resized;
            }
        }
        StageInput input;
        input.stage = 0;
        input.final_stage = false;
        input.resolution_px = resolution_px;
        input.grid = grid;
        input.pixels = pixels;
        input.scene = &scene;
        const StageOutput out = first_stage.detect(input);
        if (!(out.grid() == grid)) throw std::runtime_error("grid contract violated");
        const TransitionResult t = extract_crops(out, TransitionConfig::training());
        for (const CropRegion& c : t.crops)
            if (occupancy_rate(c.region, scene) > 0.0) ++relevant[k];
    });
    RelevantCropStats stats;
    stats.mean_relevant = std::accumulate(relevant.begin(), relevant.end(), 0.0) / static_cast<double>(relevant.size());
    stats.gamma = gamma_from_mean(stats.mean_relevant);
    return stats;
}

DatasetStats dataset_stats(std::span<const GroundTruthScene> scenes) {
    DatasetStats stats;
    if (scenes.empty()) return stats;
    const GridSpec grid{16, 16};
    double size_sum = 0.0;
    std::size_t boxes = 0;
    double empty_sum = 0.0;
    for (const GroundTruthScene& s : scenes) {
        for (const Box& b : s.boxes) size_sum += b.area();
        boxes += s.boxes.size();
        const Assignment a = assign(s, grid);
        int empty = 0;
        for (int i = 0; i < grid.rows; ++i)
            for (int j = 0; j < grid.cols; ++j) empty += a.occupied(i, j) ? 0 : 1;
        empty_sum += static_cast<double>(empty) / grid.cells();
    }
    stats.avg_object_size_fraction = boxes ? size_sum / static_cast<double>(boxes) : 0.0;
    stats.empty_cell_ratio_16 = empty_sum / static_cast<double>(scenes.size());
    return stats;
}

EvalResult evaluate(const Dataset& data, std::span<const Detector* const> detectors, const PipelineConfig& cfg,
                    std::span<const double> iou_thresholds) {
    cfg.validate();
    EvalResult result;
    result.iou_thresholds.assign(iou_thresholds.begin(), iou_thresholds.end());
    result.max_boxes = box_budget(cfg);
    result.pixels = pixel_budget(cfg);
    result.detections.resize(data.scenes.size());
    std::vector<CostReport> costs(data.scenes.size());
    std::vector<std::size_t> candidates(data.scenes.size(), 0);
    parallel_for(data.scenes.size(), [&](std::size_t k) {
        PipelineResult r = run_pipeline(data.image(k), &data.scenes[k], detectors, cfg);
        result.detections[k] = {data.scenes[k].image_id, std::move(r.detections)};
        costs[k] = std::move(r.cost);
        candidates[k] = r.candidates_before_nms;
    });
    for (double t : iou_thresholds) result.ap.push_back(average_precision(result.detections, data.scenes, t).ap);
    if (!data.scenes.empty()) {
        const double n = static_cast<double>(data.scenes.size());
        for (const CostReport& c : costs) {
            result.mean_boxes_evaluated += static_cast<double>(c.boxes_evaluated) / n;
            result.mean_pixels_processed += static_cast<double>(c.pixels_processed) / n;
            if (c.per_stage.size() > 1) result.mean_crops += static_cast<double>(c.per_stage[1].inputs) / n;
        }
        result.max_candidates_before_nms = *std::max_element(candidates.begin(), candidates.end());
    }
    return result;
}

SweepGrid SweepGrid::standard(std::vector<int> gammas) {
    return {{0.0, 0.1, 0.2, 0.3, 0.4}, {0.6, 0.7, 0.8, 0.9, 1.0}, {0.25, 0.5, 0.75}, std::move(gammas)};
}

SweepResult hyperparameter_sweep(const Dataset& validation, std::span<const Detector* const> detectors,
                                 const PipelineConfig& base, const SweepGrid& grid) {
    if (base.stages.size() < 2) throw std::invalid_argument("sweep needs a pipeline with at least two stages");
    std::vector<TransitionConfig> combos;
    for (int gamma : grid.gamma)
        for (double lo : grid.tau_low)
            for (double hi : grid.tau_high)
                for (double t_nms : grid.tau_nms)
                    if (lo <= hi) combos.push_back({lo, hi, t_nms, gamma});

    SweepResult result;
    result.rows.resize(combos.size());
    const double thresholds[] = {0.5, 0.75};
    for (std::size_t c = 0; c < combos.size(); ++c) {
        PipelineConfig cfg = base;
        cfg.stages.front().transition = combos[c];
        const EvalResult eval = evaluate(validation, detectors, cfg, thresholds);
        result.rows[c] = {combos[c], eval.ap[0], eval.ap[1], eval.max_boxes, eval.pixels};
    }
    for (std::size_t c = 1; c < result.rows.size(); ++c) {
        const SweepRow& row = result.rows[c];
        const SweepRow& best = result.rows[result.best];
        if (row.map50 > best.map50 || (row.map50 == best.map50 && row.max_boxes < best.max_boxes)) result.best = c;
    }
    if (result.rows.empty()) throw std::invalid_argument("sweep grid has no valid combination");
    return result;
}

void write_sweep_csv(std::ostream& out, const SweepResult& result) {
    out << "tau_low,tau_high,tau_nms,gamma,map50,map75,max_boxes,pixels\n";
    const auto old_precision = out.precision(10);
    for (const SweepRow& r : result.rows) {
        out << r.transition.tau_low << ',' << r.transition.tau_high << ',' << r.transition.tau_nms << ','
            << r.transition.gamma << ',' << r.map50 << ',' << r.map75 << ',' << r.max_boxes << ',' << r.pixels << '\n';
    }
    out.precision(old_precision);
}

void write_detections_jsonl(std::ostream& out, std::span<const ImageDetections> detections) {
    for (const ImageDetections& img : detections) {
        for (const ScoredDetection& d : img.detections) {
            const nlohmann::json j{{"image_id", img.image_id}, {"cx", d.box.cx},   {"cy", d.box.cy},
                                   {"w", d.box.w},           {"h", d.box.h},     {"confidence", d.confidence},
                                   {"stage", d.stage}};
            out << j.dump() << '\n';
        }
    }
}

namespace {

nlohmann::json cost_json(const CostReport& cost) {
    nlohmann::json stages = nlohmann::json::array();
    for (const StageCost& s : cost.per_stage)
        stages.push_back({{"grid_cells", s.grid_cells}, {"inputs", s.inputs}, {"pixels", s.pixels}});
    return {{"max_boxes", cost.max_boxes}, {"pixels", cost.pixels}, {"per_stage", std::move(stages)}};
}

}  // namespace

std::string cost_report_json(const CostReport& cost) { return cost_json(cost).dump(2); }

std::string eval_report_json(const EvalResult& result) {
    nlohmann::json ap = nlohmann::json::array();
    for (std::size_t k = 0; k < result.ap.size(); ++k)
        ap.push_back({{"iou", result.iou_thresholds[k]}, {"ap", result.ap[k]}});
    std::size_t count = 0;
    for (const ImageDetections& d : result.detections) count += d.detections.size();
    const nlohmann::json j{{"images", result.detections.size()},
                           {"detections", count},
                           {"map", std::move(ap)},
                           {"max_boxes", result.max_boxes},
                           {"pixels", result.pixels},
                           {"mean_boxes_evaluated", result.mean_boxes_evaluated},
                           {"mean_pixels_processed", result.mean_pixels_processed},
                           {"mean_crops", result.mean_crops},
                           {"max_candidates_before_nms", result.max_candidates_before_nms}};
    return j.dump(2);
}

void write_ap_csv(std::ostream& out, const EvalResult& result) {
    out << "iou,ap\n";
    const auto old_precision = out.precision(10);
    for (std::size_t k = 0; k < result.ap.size(); ++k) out << result.iou_thresholds[k] << ',' << result.ap[k] << '\n';
    out.precision(old_precision);
}

}  // namespace odgi
