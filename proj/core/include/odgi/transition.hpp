#pragma once

#include <cstddef>
#include <limits>
#include <span>
#include <vector>

#include "odgi/box.hpp"
#include "odgi/losses.hpp"

namespace odgi {

struct TransitionConfig {
    double tau_low = 0.0;
    double tau_high = 1.0;
    double tau_nms = 1.0;
    int gamma = 10;

    /// Throws std::invalid_argument when thresholds are out of range,
    /// tau_low > tau_high, or gamma < 1.
    void validate() const;

    /// Settings used while training: no filtering, no suppression, ten crops.
    static TransitionConfig training() { return {0.0, 1.0, 1.0, 10}; }

    friend bool operator==(const TransitionConfig&, const TransitionConfig&) = default;
};

enum class FilterDecision { discard, early_exit, refine };

enum class AblationKind { full, no_groups, fixed_offsets, no_offsets };

/// Variants of the stage transition used for ablation studies.
struct Ablation {
    AblationKind kind = AblationKind::full;
    double fixed_offset = 2.0 / 3.0;  // only for fixed_offsets

    friend bool operator==(const Ablation&, const Ablation&) = default;
};

struct CropRegion {
    Box region{};  // image frame, clipped to the unit square
    double source_confidence = 0.0;
    bool source_group = false;
};

struct ScoredDetection {
    Box box{};  // original image frame
    double confidence = 0.0;
    int stage = 0;
};

struct ScoredBox {
    Box box{};
    double confidence = 0.0;
};

/// Group flag binarized at 0.5 on the logistic output.
bool group_flag(const CellPrediction& pred);

/// (i) c <= tau_low discards; (ii) c > tau_high with g = 0 exits early;
/// (iii) everything else is refined.
FilterDecision classify(double confidence, bool group, const TransitionConfig& cfg);
FilterDecision classify(const CellPrediction& pred, const TransitionConfig& cfg);

inline constexpr std::size_t kNoLimit = std::numeric_limits<std::size_t>::max();

/// Greedy NMS: visit by confidence (descending, ties by input index), keep the
/// current box and drop later boxes with IoU > tau_nms against it. Returns the
/// kept input indices in keep order, at most `limit` of them.
std::vector<std::size_t> nms(std::span<const ScoredBox> candidates, double tau_nms, std::size_t limit = kNoLimit);

struct TransitionResult {
    std::vector<CropRegion> crops;
    std::vector<ScoredDetection> early_exits;
};

/// Filter -> NMS(tau_nms, gamma) -> offset rescaling -> clip. Boxes of `out`
/// must already be in the image frame. Early exits are clipped to the image.
TransitionResult extract_crops(const StageOutput& out, const TransitionConfig& cfg, const Ablation& ablation = {},
                               int stage = 0);

/// Same as extract_crops over predictions pooled from several stage outputs.
TransitionResult extract_crops(std::span<const CellPrediction> predictions, const TransitionConfig& cfg,
                               const Ablation& ablation = {}, int stage = 0);

/// Map a box from a crop's frame to the image frame. Throws on zero-area crops.
Box map_to_parent(const Box& b, const Box& crop);
/// Inverse of map_to_parent.
Box map_to_crop(const Box& b, const Box& crop);

}  // namespace odgi
