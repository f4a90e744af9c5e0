#pragma once

#include <array>
#include <vector>

#include "odgi/box.hpp"
#include "odgi/grouping.hpp"

namespace odgi {

double logistic(double z);
/// log(1 + exp(z)) without overflow.
double softplus(double z);

/// Offsets are logistic outputs mapped into (kMinOffset, 1].
double offset_from_logit(double z);
/// Inverse of offset_from_logit, saturated to |z| <= kLogitLimit.
double offset_logit_for(double offset);
/// Logit with logistic(z) == p, saturated to |z| <= kLogitLimit.
double logit_for(double p);

/// Saturation used when converting exact 0/1 values to logits. At this
/// magnitude logistic() and offset_from_logit() round to exactly 0 or 1.
inline constexpr double kLogitLimit = 40.0;

struct CellPrediction {
    Box box{};                 // decoded, image frame of the stage input
    double confidence = 0.0;   // in [0, 1]
    double group_logit = 0.0;
    std::array<double, 2> offset_logits{0.0, 0.0};

    double group_probability() const { return logistic(group_logit); }
    OffsetPair offsets() const { return {offset_from_logit(offset_logits[0]), offset_from_logit(offset_logits[1])}; }
};

class StageOutput {
public:
    StageOutput() = default;
    explicit StageOutput(GridSpec grid) : grid_(grid), cells_(static_cast<std::size_t>(grid.cells())) {}

    GridSpec grid() const { return grid_; }
    CellPrediction& at(int i, int j) { return cells_[static_cast<std::size_t>(i) * grid_.cols + j]; }
    const CellPrediction& at(int i, int j) const { return cells_[static_cast<std::size_t>(i) * grid_.cols + j]; }
    std::vector<CellPrediction>& cells() { return cells_; }
    const std::vector<CellPrediction>& cells() const { return cells_; }

private:
    GridSpec grid_{};
    std::vector<CellPrediction> cells_;
};

/// Gradient of a loss w.r.t. one cell's outputs: the decoded box coordinates
/// (cx, cy, w, h), the confidence value, the group logit and the offset logits.
struct CellGradient {
    std::array<double, 4> box{0.0, 0.0, 0.0, 0.0};
    double confidence = 0.0;
    double group_logit = 0.0;
    std::array<double, 2> offset_logits{0.0, 0.0};
};

class StageGradient {
public:
    StageGradient() = default;
    explicit StageGradient(GridSpec grid) : grid_(grid), cells_(static_cast<std::size_t>(grid.cells())) {}

    GridSpec grid() const { return grid_; }
    CellGradient& at(int i, int j) { return cells_[static_cast<std::size_t>(i) * grid_.cols + j]; }
    const CellGradient& at(int i, int j) const { return cells_[static_cast<std::size_t>(i) * grid_.cols + j]; }
    std::vector<CellGradient>& cells() { return cells_; }
    const std::vector<CellGradient>& cells() const { return cells_; }

private:
    GridSpec grid_{};
    std::vector<CellGradient> cells_;
};

struct LossWeights {
    double conf = 5.0;
    double noobj = 1.0;
};

struct LossBreakdown {
    double groups = 0.0;
    double coords = 0.0;
    double offsets = 0.0;
    double total = 0.0;
};

enum class StageRole { intermediate, final };

/// Occupancy-masked binary cross-entropy on the group flags. Gradients, when
/// requested, are accumulated (+=) into `grad`.
double group_loss(const StageOutput& out, const TargetGrid& targets, StageGradient* grad = nullptr);

/// IoU of each cell's prediction with its target (0 for empty cells). These are
/// the confidence targets; callers that need them frozen pass them back in.
std::vector<double> confidence_targets(const StageOutput& out, const TargetGrid& targets);

/// Squared error on box coordinates and confidence for occupied cells plus the
/// no-object penalty on empty cells. The confidence target is a constant.
double coords_loss(const StageOutput& out, const TargetGrid& targets, const LossWeights& weights = {},
                   StageGradient* grad = nullptr, const std::vector<double>* frozen_confidence_targets = nullptr);

/// Occupancy-masked squared error between predicted and target offsets.
double offsets_loss(const StageOutput& out, const TargetGrid& targets, StageGradient* grad = nullptr);

struct LossOptions {
    LossWeights weights{};
    StageRole role = StageRole::intermediate;
    bool include_groups = true;
    const std::vector<double>* frozen_confidence_targets = nullptr;
};

/// Sum of the three terms. The final stage only carries the coordinates term.
LossBreakdown total_loss(const StageOutput& out, const TargetGrid& targets, const LossOptions& options = {},
                         StageGradient* grad = nullptr);

/// Recompute every occupied cell's offset targets against the current prediction.
void refresh_offset_targets(TargetGrid& targets, const StageOutput& out, double margin = kDefaultOffsetMargin);

}  // namespace odgi
