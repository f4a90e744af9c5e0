#include "odgi/losses.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace odgi {

double logistic(double z) {
    if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
    const double e = std::exp(z);
    return e / (1.0 + e);
}

double softplus(double z) { return z > 0.0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z)); }

// Written as 1 - (1-eps)*s(-z) so that saturated logits give exactly 1.
double offset_from_logit(double z) { return 1.0 - (1.0 - kMinOffset) * logistic(-z); }

double logit_for(double p) {
    if (p <= 0.0) return -kLogitLimit;
    if (p >= 1.0) return kLogitLimit;
    return std::clamp(std::log(p) - std::log1p(-p), -kLogitLimit, kLogitLimit);
}

double offset_logit_for(double offset) { return logit_for((offset - kMinOffset) / (1.0 - kMinOffset)); }

namespace {

void check_grids(const StageOutput& out, const TargetGrid& targets, const StageGradient* grad) {
    if (!(out.grid() == targets.grid())) throw std::invalid_argument("prediction and target grids differ");
    if (grad != nullptr && !(grad->grid() == out.grid()))
        throw std::invalid_argument("gradient grid differs from prediction grid");
}

}  // namespace

double group_loss(const StageOutput& out, const TargetGrid& targets, StageGradient* grad) {
    check_grids(out, targets, grad);
    double loss = 0.0;
    const auto& preds = out.cells();
    const auto& tgts = targets.cells();
    for (std::size_t k = 0; k < preds.size(); ++k) {
        if (!tgts[k].occupied) continue;
        const double z = preds[k].group_logit;
        const double label = tgts[k].group ? 1.0 : 0.0;
        // -[y log s(z) + (1-y) log(1-s(z))] = softplus(z) - y z
        loss += softplus(z) - label * z;
        if (grad) grad->cells()[k].group_logit += logistic(z) - label;
    }
    return loss;
}

std::vector<double> confidence_targets(const StageOutput& out, const TargetGrid& targets) {
    check_grids(out, targets, nullptr);
    std::vector<double> c(out.cells().size(), 0.0);
    for (std::size_t k = 0; k < c.size(); ++k)
        if (targets.cells()[k].occupied) c[k] = iou(out.cells()[k].box, targets.cells()[k].target_box);
    return c;
}

double coords_loss(const StageOutput& out, const TargetGrid& targets, const LossWeights& weights,
                   StageGradient* grad, const std::vector<double>* frozen_confidence_targets) {
    check_grids(out, targets, grad);
    const auto& preds = out.cells();
    const auto& tgts = targets.cells();
    if (frozen_confidence_targets && frozen_confidence_targets->size() != preds.size())
        throw std::invalid_argument("confidence target count differs from cell count");
    double occupied_sum = 0.0;
    double empty_sum = 0.0;
    for (std::size_t k = 0; k < preds.size(); ++k) {
        const CellPrediction& p = preds[k];
        if (!tgts[k].occupied) {
            empty_sum += p.confidence * p.confidence;
            if (grad) grad->cells()[k].confidence += 2.0 * weights.noobj * p.confidence;
            continue;
        }
        const Box& t = tgts[k].target_box;
        const std::array<double, 4> d{p.box.cx - t.cx, p.box.cy - t.cy, p.box.w - t.w, p.box.h - t.h};
        const double c_target =
            frozen_confidence_targets ? (*frozen_confidence_targets)[k] : iou(p.box, t);
        const double dc = p.confidence - c_target;
        occupied_sum += d[0] * d[0] + d[1] * d[1] + d[2] * d[2] + d[3] * d[3] + weights.conf * dc * dc;
        if (grad) {
            CellGradient& g = grad->cells()[k];
            for (int a = 0; a < 4; ++a) g.box[a] += 2.0 * d[a];
            g.confidence += 2.0 * weights.conf * dc;
        }
    }
    return occupied_sum + weights.noobj * empty_sum;
}

double offsets_loss(const StageOutput& out, const TargetGrid& targets, StageGradient* grad) {
    check_grids(out, targets, grad);
    const auto& preds = out.cells();
    const auto& tgts = targets.cells();
    double loss = 0.0;
    for (std::size_t k = 0; k < preds.size(); ++k) {
        if (!tgts[k].occupied) continue;
        const std::array<double, 2> target{tgts[k].offsets.w, tgts[k].offsets.h};
        for (int a = 0; a < 2; ++a) {
            const double s = logistic(preds[k].offset_logits[a]);
            const double o = offset_from_logit(preds[k].offset_logits[a]);
            const double d = o - target[a];
            loss += d * d;
            if (grad) grad->cells()[k].offset_logits[a] += 2.0 * d * (1.0 - kMinOffset) * s * (1.0 - s);
        }
    }
    return loss;
}

LossBreakdown total_loss(const StageOutput& out, const TargetGrid& targets, const LossOptions& options,
                         StageGradient* grad) {
    LossBreakdown b;
    b.coords = coords_loss(out, targets, options.weights, grad, options.frozen_confidence_targets);
    if (options.role == StageRole::intermediate) {
        if (options.include_groups) b.groups = group_loss(out, targets, grad);
        b.offsets = offsets_loss(out, targets, grad);
    }
    b.total = b.groups + b.coords + b.offsets;
    return b;
}

void refresh_offset_targets(TargetGrid& targets, const StageOutput& out, double margin) {
    if (!(out.grid() == targets.grid())) throw std::invalid_argument("prediction and target grids differ");
    auto& tgts = targets.cells();
    for (std::size_t k = 0; k < tgts.size(); ++k)
        if (tgts[k].occupied) tgts[k].offsets = offset_targets(out.cells()[k].box, tgts[k].target_box, margin);
}

}  // namespace odgi
