#include "odgi/transition.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>

namespace odgi {

void TransitionConfig::validate() const {
    auto in_unit = [](double v) { return v >= 0.0 && v <= 1.0; };
    if (!in_unit(tau_low) || !in_unit(tau_high) || !in_unit(tau_nms))
        throw std::invalid_argument("transition thresholds must lie in [0, 1]");
    if (tau_low > tau_high) throw std::invalid_argument("tau_low must not exceed tau_high");
    if (gamma < 1) throw std::invalid_argument("gamma must be positive");
}

bool group_flag(const CellPrediction& pred) { return pred.group_logit > 0.0; }

FilterDecision classify(double confidence, bool group, const TransitionConfig& cfg) {
    if (confidence <= cfg.tau_low) return FilterDecision::discard;
    if (confidence > cfg.tau_high && !group) return FilterDecision::early_exit;
    return FilterDecision::refine;
}

FilterDecision classify(const CellPrediction& pred, const TransitionConfig& cfg) {
    return classify(pred.confidence, group_flag(pred), cfg);
}

std::vector<std::size_t> nms(std::span<const ScoredBox> candidates, double tau_nms, std::size_t limit) {
    std::vector<std::size_t> order(candidates.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return candidates[a].confidence > candidates[b].confidence;
    });
    std::vector<std::size_t> kept;
    std::vector<bool> removed(candidates.size(), false);
    for (std::size_t pos = 0; pos < order.size() && kept.size() < limit; ++pos) {
        const std::size_t cur = order[pos];
        if (removed[cur]) continue;
        kept.push_back(cur);
        for (std::size_t later = pos + 1; later < order.size(); ++later) {
            const std::size_t other = order[later];
            if (!removed[other] && iou(candidates[cur].box, candidates[other].box) > tau_nms) removed[other] = true;
        }
    }
    return kept;
}

TransitionResult extract_crops(std::span<const CellPrediction> predictions, const TransitionConfig& cfg,
                               const Ablation& ablation, int stage) {
    cfg.validate();
    TransitionResult result;
    std::vector<ScoredBox> candidates;
    std::vector<const CellPrediction*> sources;
    for (const CellPrediction& p : predictions) {
        const bool group = ablation.kind != AblationKind::no_groups && group_flag(p);
        switch (classify(p.confidence, group, cfg)) {
            case FilterDecision::discard:
                break;
            case FilterDecision::early_exit:
                result.early_exits.push_back({clip_to_unit(p.box), p.confidence, stage});
                break;
            case FilterDecision::refine:
                candidates.push_back({p.box, p.confidence});
                sources.push_back(&p);
                break;
        }
    }
    for (std::size_t k : nms(candidates, cfg.tau_nms, static_cast<std::size_t>(cfg.gamma))) {
        const CellPrediction& p = *sources[k];
        Box region = p.box;
        switch (ablation.kind) {
            case AblationKind::full:
            case AblationKind::no_groups: {
                const OffsetPair o = p.offsets();
                region = rescale_by_offsets(p.box, o.w, o.h);
                break;
            }
            case AblationKind::fixed_offsets:
                region = rescale_by_offsets(p.box, ablation.fixed_offset, ablation.fixed_offset);
                break;
            case AblationKind::no_offsets:
                break;
        }
        region = clip_to_unit(region);
        if (region.degenerate()) continue;
        result.crops.push_back({region, p.confidence, group_flag(p)});
    }
    return result;
}

TransitionResult extract_crops(const StageOutput& out, const TransitionConfig& cfg, const Ablation& ablation,
                               int stage) {
    return extract_crops(std::span<const CellPrediction>(out.cells()), cfg, ablation, stage);
}

Box map_to_parent(const Box& b, const Box& crop) {
    if (crop.degenerate()) throw std::invalid_argument("zero-area crop");
    const Corners c = crop.corners();
    return {c.x0 + b.cx * crop.w, c.y0 + b.cy * crop.h, b.w * crop.w, b.h * crop.h};
}

Box map_to_crop(const Box& b, const Box& crop) {
    if (crop.degenerate()) throw std::invalid_argument("zero-area crop");
    const Corners c = crop.corners();
    return {(b.cx - c.x0) / crop.w, (b.cy - c.y0) / crop.h, b.w / crop.w, b.h / crop.h};
}

}  // namespace odgi
