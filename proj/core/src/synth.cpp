#include "odgi/synth.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <random>
#include <stdexcept>
#include <string>

namespace odgi {

std::uint64_t mix_seed(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

void SceneGenConfig::validate() const {
    if (!(mean_objects >= 0.0)) throw std::invalid_argument("infeasible config: mean_objects must be >= 0");
    if (!(mean_size_fraction > 0.0) || !(mean_size_fraction < 1.0))
        throw std::invalid_argument("infeasible config: mean_size_fraction must lie in (0, 1)");
    if (size_spread < 0.0 || aspect_spread < 0.0) throw std::invalid_argument("infeasible config: negative spread");
    if (image_size_px <= 0) throw std::invalid_argument("infeasible config: image_size_px must be positive");
    if (clustering.kind == ClusteringKind::clustered && (clustering.clusters < 1 || !(clustering.spread > 0.0)))
        throw std::invalid_argument("infeasible config: clustering needs clusters >= 1 and spread > 0");
}

namespace {

std::string scene_id(std::size_t index) {
    std::string digits = std::to_string(index);
    if (digits.size() < 6) digits.insert(0, 6 - digits.size(), '0');
    return "scene_" + digits;
}

double place(double center, double extent) {
    const double half = 0.5 * extent;
    return std::clamp(center, half, 1.0 - half);
}

}  // namespace

GroundTruthScene generate_scene(const SceneGenConfig& cfg, std::size_t index) {
    cfg.validate();
    std::mt19937_64 rng(mix_seed(mix_seed(cfg.seed) ^ static_cast<std::uint64_t>(index)));
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::normal_distribution<double> normal(0.0, 1.0);

    GroundTruthScene scene;
    scene.image_id = scene_id(index);
    scene.image_size_px = cfg.image_size_px;

    int count = 0;
    if (cfg.mean_objects > 0.0) count = std::poisson_distribution<int>(cfg.mean_objects)(rng);

    std::vector<std::pair<double, double>> centers;
    if (cfg.clustering.kind == ClusteringKind::clustered) {
        for (int c = 0; c < cfg.clustering.clusters; ++c) centers.emplace_back(unit(rng), unit(rng));
    }

    for (int n = 0; n < count; ++n) {
        const double s = cfg.size_spread;
        const double area = cfg.mean_size_fraction * std::exp(s * normal(rng) - 0.5 * s * s);
        const double log_aspect = cfg.aspect_spread * (2.0 * unit(rng) - 1.0);
        const double w = std::min(1.0, std::sqrt(area * std::exp(log_aspect)));
        const double h = std::min(1.0, std::sqrt(area * std::exp(-log_aspect)));
        double cx = 0.0;
        double cy = 0.0;
        if (centers.empty()) {
            cx = unit(rng);
            cy = unit(rng);
        } else {
            const auto pick = static_cast<std::size_t>(unit(rng) * static_cast<double>(centers.size()));
            const auto& c = centers[std::min(pick, centers.size() - 1)];
            cx = c.first + cfg.clustering.spread * normal(rng);
            cy = c.second + cfg.clustering.spread * normal(rng);
        }
        // Uniform draws cover [0, 1); remapping keeps the box inside the image.
        if (centers.empty()) {
            cx = 0.5 * w + cx * (1.0 - w);
            cy = 0.5 * h + cy * (1.0 - h);
        }
        scene.boxes.push_back({place(cx, w), place(cy, h), w, h});
    }
    return scene;
}

Image render_scene(const GroundTruthScene& scene, int size_px, std::uint64_t seed) {
    Image image(size_px, size_px);
    std::mt19937_64 rng(mix_seed(seed));
    std::uniform_int_distribution<int> background(40, 90);
    for (auto& p : image.pixels) p = static_cast<std::uint8_t>(background(rng));
    std::uniform_int_distribution<int> brightness(180, 255);
    for (const Box& b : scene.boxes) {
        const auto value = static_cast<std::uint8_t>(brightness(rng));
        const Corners c = b.clipped_corners();
        // Pixel (x, y) is covered when its center lies inside the box.
        const int x_begin = std::max(0, static_cast<int>(std::ceil(c.x0 * size_px - 0.5)));
        const int x_end = std::min(size_px, static_cast<int>(std::ceil(c.x1 * size_px - 0.5)));
        const int y_begin = std::max(0, static_cast<int>(std::ceil(c.y0 * size_px - 0.5)));
        const int y_end = std::min(size_px, static_cast<int>(std::ceil(c.y1 * size_px - 0.5)));
        for (int y = y_begin; y < y_end; ++y)
            for (int x = x_begin; x < x_end; ++x) image.at(x, y) = value;
    }
    return image;
}

Dataset generate(const SceneGenConfig& cfg, std::size_t count) {
    cfg.validate();
    Dataset dataset;
    dataset.scenes.reserve(count);
    for (std::size_t k = 0; k < count; ++k) {
        dataset.scenes.push_back(generate_scene(cfg, k));
        if (cfg.render)
            dataset.images.push_back(render_scene(dataset.scenes.back(), cfg.image_size_px,
                                                  mix_seed(mix_seed(cfg.seed) ^ static_cast<std::uint64_t>(k)) + 1));
    }
    return dataset;
}

// Oracles --------------------------------------------------------------------

void OracleConfig::validate() const {
    auto prob = [](double p) { return p >= 0.0 && p <= 1.0; };
    if (!prob(p_drop) || !prob(p_spurious) || !prob(min_visible_fraction))
        throw std::invalid_argument("oracle probabilities must lie in [0, 1]");
    if (jitter < 0.0 || margin < 0.0 || area_threshold_px < 0.0)
        throw std::invalid_argument("oracle jitter, margin and area threshold must be non-negative");
}

namespace {

struct CellEmission {
    Box box;
    Box truth;  // unclipped ground truth of what the cell reports
    bool group = false;
};

std::uint64_t hash_string(const std::string& s) {
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char ch : s) {
        h ^= ch;
        h *= 1099511628211ULL;
    }
    return h;
}

std::uint64_t noise_seed(const OracleConfig& cfg, const StageInput& input) {
    std::uint64_t h = mix_seed(cfg.seed);
    if (input.scene) h = mix_seed(h ^ hash_string(input.scene->image_id));
    h = mix_seed(h ^ static_cast<std::uint64_t>(input.stage));
    for (double v : {input.region.cx, input.region.cy, input.region.w, input.region.h})
        h = mix_seed(h ^ std::bit_cast<std::uint64_t>(v));
    return h;
}

Box union_of(const std::vector<VisibleObject>& objs, const std::vector<std::size_t>& members, bool visible) {
    std::vector<Box> boxes;
    boxes.reserve(members.size());
    for (std::size_t m : members) boxes.push_back(visible ? objs[m].visible : objs[m].full);
    return enclosing_union(boxes);
}

// IoU without clipping to the unit square: in a crop frame the truth may extend past the crop.
double frame_iou(const Box& a, const Box& b) {
    const Corners ca = a.corners();
    const Corners cb = b.corners();
    const Corners inter{std::max(ca.x0, cb.x0), std::max(ca.y0, cb.y0), std::min(ca.x1, cb.x1), std::min(ca.y1, cb.y1)};
    const double i = inter.area();
    const double u = ca.area() + cb.area() - i;
    return u > 0.0 ? std::clamp(i / u, 0.0, 1.0) : 0.0;
}

double pixel_area(const Box& b, int resolution_px) {
    return b.w * b.h * static_cast<double>(resolution_px) * static_cast<double>(resolution_px);
}

StageOutput oracle_output(const std::vector<VisibleObject>& objs, GridSpec grid, int resolution_px, StageRole role,
                          const OracleConfig& cfg, std::uint64_t seed) {
    GroundTruthScene visible;
    for (const VisibleObject& v : objs) visible.boxes.push_back(v.visible);
    const Assignment assignment = assign(visible, grid);
    const bool degraded = cfg.kind == OracleKind::resolution_degraded;
    auto seen = [&](const Box& b) { return !degraded || pixel_area(b, resolution_px) >= cfg.area_threshold_px; };

    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::normal_distribution<double> normal(0.0, 1.0);
    const bool noisy = cfg.kind == OracleKind::noisy;

    StageOutput out(grid);
    for (int i = 0; i < grid.rows; ++i) {
        for (int j = 0; j < grid.cols; ++j) {
            CellPrediction& p = out.at(i, j);
            const Box cell = cell_box({i, j}, grid);
            p.box = {cell.cx, cell.cy, 0.0, 0.0};
            p.confidence = 0.0;
            p.group_logit = -kLogitLimit;
            p.offset_logits = {kLogitLimit, kLogitLimit};

            std::vector<std::size_t> members = assignment.assigned(i, j);
            std::optional<CellEmission> emission;
            if (role == StageRole::intermediate) {
                if (members.size() == 1 && seen(objs[members[0]].visible)) {
                    emission = CellEmission{objs[members[0]].visible, objs[members[0]].full, false};
                } else if (members.size() > 1) {
                    const Box u = union_of(objs, members, true);
                    if (seen(u)) emission = CellEmission{u, union_of(objs, members, false), true};
                }
            } else {
                std::erase_if(members, [&](std::size_t m) { return !seen(objs[m].visible); });
                double best = -1.0;
                for (std::size_t m : members) {
                    const double overlap = intersection_area(objs[m].visible, cell);
                    if (overlap > best) {
                        best = overlap;
                        emission = CellEmission{objs[m].visible, objs[m].full, false};
                    }
                }
            }

            if (!emission) {
                if (noisy && cfg.p_spurious > 0.0 && unit(rng) < cfg.p_spurious) {
                    const double w = (0.5 + unit(rng)) * cell.w;
                    const double h = (0.5 + unit(rng)) * cell.h;
                    p.box = {cell.cx + (unit(rng) - 0.5) * cell.w, cell.cy + (unit(rng) - 0.5) * cell.h, w, h};
                    p.confidence = 0.5 * unit(rng);
                    p.offset_logits = {offset_logit_for(2.0 / 3.0), offset_logit_for(2.0 / 3.0)};
                }
                continue;
            }

            Box box = emission->box;
            if (noisy) {
                if (cfg.p_drop > 0.0 && unit(rng) < cfg.p_drop) continue;
                if (cfg.jitter > 0.0) {
                    box.cx += cfg.jitter * normal(rng);
                    box.cy += cfg.jitter * normal(rng);
                    box.w = std::max(kMinOffset, box.w + cfg.jitter * normal(rng));
                    box.h = std::max(kMinOffset, box.h + cfg.jitter * normal(rng));
                }
            }
            p.box = box;
            p.confidence = frame_iou(box, emission->truth);
            if (!(p.confidence > 0.0)) p.confidence = 1e-6;
            p.group_logit = emission->group ? kLogitLimit : -kLogitLimit;
            const OffsetPair o = offset_targets(box, emission->box, cfg.margin);
            p.offset_logits = {offset_logit_for(o.w), offset_logit_for(o.h)};
        }
    }
    return out;
}

std::vector<VisibleObject> whole_image_objects(const GroundTruthScene& scene) {
    return visible_objects(scene, {0.5, 0.5, 1.0, 1.0}, 0.0);
}

}  // namespace

OracleDetector::OracleDetector(OracleConfig cfg) : cfg_(cfg) { cfg_.validate(); }

StageOutput OracleDetector::detect(const StageInput& input) const {
    if (input.scene == nullptr) throw std::invalid_argument("oracle detector needs ground truth");
    const auto objs = visible_objects(*input.scene, input.region, cfg_.min_visible_fraction);
    const StageRole role = input.final_stage ? StageRole::final : StageRole::intermediate;
    return oracle_output(objs, input.grid, input.resolution_px, role, cfg_, noise_seed(cfg_, input));
}

StageOutput perfect_oracle(const GroundTruthScene& scene, GridSpec grid) {
    return oracle_output(whole_image_objects(scene), grid, 32 * grid.cols, StageRole::intermediate, OracleConfig{}, 0);
}

StageOutput noisy_oracle(const GroundTruthScene& scene, GridSpec grid, const OracleConfig& cfg) {
    OracleConfig c = cfg;
    c.kind = OracleKind::noisy;
    c.validate();
    StageInput input;
    input.scene = &scene;
    input.grid = grid;
    return oracle_output(whole_image_objects(scene), grid, 32 * grid.cols, StageRole::intermediate, c,
                         noise_seed(c, input));
}

StageOutput resolution_degraded_oracle(const GroundTruthScene& scene, GridSpec grid, int resolution_px,
                                       const OracleConfig& cfg, StageRole role) {
    OracleConfig c = cfg;
    c.kind = OracleKind::resolution_degraded;
    c.validate();
    return oracle_output(whole_image_objects(scene), grid, resolution_px, role, c, 0);
}

TargetGrid targets_from_output(const StageOutput& out) {
    TargetGrid t(out.grid());
    for (std::size_t k = 0; k < t.cells().size(); ++k) {
        const CellPrediction& p = out.cells()[k];
        CellTarget& c = t.cells()[k];
        c.occupied = p.confidence > 0.0;
        if (!c.occupied) continue;
        c.target_box = p.box;
        c.group = p.group_logit > 0.0;
        c.offsets = p.offsets();
    }
    return t;
}

}  // namespace odgi
