#include "odgi/grouping.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace odgi {

Assignment::Assignment(GridSpec grid, std::size_t num_boxes)
    : grid_(grid), num_boxes_(num_boxes), bits_(static_cast<std::size_t>(grid.cells()) * num_boxes, 0) {}

std::vector<std::size_t> Assignment::assigned(int i, int j) const {
    std::vector<std::size_t> out;
    for (std::size_t n = 0; n < num_boxes_; ++n)
        if (at(i, j, n)) out.push_back(n);
    return out;
}

std::size_t Assignment::count(int i, int j) const {
    std::size_t c = 0;
    for (std::size_t n = 0; n < num_boxes_; ++n) c += at(i, j, n) ? 1 : 0;
    return c;
}

Assignment assign(const GroundTruthScene& scene, GridSpec grid) {
    Assignment a(grid, scene.boxes.size());
    for (std::size_t n = 0; n < scene.boxes.size(); ++n) {
        const Box& b = scene.boxes[n];
        if (b.degenerate()) continue;
        const Corners c = b.clipped_corners();
        if (!(c.x1 > c.x0) || !(c.y1 > c.y0)) continue;
        // Cell j spans [j/J, (j+1)/J); overlap is positive iff x0*J < j+1 and x1*J > j.
        const double x0 = c.x0 * grid.cols;
        const double x1 = c.x1 * grid.cols;
        const double y0 = c.y0 * grid.rows;
        const double y1 = c.y1 * grid.rows;
        const int j_begin = std::max(0, static_cast<int>(std::floor(x0)));
        const int j_end = std::min(grid.cols, static_cast<int>(std::ceil(x1)));
        const int i_begin = std::max(0, static_cast<int>(std::floor(y0)));
        const int i_end = std::min(grid.rows, static_cast<int>(std::ceil(y1)));
        for (int i = i_begin; i < i_end; ++i) {
            if (!(y0 < i + 1 && y1 > i)) continue;
            for (int j = j_begin; j < j_end; ++j) {
                if (x0 < j + 1 && x1 > j) a.set(i, j, n, true);
            }
        }
    }
    return a;
}

TargetGrid build_targets(const Assignment& assignment, const GroundTruthScene& scene, double margin) {
    if (assignment.num_boxes() != scene.boxes.size())
        throw std::invalid_argument("assignment does not match scene");
    const GridSpec grid = assignment.grid();
    TargetGrid targets(grid);
    std::vector<Box> members;
    for (int i = 0; i < grid.rows; ++i) {
        for (int j = 0; j < grid.cols; ++j) {
            members.clear();
            for (std::size_t n : assignment.assigned(i, j)) members.push_back(scene.boxes[n]);
            CellTarget& t = targets.at(i, j);
            if (members.empty()) continue;
            t.occupied = true;
            t.group = members.size() > 1;
            t.target_box = t.group ? enclosing_union(members) : members.front();
            t.offsets = offset_targets(t.target_box, t.target_box, margin);
        }
    }
    return targets;
}

TargetGrid build_targets(const GroundTruthScene& scene, GridSpec grid, double margin) {
    return build_targets(assign(scene, grid), scene, margin);
}

namespace {

double axis_offset(double pred_center, double pred_extent, double target_center, double target_extent,
                   double margin) {
    const double hi = target_center + 0.5 * target_extent + margin;
    const double lo = target_center - 0.5 * target_extent - margin;
    const double half_required = std::max(std::abs(hi - pred_center), std::abs(lo - pred_center));
    const double required = 2.0 * half_required;
    if (!(required > pred_extent)) return 1.0;
    return pred_extent / required;
}

}  // namespace

OffsetPair offset_targets(const Box& pred, const Box& target, double margin) {
    return {axis_offset(pred.cx, pred.w, target.cx, target.w, margin),
            axis_offset(pred.cy, pred.h, target.cy, target.h, margin)};
}

Box to_region_frame(const Box& b, const Box& region) {
    const Corners r = region.corners();
    return {(b.cx - r.x0) / region.w, (b.cy - r.y0) / region.h, b.w / region.w, b.h / region.h};
}

std::vector<VisibleObject> visible_objects(const GroundTruthScene& scene, const Box& region,
                                           double min_visible_fraction) {
    std::vector<VisibleObject> out;
    if (region.degenerate()) return out;
    const Corners r = region.corners();
    for (std::size_t n = 0; n < scene.boxes.size(); ++n) {
        const Box& b = scene.boxes[n];
        const double area = b.area();
        if (!(area > 0.0)) continue;
        const Corners c = b.clipped_corners();
        const Corners inter{std::max(c.x0, r.x0), std::max(c.y0, r.y0), std::min(c.x1, r.x1),
                            std::min(c.y1, r.y1)};
        const double inside = inter.area();
        if (!(inside > 0.0)) continue;
        const double fraction = inside / area;
        if (fraction < min_visible_fraction) continue;
        VisibleObject v;
        v.source_index = n;
        v.full = to_region_frame(Box::from_corners(c), region);
        v.visible = to_region_frame(Box::from_corners(inter), region);
        v.visible_fraction = std::min(1.0, fraction);
        out.push_back(v);
    }
    return out;
}

GroundTruthScene crop_scene(const GroundTruthScene& scene, const Box& region, double min_visible_fraction) {
    GroundTruthScene out;
    out.image_id = scene.image_id;
    out.image_size_px = scene.image_size_px;
    for (const VisibleObject& v : visible_objects(scene, region, min_visible_fraction))
        out.boxes.push_back(v.visible);
    return out;
}

}  // namespace odgi
