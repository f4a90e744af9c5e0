#include "odgi/box.hpp"

#include <algorithm>
#include <atomic>
#include <stdexcept>

namespace odgi {

namespace {

std::atomic<std::uint64_t> g_offset_clamps{0};

double clamp_offset(double o) {
    if (o <= kMinOffset) {
        g_offset_clamps.fetch_add(1, std::memory_order_relaxed);
        return kMinOffset;
    }
    return o;
}

}  // namespace

Box Box::from_corners(const Corners& c) {
    return {0.5 * (c.x0 + c.x1), 0.5 * (c.y0 + c.y1), c.x1 - c.x0, c.y1 - c.y0};
}

Corners Box::clipped_corners() const {
    const Corners c = corners();
    return {std::clamp(c.x0, 0.0, 1.0), std::clamp(c.y0, 0.0, 1.0), std::clamp(c.x1, 0.0, 1.0),
            std::clamp(c.y1, 0.0, 1.0)};
}

double intersection_area(const Box& a, const Box& b) {
    if (a.degenerate() || b.degenerate()) return 0.0;
    const Corners ca = a.clipped_corners();
    const Corners cb = b.clipped_corners();
    const Corners inter{std::max(ca.x0, cb.x0), std::max(ca.y0, cb.y0), std::min(ca.x1, cb.x1),
                        std::min(ca.y1, cb.y1)};
    return inter.area();
}

double iou(const Box& a, const Box& b) {
    if (a.degenerate() || b.degenerate()) return 0.0;
    const double inter = intersection_area(a, b);
    const double uni = a.area() + b.area() - inter;
    if (!(uni > 0.0)) return 0.0;
    return std::clamp(inter / uni, 0.0, 1.0);
}

Box enclosing_union(std::span<const Box> boxes) {
    if (boxes.empty()) throw std::invalid_argument("empty union");
    Corners u = boxes.front().corners();
    for (const Box& b : boxes.subspan(1)) {
        const Corners c = b.corners();
        u.x0 = std::min(u.x0, c.x0);
        u.y0 = std::min(u.y0, c.y0);
        u.x1 = std::max(u.x1, c.x1);
        u.y1 = std::max(u.y1, c.y1);
    }
    return Box::from_corners(u);
}

GridSpec resolution_to_grid(int resolution_px) {
    if (resolution_px <= 0 || resolution_px % 32 != 0)
        throw std::invalid_argument("unsupported resolution");
    const int n = resolution_px / 32;
    return {n, n};
}

Box cell_box(CellIndex cell, GridSpec grid) {
    const double w = 1.0 / grid.cols;
    const double h = 1.0 / grid.rows;
    return {(cell.j + 0.5) * w, (cell.i + 0.5) * h, w, h};
}

CellRelative encode_cell_relative(const Box& b, CellIndex cell, GridSpec grid) {
    return {b.cx * grid.cols - cell.j, b.cy * grid.rows - cell.i, b.w, b.h};
}

Box decode_cell_relative(const CellRelative& t, CellIndex cell, GridSpec grid) {
    return {(t.tx + cell.j) / grid.cols, (t.ty + cell.i) / grid.rows, t.tw, t.th};
}

Box rescale_by_offsets(const Box& b, double offset_w, double offset_h) {
    return {b.cx, b.cy, b.w / clamp_offset(offset_w), b.h / clamp_offset(offset_h)};
}

std::uint64_t offset_clamp_count() { return g_offset_clamps.load(std::memory_order_relaxed); }

Box clip_to_unit(const Box& b) {
    const Corners c = b.clipped_corners();
    if (c == b.corners()) return b;
    return Box::from_corners({c.x0, c.y0, std::max(c.x0, c.x1), std::max(c.y0, c.y1)});
}

Box clip_to(const Box& b, const Box& bounds) {
    const Corners c = b.corners();
    const Corners r = bounds.corners();
    const double x0 = std::clamp(c.x0, r.x0, r.x1);
    const double y0 = std::clamp(c.y0, r.y0, r.y1);
    const double x1 = std::clamp(c.x1, x0, r.x1);
    const double y1 = std::clamp(c.y1, y0, r.y1);
    if (Corners{x0, y0, x1, y1} == c) return b;
    return Box::from_corners({x0, y0, x1, y1});
}

bool contains(const Box& outer, const Box& inner, double tolerance) {
    const Corners o = outer.corners();
    const Corners i = inner.corners();
    return o.x0 <= i.x0 + tolerance && o.y0 <= i.y0 + tolerance && o.x1 + tolerance >= i.x1 &&
           o.y1 + tolerance >= i.y1;
}

Box dilate(const Box& b, double margin) { return {b.cx, b.cy, b.w + 2.0 * margin, b.h + 2.0 * margin}; }

}  // namespace odgi
