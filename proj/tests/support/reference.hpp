#pragma once

// Independent reference implementations used as test oracles. Nothing here
// calls into the library's geometry, grouping, NMS or AP code.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <optional>
#include <random>
#include <vector>

#include "odgi/box.hpp"
#include "odgi/grouping.hpp"

namespace ref {

struct Rect {
    double x0, y0, x1, y1;
};

inline Rect rect(const odgi::Box& b) { return {b.cx - b.w / 2, b.cy - b.h / 2, b.cx + b.w / 2, b.cy + b.h / 2}; }

inline Rect clip(Rect r) {
    return {std::clamp(r.x0, 0.0, 1.0), std::clamp(r.y0, 0.0, 1.0), std::clamp(r.x1, 0.0, 1.0),
            std::clamp(r.y1, 0.0, 1.0)};
}

inline double area(const Rect& r) { return std::max(0.0, r.x1 - r.x0) * std::max(0.0, r.y1 - r.y0); }

inline double iou(const odgi::Box& a, const odgi::Box& b) {
    const Rect ra = clip(rect(a));
    const Rect rb = clip(rect(b));
    const Rect inter{std::max(ra.x0, rb.x0), std::max(ra.y0, rb.y0), std::min(ra.x1, rb.x1), std::min(ra.y1, rb.y1)};
    const double i = area(inter);
    const double u = area(ra) + area(rb) - i;
    return u > 0.0 ? i / u : 0.0;
}

/// Monte-Carlo estimate of |A u B| inside the unit square.
inline double union_area_mc(const odgi::Box& a, const odgi::Box& b, int samples, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const Rect ra = rect(a);
    const Rect rb = rect(b);
    auto inside = [](const Rect& r, double x, double y) { return x >= r.x0 && x <= r.x1 && y >= r.y0 && y <= r.y1; };
    int hits = 0;
    for (int k = 0; k < samples; ++k) {
        const double x = u(rng);
        const double y = u(rng);
        hits += (inside(ra, x, y) || inside(rb, x, y)) ? 1 : 0;
    }
    return static_cast<double>(hits) / samples;
}

/// Smallest box containing every input, by a corner scan.
inline odgi::Box corner_union(const std::vector<odgi::Box>& boxes) {
    Rect r{1e300, 1e300, -1e300, -1e300};
    for (const auto& b : boxes) {
        const Rect c = rect(b);
        r = {std::min(r.x0, c.x0), std::min(r.y0, c.y0), std::max(r.x1, c.x1), std::max(r.y1, c.y1)};
    }
    return {(r.x0 + r.x1) / 2, (r.y0 + r.y1) / 2, r.x1 - r.x0, r.y1 - r.y0};
}

/// Per-cell assignment by rasterization: each axis of the unit square is cut
/// into `px_per_cell` pixels per cell, a pixel is covered when its center
/// lies inside the box, and a box is assigned to a cell when it covers at
/// least one of the cell's pixels. Cells whose exact overlap with a box is
/// thinner than a pixel are reported as ambiguous.
struct RasterGrouping {
    odgi::GridSpec grid;
    std::vector<std::vector<std::size_t>> assigned;  // per cell, ascending box index
    std::vector<bool> ambiguous;                     // per cell

    const std::vector<std::size_t>& at(int i, int j) const { return assigned[static_cast<std::size_t>(i) * grid.cols + j]; }
    bool is_ambiguous(int i, int j) const { return ambiguous[static_cast<std::size_t>(i) * grid.cols + j]; }
};

inline RasterGrouping raster_grouping(const odgi::GroundTruthScene& scene, odgi::GridSpec grid, int px_per_cell) {
    RasterGrouping out{grid, std::vector<std::vector<std::size_t>>(grid.cells()), std::vector<bool>(grid.cells(), false)};
    const int rx = grid.cols * px_per_cell;
    const int ry = grid.rows * px_per_cell;

    // prefix[p] = number of covered pixels among the first p.
    auto coverage = [](double lo, double hi, int res) {
        std::vector<int> prefix(res + 1, 0);
        for (int p = 0; p < res; ++p) {
            const double c = (p + 0.5) / res;
            prefix[p + 1] = prefix[p] + ((c >= lo && c <= hi) ? 1 : 0);
        }
        return prefix;
    };

    for (std::size_t n = 0; n < scene.boxes.size(); ++n) {
        const Rect r = clip(rect(scene.boxes[n]));
        const auto px = coverage(r.x0, r.x1, rx);
        const auto py = coverage(r.y0, r.y1, ry);
        const double hx = 1.0 / rx;
        const double hy = 1.0 / ry;
        for (int i = 0; i < grid.rows; ++i) {
            for (int j = 0; j < grid.cols; ++j) {
                const int cx = px[(j + 1) * px_per_cell] - px[j * px_per_cell];
                const int cy = py[(i + 1) * px_per_cell] - py[i * px_per_cell];
                const std::size_t k = static_cast<std::size_t>(i) * grid.cols + j;
                if (cx > 0 && cy > 0) out.assigned[k].push_back(n);

                // An overlap shorter than a pixel may contain no pixel center.
                const double ox = std::min(r.x1, (j + 1.0) / grid.cols) - std::max(r.x0, j * 1.0 / grid.cols);
                const double oy = std::min(r.y1, (i + 1.0) / grid.rows) - std::max(r.y0, i * 1.0 / grid.rows);
                if (ox > 0 && oy > 0 && (ox < hx || oy < hy)) out.ambiguous[k] = true;
            }
        }
    }
    return out;
}

struct Scored {
    odgi::Box box;
    double confidence;
};

/// Greedy NMS by exhaustive search: the kept set K is the unique subset in
/// which every candidate is kept iff no higher-ranked kept candidate overlaps
/// it by more than tau. Returns the kept indices in rank order, or nullopt if
/// the fixed point is not unique.
inline std::optional<std::vector<std::size_t>> nms_exhaustive(const std::vector<Scored>& c, double tau) {
    const std::size_t n = c.size();
    std::vector<std::size_t> rank(n);
    std::iota(rank.begin(), rank.end(), std::size_t{0});
    std::stable_sort(rank.begin(), rank.end(), [&](std::size_t a, std::size_t b) { return c[a].confidence > c[b].confidence; });
    std::optional<std::vector<std::size_t>> found;
    int solutions = 0;
    for (std::uint32_t mask = 0; mask < (1u << n); ++mask) {
        bool ok = true;
        for (std::size_t r = 0; r < n && ok; ++r) {
            bool suppressed = false;
            for (std::size_t q = 0; q < r; ++q)
                if ((mask >> rank[q] & 1u) && ref::iou(c[rank[q]].box, c[rank[r]].box) > tau) suppressed = true;
            const bool kept = mask >> rank[r] & 1u;
            ok = kept == !suppressed;
        }
        if (!ok) continue;
        ++solutions;
        std::vector<std::size_t> kept;
        for (std::size_t r = 0; r < n; ++r)
            if (mask >> rank[r] & 1u) kept.push_back(rank[r]);
        found = kept;
    }
    if (solutions != 1) return std::nullopt;
    return found;
}

struct Detection {
    std::size_t image;
    odgi::Box box;
    double confidence;
};

/// All-point AP written as the mean over ground-truth boxes of the best
/// precision reached at or after the rank where each one is recalled.
inline double average_precision(const std::vector<Detection>& dets, const std::vector<std::vector<odgi::Box>>& gt,
                                double thr) {
    std::size_t num_gt = 0;
    for (const auto& g : gt) num_gt += g.size();
    if (num_gt == 0) return dets.empty() ? 1.0 : 0.0;
    std::vector<std::size_t> order(dets.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return dets[a].confidence > dets[b].confidence; });
    std::vector<std::vector<bool>> used(gt.size());
    for (std::size_t s = 0; s < gt.size(); ++s) used[s].assign(gt[s].size(), false);
    std::vector<bool> tp(dets.size(), false);
    for (std::size_t r = 0; r < order.size(); ++r) {
        const Detection& d = dets[order[r]];
        std::optional<std::size_t> best;
        double best_iou = 0.0;
        for (std::size_t g = 0; g < gt[d.image].size(); ++g) {
            if (used[d.image][g]) continue;
            const double v = ref::iou(d.box, gt[d.image][g]);
            if (!best || v > best_iou) {
                best = g;
                best_iou = v;
            }
        }
        if (best && best_iou >= thr) {
            used[d.image][*best] = true;
            tp[r] = true;
        }
    }
    std::vector<double> precision(order.size());
    std::size_t hits = 0;
    for (std::size_t r = 0; r < order.size(); ++r) {
        hits += tp[r] ? 1 : 0;
        precision[r] = static_cast<double>(hits) / static_cast<double>(r + 1);
    }
    double sum = 0.0;
    for (std::size_t r = 0; r < order.size(); ++r) {
        if (!tp[r]) continue;
        sum += *std::max_element(precision.begin() + static_cast<std::ptrdiff_t>(r), precision.end());
    }
    return sum / static_cast<double>(num_gt);
}

/// Random box with its extent inside the unit square.
inline odgi::Box random_box(std::mt19937_64& rng, double min_size, double max_size) {
    std::uniform_real_distribution<double> size(min_size, max_size);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const double w = size(rng);
    const double h = size(rng);
    return {w / 2 + u(rng) * (1 - w), h / 2 + u(rng) * (1 - h), w, h};
}

}  // namespace ref
