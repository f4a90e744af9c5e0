#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>

namespace odgi {

/// Lower clamp applied to rescaling offsets before division.
inline constexpr double kMinOffset = 1e-3;

/// Corner form of a box: [x0, x1] x [y0, y1].
struct Corners {
    double x0 = 0.0;
    double y0 = 0.0;
    double x1 = 0.0;
    double y1 = 0.0;

    double width() const { return x1 > x0 ? x1 - x0 : 0.0; }
    double height() const { return y1 > y0 ? y1 - y0 : 0.0; }
    double area() const { return width() * height(); }

    friend bool operator==(const Corners&, const Corners&) = default;
};

/// Axis-aligned box in normalized image coordinates, center-size form.
/// Width and height are fractions of the image width and height.
struct Box {
    double cx = 0.0;
    double cy = 0.0;
    double w = 0.0;
    double h = 0.0;

    Corners corners() const { return {cx - 0.5 * w, cy - 0.5 * h, cx + 0.5 * w, cy + 0.5 * h}; }
    static Box from_corners(const Corners& c);

    /// Corner extent intersected with the unit square.
    Corners clipped_corners() const;
    /// Area of the clipped extent; every area computation goes through this.
    double area() const { return clipped_corners().area(); }
    bool degenerate() const { return !(w > 0.0) || !(h > 0.0); }

    friend bool operator==(const Box&, const Box&) = default;
};

struct GridSpec {
    int rows = 1;  // I
    int cols = 1;  // J

    int cells() const { return rows * cols; }
    friend bool operator==(const GridSpec&, const GridSpec&) = default;
};

struct CellIndex {
    int i = 0;  // row
    int j = 0;  // col
    friend bool operator==(const CellIndex&, const CellIndex&) = default;
};

/// Cell-relative encoding: tx = cx*J - j, ty = cy*I - i, tw = w, th = h.
struct CellRelative {
    double tx = 0.0;
    double ty = 0.0;
    double tw = 0.0;
    double th = 0.0;
};

/// Area of the intersection of the clipped extents of a and b.
double intersection_area(const Box& a, const Box& b);

/// Intersection over set-union. Zero when the union has zero area.
double iou(const Box& a, const Box& b);

/// Smallest axis-aligned box containing every input box.
/// Throws std::invalid_argument("empty union") for an empty set.
Box enclosing_union(std::span<const Box> boxes);

/// Grid of the fully-convolutional stage: one cell per 32 input pixels.
/// Throws std::invalid_argument("unsupported resolution") otherwise.
GridSpec resolution_to_grid(int resolution_px);

/// Image-space extent of a cell.
Box cell_box(CellIndex cell, GridSpec grid);

CellRelative encode_cell_relative(const Box& b, CellIndex cell, GridSpec grid);
Box decode_cell_relative(const CellRelative& t, CellIndex cell, GridSpec grid);

/// Same center, width and height divided by the offsets. Offsets at or below
/// kMinOffset are clamped to it and counted in offset_clamp_count().
Box rescale_by_offsets(const Box& b, double offset_w, double offset_h);

/// Number of offsets clamped by rescale_by_offsets since process start.
std::uint64_t offset_clamp_count();

/// Box intersected with the unit square.
Box clip_to_unit(const Box& b);

/// Box intersected with `bounds`; an empty intersection collapses to a
/// zero-size box on the nearest edge of `bounds`.
Box clip_to(const Box& b, const Box& bounds);

/// True when `inner` lies inside `outer` (corner comparison, unclipped),
/// allowing `tolerance` slack on each side.
bool contains(const Box& outer, const Box& inner, double tolerance = 0.0);

/// Box grown by `margin` on each side.
Box dilate(const Box& b, double margin);

}  // namespace odgi
