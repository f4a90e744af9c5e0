#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "odgi/box.hpp"

namespace odgi {

/// Default enclosure margin for offset targets, in normalized units.
inline constexpr double kDefaultOffsetMargin = 0.0025;

struct GroundTruthScene {
    std::string image_id;
    std::vector<Box> boxes;
    int image_size_px = 0;
};

/// Binary I x J x N indicator: box n has positive-area overlap with cell (i, j).
class Assignment {
public:
    Assignment() = default;
    Assignment(GridSpec grid, std::size_t num_boxes);

    GridSpec grid() const { return grid_; }
    std::size_t num_boxes() const { return num_boxes_; }

    bool at(int i, int j, std::size_t n) const { return bits_[index(i, j, n)] != 0; }
    void set(int i, int j, std::size_t n, bool v) { bits_[index(i, j, n)] = v ? 1 : 0; }

    /// Indices of the boxes assigned to cell (i, j), ascending.
    std::vector<std::size_t> assigned(int i, int j) const;
    std::size_t count(int i, int j) const;
    bool occupied(int i, int j) const { return count(i, j) > 0; }

    friend bool operator==(const Assignment&, const Assignment&) = default;

private:
    std::size_t index(int i, int j, std::size_t n) const {
        return (static_cast<std::size_t>(i) * grid_.cols + j) * num_boxes_ + n;
    }

    GridSpec grid_{};
    std::size_t num_boxes_ = 0;
    std::vector<std::uint8_t> bits_;
};

struct OffsetPair {
    double w = 1.0;
    double h = 1.0;
};

struct CellTarget {
    bool occupied = false;
    Box target_box{};     // meaningful only when occupied
    bool group = false;   // more than one ground-truth box intersects the cell
    OffsetPair offsets{}; // (o_w, o_h) in (0, 1]
};

/// Row-major grid of per-cell targets.
class TargetGrid {
public:
    TargetGrid() = default;
    explicit TargetGrid(GridSpec grid) : grid_(grid), cells_(static_cast<std::size_t>(grid.cells())) {}

    GridSpec grid() const { return grid_; }
    CellTarget& at(int i, int j) { return cells_[static_cast<std::size_t>(i) * grid_.cols + j]; }
    const CellTarget& at(int i, int j) const { return cells_[static_cast<std::size_t>(i) * grid_.cols + j]; }
    std::vector<CellTarget>& cells() { return cells_; }
    const std::vector<CellTarget>& cells() const { return cells_; }

private:
    GridSpec grid_{};
    std::vector<CellTarget> cells_;
};

/// Positive-area overlap test against exact cell boundaries; edge contact is
/// not an assignment.
Assignment assign(const GroundTruthScene& scene, GridSpec grid);

/// Per-cell targets: the single assigned box, or the enclosing union with the
/// group flag set. Offset targets are filled against the target itself, i.e.
/// the offsets a prediction equal to its target would need; training refreshes
/// them against the live predictions.
TargetGrid build_targets(const Assignment& assignment, const GroundTruthScene& scene,
                         double margin = kDefaultOffsetMargin);

TargetGrid build_targets(const GroundTruthScene& scene, GridSpec grid, double margin = kDefaultOffsetMargin);

/// Offsets such that rescale_by_offsets(pred, o_w, o_h) encloses both pred and
/// target dilated by `margin`. The required extent along an axis is twice the
/// distance from pred's center to the farther dilated target edge; the offset
/// is pred's extent over that, capped at 1.
OffsetPair offset_targets(const Box& pred, const Box& target, double margin = kDefaultOffsetMargin);

/// Express `b` (image frame) in the frame of `region`.
Box to_region_frame(const Box& b, const Box& region);

/// A ground-truth box seen through a crop.
struct VisibleObject {
    std::size_t source_index = 0;
    Box full;            // crop frame, clipped to the image but not to the crop
    Box visible;         // crop frame, clipped to the crop
    double visible_fraction = 0.0;
};

/// Boxes of `scene` seen through `region`; objects with less than
/// `min_visible_fraction` of their area inside are dropped.
std::vector<VisibleObject> visible_objects(const GroundTruthScene& scene, const Box& region,
                                           double min_visible_fraction);

/// Ground truth in the crop frame: visible parts, renormalized to the crop.
GroundTruthScene crop_scene(const GroundTruthScene& scene, const Box& region,
                            double min_visible_fraction = 0.25);

}  // namespace odgi
