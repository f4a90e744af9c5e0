#include <gtest/gtest.h>

#include <random>

#include "odgi/grouping.hpp"
#include "odgi/synth.hpp"
#include "reference.hpp"

using namespace odgi;

namespace {

GroundTruthScene scene_of(std::vector<Box> boxes) { return {"s", std::move(boxes), 512}; }

}  // namespace

TEST(Assign, EmptySceneIsAllZero) {
    const Assignment a = assign(scene_of({}), {4, 4});
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j) EXPECT_FALSE(a.occupied(i, j));
}

TEST(Assign, BoxInsideOneCell) {
    const Assignment a = assign(scene_of({{0.1, 0.1, 0.05, 0.05}}), {4, 4});
    int nonzero = 0;
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j) nonzero += a.occupied(i, j) ? 1 : 0;
    EXPECT_EQ(nonzero, 1);
    EXPECT_TRUE(a.at(0, 0, 0));
}

TEST(Assign, SpanningBoxGoesToEveryCell) {
    const Assignment a = assign(scene_of({{0.5, 0.5, 0.5, 0.5}}), {4, 4});
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j) EXPECT_EQ(a.occupied(i, j), i >= 1 && i <= 2 && j >= 1 && j <= 2);
}

TEST(Assign, EdgeContactIsNotAssigned) {
    // right edge exactly on the boundary x = 0.5 of a 2x2 grid
    const Assignment a = assign(scene_of({{0.4, 0.25, 0.2, 0.1}}), {2, 2});
    EXPECT_TRUE(a.occupied(0, 0));
    EXPECT_FALSE(a.occupied(0, 1));
}

TEST(Assign, MatchesRasterizationOracle) {
    std::mt19937_64 rng(10);
    std::size_t cells = 0;
    std::size_t ambiguous = 0;
    for (int k = 0; k < 1000; ++k) {
        const GridSpec g{1 + static_cast<int>(rng() % 8), 1 + static_cast<int>(rng() % 8)};
        std::vector<Box> boxes;
        const int n = static_cast<int>(rng() % 21);
        for (int m = 0; m < n; ++m) boxes.push_back(ref::random_box(rng, 0.01, 0.4));
        const GroundTruthScene s = scene_of(boxes);
        const Assignment a = assign(s, g);
        const TargetGrid t = build_targets(s, g);
        const ref::RasterGrouping r = ref::raster_grouping(s, g, 1024);
        for (int i = 0; i < g.rows; ++i) {
            for (int j = 0; j < g.cols; ++j) {
                ++cells;
                if (r.is_ambiguous(i, j)) {
                    ++ambiguous;
                    continue;
                }
                const auto& expected = r.at(i, j);
                EXPECT_EQ(a.assigned(i, j), expected) << "scene " << k << " cell " << i << "," << j;
                const CellTarget& c = t.at(i, j);
                ASSERT_EQ(c.occupied, !expected.empty());
                EXPECT_EQ(c.group, expected.size() > 1);
                if (expected.empty()) continue;
                std::vector<Box> members;
                for (std::size_t n : expected) members.push_back(boxes[n]);
                const Box u = ref::corner_union(members);
                EXPECT_NEAR(c.target_box.cx, u.cx, 1e-9);
                EXPECT_NEAR(c.target_box.cy, u.cy, 1e-9);
                EXPECT_NEAR(c.target_box.w, u.w, 1e-9);
                EXPECT_NEAR(c.target_box.h, u.h, 1e-9);
            }
        }
    }
    EXPECT_LT(static_cast<double>(ambiguous), 0.005 * static_cast<double>(cells));
}

TEST(BuildTargets, SingleBox) {
    const Box b{0.1, 0.1, 0.05, 0.05};
    const TargetGrid t = build_targets(scene_of({b}), {4, 4});
    const CellTarget& c = t.at(0, 0);
    EXPECT_TRUE(c.occupied);
    EXPECT_FALSE(c.group);
    EXPECT_EQ(c.target_box, b);
}

TEST(BuildTargets, TwoBoxesMakeAGroup) {
    const Box a{0.05, 0.05, 0.04, 0.04};
    const Box b{0.15, 0.15, 0.04, 0.04};
    const TargetGrid t = build_targets(scene_of({a, b}), {4, 4});
    const CellTarget& c = t.at(0, 0);
    EXPECT_TRUE(c.group);
    EXPECT_NEAR(c.target_box.cx, 0.1, 1e-15);
    EXPECT_NEAR(c.target_box.w, 0.14, 1e-15);
    EXPECT_FALSE(t.at(1, 1).occupied);
}

TEST(BuildTargets, InitialOffsetsMatchTheMargin) {
    const Box b{0.5, 0.5, 0.1, 0.2};
    const TargetGrid t = build_targets(scene_of({b}), {1, 1});
    // a prediction equal to its target only needs the margin
    EXPECT_NEAR(t.at(0, 0).offsets.w, 0.1 / (0.1 + 2 * kDefaultOffsetMargin), 1e-12);
    EXPECT_NEAR(t.at(0, 0).offsets.h, 0.2 / (0.2 + 2 * kDefaultOffsetMargin), 1e-12);
}

TEST(BuildTargets, MatchesCornerScanAndInvariants) {
    std::mt19937_64 rng(11);
    for (int k = 0; k < 300; ++k) {
        const GridSpec g{1 + static_cast<int>(rng() % 8), 1 + static_cast<int>(rng() % 8)};
        std::vector<Box> boxes;
        const int n = static_cast<int>(rng() % 12);
        for (int m = 0; m < n; ++m) boxes.push_back(ref::random_box(rng, 0.01, 0.3));
        const GroundTruthScene s = scene_of(boxes);
        const Assignment a = assign(s, g);
        const TargetGrid t = build_targets(a, s);
        for (int i = 0; i < g.rows; ++i) {
            for (int j = 0; j < g.cols; ++j) {
                const CellTarget& c = t.at(i, j);
                const auto members = a.assigned(i, j);
                EXPECT_EQ(c.occupied, !members.empty());
                EXPECT_EQ(c.group, members.size() > 1);
                if (!c.occupied) continue;
                std::vector<Box> mine;
                double largest = 0.0;
                for (std::size_t m : members) {
                    mine.push_back(boxes[m]);
                    largest = std::max(largest, boxes[m].area());
                    EXPECT_TRUE(contains(c.target_box, boxes[m], 1e-12));
                }
                const Box r = ref::corner_union(mine);
                EXPECT_NEAR(c.target_box.cx, r.cx, 1e-9);
                EXPECT_NEAR(c.target_box.cy, r.cy, 1e-9);
                EXPECT_NEAR(c.target_box.w, r.w, 1e-9);
                EXPECT_NEAR(c.target_box.h, r.h, 1e-9);
                EXPECT_GE(c.target_box.area(), largest - 1e-15);
                EXPECT_GT(c.offsets.w, 0.0);
                EXPECT_LE(c.offsets.w, 1.0);
            }
        }
    }
}

TEST(BuildTargets, MismatchedAssignmentThrows) {
    const GroundTruthScene s = scene_of({{0.5, 0.5, 0.1, 0.1}});
    const Assignment a = assign(scene_of({}), {2, 2});
    EXPECT_THROW(build_targets(a, s), std::invalid_argument);
}

TEST(BuildTargets, FineGridsRemoveGroupsOfSeparatedSmallObjects) {
    SceneGenConfig cfg;
    cfg.seed = 12;
    cfg.render = false;
    const Dataset d = generate(cfg, 300);
    // Boxes separated by at least one 32x32 cell along some axis can never share a cell at 32x32.
    auto separated = [](const Box& a, const Box& b) {
        const Corners p = a.corners();
        const Corners q = b.corners();
        const double gap_x = std::max(q.x0 - p.x1, p.x0 - q.x1);
        const double gap_y = std::max(q.y0 - p.y1, p.y0 - q.y1);
        return std::max(gap_x, gap_y) >= 1.0 / 32.0;
    };
    int checked = 0;
    for (const GroundTruthScene& s : d.scenes) {
        bool ok = s.boxes.size() > 1;
        for (std::size_t a = 0; a < s.boxes.size(); ++a)
            for (std::size_t b = a + 1; b < s.boxes.size(); ++b) ok = ok && separated(s.boxes[a], s.boxes[b]);
        if (!ok) continue;
        ++checked;
        int groups_at_finest = -1;
        for (int r : {2, 4, 8, 16, 32}) {
            int groups = 0;
            for (const CellTarget& c : build_targets(s, {r, r}).cells()) groups += c.group ? 1 : 0;
            groups_at_finest = groups;
        }
        EXPECT_EQ(groups_at_finest, 0);
    }
    EXPECT_GT(checked, 50);
}

TEST(OffsetTargets, AlreadyEnclosing) {
    const OffsetPair o = offset_targets({0.5, 0.5, 0.1, 0.1}, {0.5, 0.5, 0.1, 0.1}, 0.0);
    EXPECT_NEAR(o.w, 1.0, 1e-12);
    EXPECT_NEAR(o.h, 1.0, 1e-12);
}

TEST(OffsetTargets, LargerConcentricTarget) {
    const OffsetPair o = offset_targets({0.5, 0.5, 0.1, 0.1}, {0.5, 0.5, 0.3, 0.3}, 0.0);
    EXPECT_NEAR(o.w, 1.0 / 3.0, 1e-12);
    EXPECT_NEAR(o.h, 1.0 / 3.0, 1e-12);
}

TEST(OffsetTargets, EnclosureProperty) {
    std::mt19937_64 rng(13);
    std::uniform_real_distribution<double> margin(0.0, 0.01);
    for (int k = 0; k < 10000; ++k) {
        const Box pred = ref::random_box(rng, 0.005, 0.4);
        const Box target = ref::random_box(rng, 0.005, 0.4);
        const double d = margin(rng);
        const OffsetPair o = offset_targets(pred, target, d);
        ASSERT_GT(o.w, 0.0);
        ASSERT_LE(o.w, 1.0);
        ASSERT_GT(o.h, 0.0);
        ASSERT_LE(o.h, 1.0);
        const Box scaled = rescale_by_offsets(pred, o.w, o.h);
        EXPECT_TRUE(contains(scaled, pred, 1e-12));
        EXPECT_TRUE(contains(scaled, dilate(target, d), 1e-12));
    }
}

TEST(CropScene, RestrictsAndRenormalizes) {
    const GroundTruthScene s = scene_of({{0.25, 0.25, 0.1, 0.1}, {0.5, 0.25, 0.1, 0.1}, {0.9, 0.9, 0.05, 0.05}});
    const GroundTruthScene c = crop_scene(s, {0.25, 0.25, 0.5, 0.5}, 0.25);
    // first box fully inside, second box half inside, third outside
    ASSERT_EQ(c.boxes.size(), 2u);
    EXPECT_NEAR(c.boxes[0].cx, 0.5, 1e-12);
    EXPECT_NEAR(c.boxes[0].w, 0.2, 1e-12);
    EXPECT_NEAR(c.boxes[1].cx, 0.95, 1e-12);
    EXPECT_NEAR(c.boxes[1].w, 0.1, 1e-12);
}

TEST(CropScene, DropsSlivers) {
    const GroundTruthScene s = scene_of({{0.5, 0.5, 0.2, 0.2}});
    // 10% of the box area inside
    EXPECT_TRUE(crop_scene(s, {0.2, 0.5, 0.42, 1.0}, 0.25).boxes.empty());
    EXPECT_EQ(crop_scene(s, {0.2, 0.5, 0.42, 1.0}, 0.05).boxes.size(), 1u);
}

TEST(RegionFrame, WholeImageIsIdentity) {
    const Box b{0.3, 0.7, 0.1, 0.2};
    const Box r = to_region_frame(b, {0.5, 0.5, 1.0, 1.0});
    EXPECT_NEAR(r.cx, b.cx, 1e-15);
    EXPECT_NEAR(r.h, b.h, 1e-15);
}
