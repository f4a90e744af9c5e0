#include <gtest/gtest.h>

#include <cmath>
#include <functional>
#include <random>

#include "odgi/losses.hpp"
#include "reference.hpp"

using namespace odgi;

namespace {

struct Instance {
    StageOutput out;
    TargetGrid targets;
};

Instance random_instance(std::mt19937_64& rng, GridSpec g) {
    std::uniform_real_distribution<double> u(0.05, 0.95);
    std::normal_distribution<double> n(0.0, 2.0);
    GroundTruthScene s;
    const int count = static_cast<int>(rng() % 6);
    for (int k = 0; k < count; ++k) s.boxes.push_back(ref::random_box(rng, 0.05, 0.5));
    Instance inst{StageOutput(g), build_targets(s, g)};
    for (CellPrediction& p : inst.out.cells()) {
        p.box = ref::random_box(rng, 0.05, 0.5);
        p.confidence = u(rng);
        p.group_logit = n(rng);
        p.offset_logits = {n(rng), n(rng)};
    }
    refresh_offset_targets(inst.targets, inst.out);
    return inst;
}

// Pointer to the k-th differentiable output of a cell and the matching gradient slot.
double& output_slot(CellPrediction& p, int k) {
    switch (k) {
        case 0: return p.box.cx;
        case 1: return p.box.cy;
        case 2: return p.box.w;
        case 3: return p.box.h;
        case 4: return p.confidence;
        case 5: return p.group_logit;
        case 6: return p.offset_logits[0];
        default: return p.offset_logits[1];
    }
}

double gradient_slot(const CellGradient& g, int k) {
    if (k < 4) return g.box[static_cast<std::size_t>(k)];
    if (k == 4) return g.confidence;
    if (k == 5) return g.group_logit;
    return g.offset_logits[static_cast<std::size_t>(k - 6)];
}

using LossFn = std::function<double(const StageOutput&, StageGradient*)>;

// Largest relative error between the analytic gradient and central differences.
double max_fd_error(StageOutput out, const LossFn& loss) {
    StageGradient grad(out.grid());
    loss(out, &grad);
    const double h = 1e-6;
    double worst = 0.0;
    for (std::size_t c = 0; c < out.cells().size(); ++c) {
        for (int k = 0; k < 8; ++k) {
            double& v = output_slot(out.cells()[c], k);
            const double saved = v;
            v = saved + h;
            const double plus = loss(out, nullptr);
            v = saved - h;
            const double minus = loss(out, nullptr);
            v = saved;
            const double numeric = (plus - minus) / (2 * h);
            const double analytic = gradient_slot(grad.cells()[c], k);
            const double scale = std::max({std::abs(analytic), std::abs(numeric), 1e-3});
            worst = std::max(worst, std::abs(analytic - numeric) / scale);
        }
    }
    return worst;
}

}  // namespace

TEST(Activations, LogisticAndSoftplus) {
    EXPECT_DOUBLE_EQ(logistic(0.0), 0.5);
    EXPECT_NEAR(softplus(0.0), std::log(2.0), 1e-15);
    EXPECT_TRUE(std::isfinite(softplus(800.0)));
    EXPECT_NEAR(softplus(800.0), 800.0, 1e-12);
    EXPECT_NEAR(softplus(-800.0), 0.0, 1e-300);
    EXPECT_NEAR(logistic(logit_for(0.1)), 0.1, 1e-15);
    EXPECT_NEAR(offset_from_logit(offset_logit_for(2.0 / 3.0)), 2.0 / 3.0, 1e-14);
    EXPECT_GT(offset_from_logit(-100.0), kMinOffset - 1e-15);
    EXPECT_LE(offset_from_logit(100.0), 1.0);
}

TEST(GroupLoss, EmptyCellsContributeNothing) {
    StageOutput out({2, 2});
    for (CellPrediction& p : out.cells()) p.group_logit = 3.0;
    EXPECT_EQ(group_loss(out, TargetGrid({2, 2})), 0.0);
}

TEST(GroupLoss, CrossEntropyValues) {
    TargetGrid t({1, 2});
    for (CellTarget& c : t.cells()) {
        c.occupied = true;
        c.group = true;
    }
    StageOutput out({1, 2});
    out.at(0, 0).group_logit = logit_for(1.0 - 1e-12);
    out.at(0, 1).group_logit = 0.0;
    StageOutput confident({1, 1});
    confident.at(0, 0).group_logit = logit_for(1.0 - 1e-12);
    TargetGrid one({1, 1});
    one.at(0, 0) = t.at(0, 0);
    EXPECT_NEAR(group_loss(confident, one), 0.0, 1e-11);
    EXPECT_NEAR(group_loss(out, t), std::log(2.0), 1e-11);
}

TEST(GroupLoss, MismatchedGridsThrow) {
    EXPECT_THROW(group_loss(StageOutput({2, 2}), TargetGrid({1, 1})), std::invalid_argument);
}

TEST(CoordsLoss, PerfectPredictionIsZero) {
    GroundTruthScene s{"s", {{0.2, 0.2, 0.1, 0.1}, {0.7, 0.6, 0.2, 0.1}}, 64};
    const TargetGrid t = build_targets(s, {2, 2});
    StageOutput out({2, 2});
    for (std::size_t k = 0; k < t.cells().size(); ++k) {
        if (!t.cells()[k].occupied) continue;
        out.cells()[k].box = t.cells()[k].target_box;
        out.cells()[k].confidence = 1.0;
    }
    EXPECT_EQ(coords_loss(out, t), 0.0);
}

TEST(CoordsLoss, EmptySceneNoObjectPenalty) {
    StageOutput out({4, 4});
    for (CellPrediction& p : out.cells()) p.confidence = 0.5;
    EXPECT_DOUBLE_EQ(coords_loss(out, TargetGrid({4, 4})), 1.0 * 16 * 0.25);
    LossWeights w;
    w.noobj = 2.0;
    EXPECT_DOUBLE_EQ(coords_loss(out, TargetGrid({4, 4}), w), 2.0 * 16 * 0.25);
}

TEST(CoordsLoss, ConfidenceTargetIsIou) {
    TargetGrid t({1, 1});
    t.at(0, 0).occupied = true;
    t.at(0, 0).target_box = {0.5, 0.5, 0.5, 0.5};
    StageOutput out({1, 1});
    out.at(0, 0).box = {0.25, 0.5, 0.5, 0.5};
    out.at(0, 0).confidence = 0.0;
    const double cbar = 1.0 / 3.0;
    EXPECT_NEAR(confidence_targets(out, t)[0], cbar, 1e-15);
    EXPECT_NEAR(coords_loss(out, t), 0.25 * 0.25 + 5.0 * cbar * cbar, 1e-14);
}

TEST(OffsetsLoss, Examples) {
    TargetGrid t({1, 1});
    t.at(0, 0).occupied = true;
    StageOutput out({1, 1});
    out.at(0, 0).offset_logits = {0.3, -0.2};
    t.at(0, 0).offsets = out.at(0, 0).offsets();
    EXPECT_EQ(offsets_loss(out, t), 0.0);
    t.at(0, 0).offsets.w -= 0.1;
    EXPECT_NEAR(offsets_loss(out, t), 0.01, 1e-15);
    t.at(0, 0).occupied = false;
    EXPECT_EQ(offsets_loss(out, t), 0.0);
}

TEST(TotalLoss, FinalStageKeepsOnlyCoords) {
    std::mt19937_64 rng(20);
    for (int k = 0; k < 50; ++k) {
        const Instance inst = random_instance(rng, {3, 3});
        LossOptions o;
        o.role = StageRole::final;
        const LossBreakdown b = total_loss(inst.out, inst.targets, o);
        EXPECT_EQ(b.groups, 0.0);
        EXPECT_EQ(b.offsets, 0.0);
        EXPECT_EQ(b.total, b.coords);
        EXPECT_DOUBLE_EQ(b.coords, coords_loss(inst.out, inst.targets));
    }
}

TEST(TotalLoss, SumOfPartsNonNegativeFinite) {
    std::mt19937_64 rng(21);
    for (int k = 0; k < 200; ++k) {
        const Instance inst = random_instance(rng, {4, 4});
        const LossBreakdown b = total_loss(inst.out, inst.targets);
        EXPECT_DOUBLE_EQ(b.total, b.groups + b.coords + b.offsets);
        EXPECT_GE(b.groups, 0.0);
        EXPECT_GE(b.coords, 0.0);
        EXPECT_GE(b.offsets, 0.0);
        EXPECT_TRUE(std::isfinite(b.total));
    }
}

TEST(TotalLoss, PerfectIntermediatePredictionIsZero) {
    GroundTruthScene s{"s", {{0.2, 0.2, 0.05, 0.05}, {0.22, 0.24, 0.05, 0.05}, {0.7, 0.7, 0.1, 0.1}}, 64};
    TargetGrid t = build_targets(s, {2, 2});
    StageOutput out({2, 2});
    for (std::size_t k = 0; k < t.cells().size(); ++k) {
        const CellTarget& c = t.cells()[k];
        CellPrediction& p = out.cells()[k];
        if (!c.occupied) continue;
        p.box = c.target_box;
        p.confidence = 1.0;
        p.group_logit = c.group ? kLogitLimit : -kLogitLimit;
    }
    refresh_offset_targets(t, out);
    for (std::size_t k = 0; k < t.cells().size(); ++k) {
        const OffsetPair o = t.cells()[k].offsets;
        out.cells()[k].offset_logits = {offset_logit_for(o.w), offset_logit_for(o.h)};
    }
    EXPECT_NEAR(total_loss(out, t).total, 0.0, 1e-14);
}

TEST(Masking, EmptyCellsOnlyCarryNoObjectTerm) {
    std::mt19937_64 rng(22);
    const Instance inst = random_instance(rng, {4, 4});
    const LossBreakdown base = total_loss(inst.out, inst.targets);
    for (std::size_t k = 0; k < inst.out.cells().size(); ++k) {
        if (inst.targets.cells()[k].occupied) continue;
        StageOutput moved = inst.out;
        moved.cells()[k].box.cx += 0.1;
        moved.cells()[k].group_logit += 1.0;
        moved.cells()[k].offset_logits[0] -= 1.0;
        const LossBreakdown b = total_loss(moved, inst.targets);
        EXPECT_EQ(b.groups, base.groups);
        EXPECT_EQ(b.offsets, base.offsets);
        EXPECT_DOUBLE_EQ(b.coords, base.coords);
        moved.cells()[k].confidence += 0.01;
        EXPECT_NE(total_loss(moved, inst.targets).coords, base.coords);
    }
}

TEST(Gradients, GroupLossMatchesFiniteDifferences) {
    std::mt19937_64 rng(23);
    for (int k = 0; k < 100; ++k) {
        const Instance inst = random_instance(rng, {3, 3});
        EXPECT_LT(max_fd_error(inst.out,
                               [&](const StageOutput& o, StageGradient* g) { return group_loss(o, inst.targets, g); }),
                  1e-5);
    }
}

TEST(Gradients, CoordsLossMatchesFiniteDifferences) {
    std::mt19937_64 rng(24);
    for (int k = 0; k < 100; ++k) {
        const Instance inst = random_instance(rng, {3, 3});
        const std::vector<double> frozen = confidence_targets(inst.out, inst.targets);
        EXPECT_LT(max_fd_error(inst.out,
                               [&](const StageOutput& o, StageGradient* g) {
                                   return coords_loss(o, inst.targets, {}, g, &frozen);
                               }),
                  1e-5);
    }
}

TEST(Gradients, OffsetsLossMatchesFiniteDifferences) {
    std::mt19937_64 rng(25);
    for (int k = 0; k < 100; ++k) {
        const Instance inst = random_instance(rng, {3, 3});
        EXPECT_LT(max_fd_error(inst.out,
                               [&](const StageOutput& o, StageGradient* g) { return offsets_loss(o, inst.targets, g); }),
                  1e-5);
    }
}

TEST(Gradients, TotalLossAccumulates) {
    std::mt19937_64 rng(26);
    const Instance inst = random_instance(rng, {3, 3});
    const std::vector<double> frozen = confidence_targets(inst.out, inst.targets);
    StageGradient parts(inst.out.grid());
    group_loss(inst.out, inst.targets, &parts);
    coords_loss(inst.out, inst.targets, {}, &parts, &frozen);
    offsets_loss(inst.out, inst.targets, &parts);
    StageGradient total(inst.out.grid());
    LossOptions o;
    o.frozen_confidence_targets = &frozen;
    total_loss(inst.out, inst.targets, o, &total);
    for (std::size_t c = 0; c < total.cells().size(); ++c)
        for (int k = 0; k < 8; ++k)
            EXPECT_NEAR(gradient_slot(total.cells()[c], k), gradient_slot(parts.cells()[c], k), 1e-12);
}

TEST(Gradients, FrozenTargetsDifferFromLiveOnes) {
    // With c-bar frozen the box gradient has no IoU term; changing c-bar changes the loss value only.
    TargetGrid t({1, 1});
    t.at(0, 0).occupied = true;
    t.at(0, 0).target_box = {0.5, 0.5, 0.2, 0.2};
    StageOutput out({1, 1});
    out.at(0, 0).box = {0.55, 0.5, 0.2, 0.2};
    out.at(0, 0).confidence = 0.3;
    const std::vector<double> frozen{0.9};
    StageGradient g({1, 1});
    coords_loss(out, t, {}, &g, &frozen);
    EXPECT_NEAR(g.at(0, 0).box[0], 2 * 0.05, 1e-15);
    EXPECT_NEAR(g.at(0, 0).confidence, 2 * 5.0 * (0.3 - 0.9), 1e-15);
}
