#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "odgi/dataset.hpp"
#include "odgi/losses.hpp"
#include "odgi/pipeline.hpp"

namespace odgi {

/// splitmix64 finalizer; used to derive independent seeds.
std::uint64_t mix_seed(std::uint64_t x);

enum class ClusteringKind { none, clustered };

struct Clustering {
    ClusteringKind kind = ClusteringKind::none;
    int clusters = 2;      // cluster centers per image
    double spread = 0.03;  // std-dev of member centers around their cluster center
};

struct SceneGenConfig {
    std::uint64_t seed = 0;
    double mean_objects = 3.0;            // Poisson mean
    double mean_size_fraction = 0.00113;  // mean box area as a fraction of the image
    double size_spread = 0.25;            // log-normal sigma of the area
    double aspect_spread = 0.3;           // log aspect ratio ~ U(-a, a)
    Clustering clustering{};
    int image_size_px = 512;
    bool render = true;

    /// Throws std::invalid_argument("infeasible config: ...").
    void validate() const;
};

/// Deterministic scenes. Scene k is drawn from its own generator seeded from
/// mix_seed(seed) ^ k, so nearby seeds give unrelated datasets. Boxes lie
/// inside the unit square.
Dataset generate(const SceneGenConfig& cfg, std::size_t count);
GroundTruthScene generate_scene(const SceneGenConfig& cfg, std::size_t index);
/// Bright rectangles on a textured dark background.
Image render_scene(const GroundTruthScene& scene, int size_px, std::uint64_t seed);

enum class OracleKind { perfect, noisy, resolution_degraded };

struct OracleConfig {
    OracleKind kind = OracleKind::perfect;
    double jitter = 0.0;          // noisy: coordinate std-dev in the stage frame
    double p_drop = 0.0;          // noisy: per-detection drop probability
    double p_spurious = 0.0;      // noisy: per-empty-cell spurious box probability
    double area_threshold_px = 16.0;  // resolution_degraded: minimum visible area in stage pixels
    double margin = kDefaultOffsetMargin;
    double min_visible_fraction = 0.25;
    std::uint64_t seed = 0;

    void validate() const;
};

/// Detector whose output is derived from annotations. Inside a crop it sees
/// the visible parts of the objects; its confidence for a box is the IoU with
/// the unclipped ground truth, so fully visible objects score 1. Intermediate
/// stages emit targets (groups included); the last stage emits, per occupied
/// cell, the object with the largest overlap with that cell.
class OracleDetector final : public Detector {
public:
    explicit OracleDetector(OracleConfig cfg);
    StageOutput detect(const StageInput& input) const override;
    const OracleConfig& config() const { return cfg_; }

private:
    OracleConfig cfg_;
};

/// Full-image intermediate-stage outputs.
StageOutput perfect_oracle(const GroundTruthScene& scene, GridSpec grid);
StageOutput noisy_oracle(const GroundTruthScene& scene, GridSpec grid, const OracleConfig& cfg);
StageOutput resolution_degraded_oracle(const GroundTruthScene& scene, GridSpec grid, int resolution_px,
                                       const OracleConfig& cfg, StageRole role = StageRole::intermediate);

/// Targets recovered from a stage output: occupied iff confidence > 0.
TargetGrid targets_from_output(const StageOutput& out);

}  // namespace odgi
