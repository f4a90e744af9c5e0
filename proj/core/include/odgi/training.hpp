#pragma once

#include <cmath>
#include <cstdint>
#include <deque>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "odgi/dataset.hpp"
#include "odgi/losses.hpp"
#include "odgi/pipeline.hpp"

namespace odgi {

/// Per-cell features of a stage input (row-major cells, `dim` values each).
///
/// Pixels are mapped to a foreground weight m = clamp((p - 110) / 70, 0, 1).
/// Per cell: 4x4 sub-block means of m, the 3x3 neighbourhood cell means,
/// centroid and spread of m over the neighbourhood (cell units, relative to
/// the cell origin), centroid and spread of m over the whole input (input
/// units, centroid relative to the cell origin) and the global mean of m.
struct ToyFeatures {
    GridSpec grid{};
    std::vector<double> values;

    static constexpr int dim = 34;
    const double* cell(int i, int j) const { return values.data() + (static_cast<std::size_t>(i) * grid.cols + j) * dim; }
};

ToyFeatures extract_features(const Image& pixels, GridSpec grid);

inline constexpr int kToyOutputs = 8;  // tx, ty, w, h, c-logit, g-logit, o_w-logit, o_h-logit

/// Affine map from cell features to the eight raw outputs, shared by all
/// cells. Box centers decode through the cell-relative encoding; the
/// confidence goes through the logistic.
class ToyPredictor final : public Detector {
public:
    static constexpr std::size_t kRowSize = ToyFeatures::dim + 1;  // weights then bias
    static constexpr std::size_t kParameterCount = kToyOutputs * kRowSize;

    /// Zero weights; biases give c = 0.1, g = 0.5, o = 2/3 and a cell-sized box
    /// centered in its cell.
    explicit ToyPredictor(int resolution_px);

    int resolution_px() const { return resolution_px_; }
    GridSpec grid() const { return grid_; }
    std::vector<double>& parameters() { return params_; }
    const std::vector<double>& parameters() const { return params_; }

    /// Uniform weights in [-scale, scale] (biases unchanged); for tests.
    void randomize(std::uint64_t seed, double scale);

    StageOutput forward(const ToyFeatures& features) const;
    /// Accumulates d(loss)/d(parameters) into `dparams` given the loss gradient
    /// with respect to the stage output produced by forward(features).
    void backward(const ToyFeatures& features, const StageOutput& out, const StageGradient& grad,
                  std::vector<double>& dparams) const;

    /// Needs input.pixels at input.resolution_px.
    StageOutput detect(const StageInput& input) const override;

private:
    int resolution_px_;
    GridSpec grid_;
    std::vector<double> params_;
};

/// Thrown when a loss or parameter becomes NaN or infinite.
class DivergenceError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class OptimizerKind { adam, sgd };

struct TrainConfig {
    OptimizerKind optimizer = OptimizerKind::adam;
    double learning_rate = 1e-3;
    double lr_decay = 1.0;   // learning rate of epoch e is learning_rate * lr_decay^e
    double ema_decay = 0.0;  // per-step decay of the parameter average; 0 disables it
    int epochs = 10;
    int batch_size = 1;        // scenes per stage-1 step
    int crop_batch_size = 10;  // crops per stage-2 step
    int delay_epochs = 3;      // n_e
    std::size_t queue_capacity = 64;
    std::size_t probe_crops = 1000;  // size of the fixed stage-2 probe set
    std::uint64_t seed = 0;

    void validate() const;
    double epoch_learning_rate(int epoch) const { return learning_rate * std::pow(lr_decay, epoch); }
};

/// One training sample: a stage input and its targets.
struct TrainSample {
    ToyFeatures features;
    TargetGrid targets;
};

struct EpochLoss {
    int stage = 0;
    int epoch = 0;
    LossBreakdown mean;   // running mean over the epoch's training samples
    std::size_t samples = 0;
    LossBreakdown probe;  // mean over the fixed probe set after the epoch
};

/// Mean stage loss over `samples` (targets refreshed as in train_step).
LossBreakdown mean_loss(const ToyPredictor& predictor, std::span<const TrainSample> samples, StageRole role);

/// Adam (beta1 0.9, beta2 0.999, eps 1e-8) or plain gradient descent, with
/// an optional bias-corrected exponential moving average of the parameters.
class Optimizer {
public:
    Optimizer(OptimizerKind kind, std::size_t parameter_count, double ema_decay = 0.0);

    void step(std::vector<double>& params, const std::vector<double>& grad, double learning_rate);

    OptimizerKind kind() const { return kind_; }
    double ema_decay() const { return ema_decay_; }
    std::int64_t steps() const { return steps_; }
    const std::vector<double>& first_moment() const { return m_; }
    const std::vector<double>& second_moment() const { return v_; }
    const std::vector<double>& average_accumulator() const { return avg_; }
    void restore(std::int64_t steps, std::vector<double> m, std::vector<double> v, std::vector<double> avg);

    /// The averaged parameters, or `current` when averaging is off or no step was taken.
    std::vector<double> averaged(const std::vector<double>& current) const;

private:
    OptimizerKind kind_;
    double ema_decay_;
    std::int64_t steps_ = 0;
    std::vector<double> m_;
    std::vector<double> v_;
    std::vector<double> avg_;
};

/// `predictor` with the optimizer's averaged parameters.
ToyPredictor averaged_predictor(const ToyPredictor& predictor, const Optimizer& optimizer);

/// One update on `batch`. The loss of each sample is the stage loss with
/// confidence and offset targets taken from the current predictions and held
/// constant; the gradient is the mean over the batch.
LossBreakdown train_step(ToyPredictor& predictor, Optimizer& optimizer, std::vector<TrainSample*> batch,
                         StageRole role, double learning_rate);

/// FIFO with a fixed capacity; push fails when full, pop fails when empty.
template <typename T>
class BoundedQueue {
public:
    explicit BoundedQueue(std::size_t capacity) : capacity_(capacity) {
        if (capacity == 0) throw std::invalid_argument("queue capacity must be positive");
    }
    bool try_push(T value) {
        if (items_.size() >= capacity_) return false;
        items_.push_back(std::move(value));
        return true;
    }
    bool try_pop(T& out) {
        if (items_.empty()) return false;
        out = std::move(items_.front());
        items_.pop_front();
        return true;
    }
    std::size_t size() const { return items_.size(); }
    std::size_t capacity() const { return capacity_; }
    bool empty() const { return items_.empty(); }
    bool full() const { return items_.size() >= capacity_; }

private:
    std::size_t capacity_;
    std::deque<T> items_;
};

struct TrainState {
    int epochs_completed = 0;
    std::vector<EpochLoss> history;
    std::vector<Optimizer> optimizers;  // one per stage; created on first use
};

using EpochCallback = std::function<void(const TrainState&)>;

/// Trains a single stage on full images, shuffling scenes every epoch. Images
/// must be available. With averaging enabled the predictor ends with the
/// averaged parameters.
std::vector<EpochLoss> train_stage(ToyPredictor& predictor, const Dataset& data, StageRole role,
                                   const TrainConfig& cfg);

/// Resumable form: continues from state.epochs_completed and leaves the
/// predictor with its raw (not averaged) parameters.
void train_stage(ToyPredictor& predictor, const Dataset& data, StageRole role, const TrainConfig& cfg,
                 TrainState& state, const EpochCallback& on_epoch = {});

/// Delayed two-stage training. Stage 1 trains alone for delay_epochs; from
/// then on every stage-1 batch's training-mode crops go through a bounded
/// queue to stage 2, whose targets come from the ground truth restricted to
/// each crop. Probe losses: stage 1 on every training scene, stage 2 on the
/// training-mode crops of a perfect first stage (at most cfg.probe_crops,
/// taken scene by scene), both with the averaged parameters. The queue is
/// drained at the end of every epoch, so the state between epochs is the
/// parameters plus the optimizer state. Training resumes from
/// state.epochs_completed; `on_epoch` runs after each epoch.
void train_two_stage(ToyPredictor& stage1, ToyPredictor& stage2, const Dataset& data, const TrainConfig& cfg,
                     TrainState& state, const EpochCallback& on_epoch = {});

/// Gradients smaller than this are compared in absolute terms: at step 1e-6
/// the central difference of a per-cell loss of order 1 carries roundoff of
/// order 1e-9.
inline constexpr double kGradientCheckFloor = 1e-3;

/// Central finite differences (step 1e-6) on min(min_params, all) randomly
/// chosen parameters of the intermediate-stage loss with frozen targets.
/// Returns the maximum of |analytic - numeric| / max(|analytic|, |numeric|, floor).
double gradient_check(const ToyPredictor& predictor, const Image& pixels, const GroundTruthScene& scene,
                      std::uint64_t seed, std::size_t min_params = 200);

// Checkpoints: {"format": "odgi-toy", "version": 1, "epochs_completed": n,
// "stages": [{"resolution_px": r, "feature_dim": d, "parameters": [...],
// "optimizer": {"kind", "ema_decay", "steps", "m", "v", "average"}}, ...],
// "history": [...]}
inline constexpr int kCheckpointVersion = 1;

struct Checkpoint {
    TrainState state;
    std::vector<ToyPredictor> stages;
};

void write_checkpoint(std::ostream& out, const Checkpoint& ckpt);
Checkpoint read_checkpoint(std::istream& in);
void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::filesystem::path& path);

/// Columns: stage,epoch,samples,total,groups,coords,offsets,probe_total
void write_loss_csv(std::ostream& out, const std::vector<EpochLoss>& history);

}  // namespace odgi
