#include "odgi/training.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <numeric>
#include <optional>
#include <ostream>
#include <random>

#include <nlohmann/json.hpp>

#include "odgi/synth.hpp"

namespace odgi {

namespace {

constexpr double kForegroundLow = 110.0;
constexpr double kForegroundRange = 70.0;
constexpr double kMassEpsilon = 1e-9;

enum Output { kTx = 0, kTy, kW, kH, kConf, kGroup, kOffW, kOffH };

struct Moments {
    double s0 = 0.0, sx = 0.0, sy = 0.0, sxx = 0.0, syy = 0.0;

    Moments& operator+=(const Moments& o) {
        s0 += o.s0;
        sx += o.sx;
        sy += o.sy;
        sxx += o.sxx;
        syy += o.syy;
        return *this;
    }

    // centroid relative to (ox, oy), then spreads
    void describe(double ox, double oy, double* f) const {
        if (s0 < kMassEpsilon) {
            f[0] = 0.5;
            f[1] = 0.5;
            f[2] = 0.0;
            f[3] = 0.0;
            return;
        }
        const double mx = sx / s0;
        const double my = sy / s0;
        f[0] = mx - ox;
        f[1] = my - oy;
        f[2] = std::sqrt(std::max(0.0, sxx / s0 - mx * mx));
        f[3] = std::sqrt(std::max(0.0, syy / s0 - my * my));
    }
};

const Image& at_resolution(const Image& src, int resolution_px, std::optional<Image>& storage) {
    if (src.width == resolution_px && src.height == resolution_px) return src;
    storage = resample_region(src, {0.5, 0.5, 1.0, 1.0}, resolution_px);
    return *storage;
}

void check_finite(double v, const char* what) {
    if (!std::isfinite(v)) throw DivergenceError(std::string("non-finite ") + what);
}

}  // namespace

ToyFeatures extract_features(const Image& pixels, GridSpec grid) {
    if (pixels.width % grid.cols != 0 || pixels.height % grid.rows != 0 || pixels.width / grid.cols != pixels.height / grid.rows)
        throw std::invalid_argument("image size does not match the grid");
    const int cell_px = pixels.width / grid.cols;
    if (cell_px % 4 != 0) throw std::invalid_argument("cell size must be a multiple of 4 pixels");
    const int block_px = cell_px / 4;
    const double inv_cell = 1.0 / cell_px;

    std::vector<Moments> cell_moments(static_cast<std::size_t>(grid.cells()));
    std::vector<double> blocks(static_cast<std::size_t>(grid.cells()) * 16, 0.0);
    for (int y = 0; y < pixels.height; ++y) {
        const int i = y / cell_px;
        const double yc = (y + 0.5) * inv_cell;
        for (int x = 0; x < pixels.width; ++x) {
            const double m = std::clamp((pixels.at(x, y) - kForegroundLow) / kForegroundRange, 0.0, 1.0);
            if (m == 0.0) continue;
            const int j = x / cell_px;
            const double xc = (x + 0.5) * inv_cell;
            const std::size_t cell = static_cast<std::size_t>(i) * grid.cols + j;
            Moments& mo = cell_moments[cell];
            mo.s0 += m;
            mo.sx += m * xc;
            mo.sy += m * yc;
            mo.sxx += m * xc * xc;
            mo.syy += m * yc * yc;
            const int bi = (y % cell_px) / block_px;
            const int bj = (x % cell_px) / block_px;
            blocks[cell * 16 + bi * 4 + bj] += m;
        }
    }

    Moments total;
    for (const Moments& mo : cell_moments) total += mo;

    ToyFeatures f;
    f.grid = grid;
    f.values.assign(static_cast<std::size_t>(grid.cells()) * ToyFeatures::dim, 0.0);
    const double block_area = static_cast<double>(block_px) * block_px;
    const double cell_area = static_cast<double>(cell_px) * cell_px;
    for (int i = 0; i < grid.rows; ++i) {
        for (int j = 0; j < grid.cols; ++j) {
            const std::size_t cell = static_cast<std::size_t>(i) * grid.cols + j;
            double* v = f.values.data() + cell * ToyFeatures::dim;
            for (int b = 0; b < 16; ++b) v[b] = blocks[cell * 16 + b] / block_area;
            Moments local;
            for (int di = -1; di <= 1; ++di) {
                for (int dj = -1; dj <= 1; ++dj) {
                    const int ni = i + di;
                    const int nj = j + dj;
                    double mean = 0.0;
                    if (ni >= 0 && ni < grid.rows && nj >= 0 && nj < grid.cols) {
                        const Moments& mo = cell_moments[static_cast<std::size_t>(ni) * grid.cols + nj];
                        mean = mo.s0 / cell_area;
                        local += mo;
                    }
                    v[16 + (di + 1) * 3 + (dj + 1)] = mean;
                }
            }
            local.describe(j, i, v + 25);
            total.describe(j, i, v + 29);
            v[29] /= grid.cols;
            v[30] /= grid.rows;
            v[31] /= grid.cols;
            v[32] /= grid.rows;
            v[33] = total.s0 / (cell_area * grid.cells());
        }
    }
    return f;
}

ToyPredictor::ToyPredictor(int resolution_px)
    : resolution_px_(resolution_px), grid_(resolution_to_grid(resolution_px)), params_(kParameterCount, 0.0) {
    auto bias = [&](Output o) -> double& { return params_[o * kRowSize + ToyFeatures::dim]; };
    bias(kTx) = 0.5;
    bias(kTy) = 0.5;
    bias(kW) = 1.0 / grid_.cols;
    bias(kH) = 1.0 / grid_.rows;
    bias(kConf) = logit_for(0.1);
    bias(kGroup) = 0.0;
    bias(kOffW) = offset_logit_for(2.0 / 3.0);
    bias(kOffH) = offset_logit_for(2.0 / 3.0);
}

void ToyPredictor::randomize(std::uint64_t seed, double scale) {
    std::mt19937_64 rng(mix_seed(seed));
    std::uniform_real_distribution<double> u(-scale, scale);
    for (int o = 0; o < kToyOutputs; ++o)
        for (int d = 0; d < ToyFeatures::dim; ++d) params_[o * kRowSize + d] = u(rng);
}

StageOutput ToyPredictor::forward(const ToyFeatures& features) const {
    if (!(features.grid == grid_)) throw std::invalid_argument("feature grid differs from predictor grid");
    StageOutput out(grid_);
    for (int i = 0; i < grid_.rows; ++i) {
        for (int j = 0; j < grid_.cols; ++j) {
            const double* f = features.cell(i, j);
            std::array<double, kToyOutputs> z{};
            for (int o = 0; o < kToyOutputs; ++o) {
                const double* row = params_.data() + o * kRowSize;
                double acc = row[ToyFeatures::dim];
                for (int d = 0; d < ToyFeatures::dim; ++d) acc += row[d] * f[d];
                z[o] = acc;
            }
            CellPrediction& p = out.at(i, j);
            p.box = decode_cell_relative({z[kTx], z[kTy], z[kW], z[kH]}, {i, j}, grid_);
            p.confidence = logistic(z[kConf]);
            p.group_logit = z[kGroup];
            p.offset_logits = {z[kOffW], z[kOffH]};
        }
    }
    return out;
}

void ToyPredictor::backward(const ToyFeatures& features, const StageOutput& out, const StageGradient& grad,
                            std::vector<double>& dparams) const {
    if (!(features.grid == grid_) || !(out.grid() == grid_) || !(grad.grid() == grid_))
        throw std::invalid_argument("grid mismatch in backward pass");
    if (dparams.size() != params_.size()) dparams.assign(params_.size(), 0.0);
    for (int i = 0; i < grid_.rows; ++i) {
        for (int j = 0; j < grid_.cols; ++j) {
            const CellGradient& g = grad.at(i, j);
            const double c = out.at(i, j).confidence;
            // cx = (j + tx) / J, cy = (i + ty) / I
            const std::array<double, kToyOutputs> dz{g.box[0] / grid_.cols, g.box[1] / grid_.rows, g.box[2],
                                                     g.box[3], g.confidence * c * (1.0 - c), g.group_logit,
                                                     g.offset_logits[0], g.offset_logits[1]};
            const double* f = features.cell(i, j);
            for (int o = 0; o < kToyOutputs; ++o) {
                if (dz[o] == 0.0) continue;
                double* row = dparams.data() + o * kRowSize;
                for (int d = 0; d < ToyFeatures::dim; ++d) row[d] += dz[o] * f[d];
                row[ToyFeatures::dim] += dz[o];
            }
        }
    }
}

StageOutput ToyPredictor::detect(const StageInput& input) const {
    if (input.pixels == nullptr) throw std::invalid_argument("toy predictor needs pixels");
    if (input.resolution_px != resolution_px_ || input.pixels->width != resolution_px_)
        throw std::invalid_argument("input resolution differs from predictor resolution");
    return forward(extract_features(*input.pixels, grid_));
}

void TrainConfig::validate() const {
    if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate))
        throw std::invalid_argument("learning rate must be finite and non-negative");
    if (!(lr_decay > 0.0 && lr_decay <= 1.0)) throw std::invalid_argument("lr_decay must lie in (0, 1]");
    if (!(ema_decay >= 0.0 && ema_decay < 1.0)) throw std::invalid_argument("ema_decay must lie in [0, 1)");
    if (epochs < 1 || batch_size < 1 || crop_batch_size < 1 || delay_epochs < 0 || queue_capacity < 1)
        throw std::invalid_argument("training sizes must be positive");
    if (queue_capacity < static_cast<std::size_t>(crop_batch_size))
        throw std::invalid_argument("queue capacity must hold at least one crop batch");
}

Optimizer::Optimizer(OptimizerKind kind, std::size_t parameter_count, double ema_decay)
    : kind_(kind), ema_decay_(ema_decay), m_(parameter_count, 0.0), v_(parameter_count, 0.0),
      avg_(ema_decay > 0.0 ? parameter_count : 0, 0.0) {
    if (!(ema_decay >= 0.0 && ema_decay < 1.0)) throw std::invalid_argument("ema_decay must lie in [0, 1)");
}

void Optimizer::step(std::vector<double>& params, const std::vector<double>& grad, double learning_rate) {
    if (params.size() != m_.size() || grad.size() != m_.size())
        throw std::invalid_argument("optimizer size differs from parameter count");
    ++steps_;
    if (kind_ == OptimizerKind::sgd) {
        for (std::size_t k = 0; k < params.size(); ++k) params[k] -= learning_rate * grad[k];
    } else {
        constexpr double beta1 = 0.9;
        constexpr double beta2 = 0.999;
        constexpr double eps = 1e-8;
        const double c1 = 1.0 - std::pow(beta1, static_cast<double>(steps_));
        const double c2 = 1.0 - std::pow(beta2, static_cast<double>(steps_));
        for (std::size_t k = 0; k < params.size(); ++k) {
            m_[k] = beta1 * m_[k] + (1.0 - beta1) * grad[k];
            v_[k] = beta2 * v_[k] + (1.0 - beta2) * grad[k] * grad[k];
            params[k] -= learning_rate * (m_[k] / c1) / (std::sqrt(v_[k] / c2) + eps);
        }
    }
    for (std::size_t k = 0; k < avg_.size(); ++k) avg_[k] = ema_decay_ * avg_[k] + (1.0 - ema_decay_) * params[k];
}

std::vector<double> Optimizer::averaged(const std::vector<double>& current) const {
    if (avg_.empty() || steps_ == 0) return current;
    if (current.size() != avg_.size()) throw std::invalid_argument("optimizer size differs from parameter count");
    const double correction = 1.0 - std::pow(ema_decay_, static_cast<double>(steps_));
    std::vector<double> out(avg_.size());
    for (std::size_t k = 0; k < out.size(); ++k) out[k] = avg_[k] / correction;
    return out;
}

void Optimizer::restore(std::int64_t steps, std::vector<double> m, std::vector<double> v, std::vector<double> avg) {
    if (steps < 0 || m.size() != m_.size() || v.size() != v_.size() || avg.size() != avg_.size())
        throw std::invalid_argument("optimizer state does not match");
    steps_ = steps;
    m_ = std::move(m);
    v_ = std::move(v);
    avg_ = std::move(avg);
}

ToyPredictor averaged_predictor(const ToyPredictor& predictor, const Optimizer& optimizer) {
    ToyPredictor out = predictor;
    out.parameters() = optimizer.averaged(predictor.parameters());
    return out;
}

namespace {

// Stage loss of one sample with confidence and offset targets frozen at the
// current prediction; accumulates parameter gradients when `dparams` is set.
LossBreakdown sample_loss(const ToyPredictor& predictor, const TrainSample& sample, StageRole role,
                          std::vector<double>* dparams) {
    const StageOutput out = predictor.forward(sample.features);
    TargetGrid targets = sample.targets;
    if (role == StageRole::intermediate) refresh_offset_targets(targets, out);
    const std::vector<double> conf = confidence_targets(out, targets);
    LossOptions options;
    options.role = role;
    options.frozen_confidence_targets = &conf;
    std::optional<StageGradient> grad;
    if (dparams) grad.emplace(out.grid());
    const LossBreakdown b = total_loss(out, targets, options, grad ? &*grad : nullptr);
    check_finite(b.total, "loss");
    if (dparams) predictor.backward(sample.features, out, *grad, *dparams);
    return b;
}

void accumulate(LossBreakdown& into, const LossBreakdown& b, double w = 1.0) {
    into.groups += w * b.groups;
    into.coords += w * b.coords;
    into.offsets += w * b.offsets;
    into.total += w * b.total;
}

}  // namespace

LossBreakdown mean_loss(const ToyPredictor& predictor, std::span<const TrainSample> samples, StageRole role) {
    LossBreakdown sum;
    for (const TrainSample& s : samples) accumulate(sum, sample_loss(predictor, s, role, nullptr));
    LossBreakdown mean;
    if (!samples.empty()) accumulate(mean, sum, 1.0 / static_cast<double>(samples.size()));
    return mean;
}

LossBreakdown train_step(ToyPredictor& predictor, Optimizer& optimizer, std::vector<TrainSample*> batch,
                         StageRole role, double learning_rate) {
    LossBreakdown sum;
    if (batch.empty()) return sum;
    std::vector<double> dparams(predictor.parameters().size(), 0.0);
    for (TrainSample* sample : batch) accumulate(sum, sample_loss(predictor, *sample, role, &dparams));
    const double scale = 1.0 / static_cast<double>(batch.size());
    LossBreakdown mean;
    accumulate(mean, sum, scale);
    for (double& d : dparams) d *= scale;
    auto& params = predictor.parameters();
    optimizer.step(params, dparams, learning_rate);
    for (double p : params) check_finite(p, "parameter");
    return mean;
}

namespace {

std::vector<TrainSample> full_image_samples(const Dataset& data, int resolution_px) {
    if (!data.has_images()) throw std::invalid_argument("training needs rendered images");
    const GridSpec grid = resolution_to_grid(resolution_px);
    std::vector<TrainSample> samples(data.scenes.size());
    for (std::size_t k = 0; k < samples.size(); ++k) {
        std::optional<Image> storage;
        samples[k].features = extract_features(at_resolution(data.images[k], resolution_px, storage), grid);
        samples[k].targets = build_targets(data.scenes[k], grid);
    }
    return samples;
}

std::vector<std::size_t> epoch_order(std::size_t n, std::uint64_t seed, int epoch) {
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::mt19937_64 rng(mix_seed(seed ^ (0x9e3779b97f4a7c15ULL * static_cast<std::uint64_t>(epoch + 1))));
    std::shuffle(order.begin(), order.end(), rng);
    return order;
}

struct Accumulator {
    LossBreakdown sum;
    std::size_t samples = 0;

    void add(const LossBreakdown& mean, std::size_t n) {
        accumulate(sum, mean, static_cast<double>(n));
        samples += n;
    }
    EpochLoss finish(int stage, int epoch, const LossBreakdown& probe) const {
        EpochLoss e{stage, epoch, {}, samples, probe};
        if (samples > 0) accumulate(e.mean, sum, 1.0 / static_cast<double>(samples));
        return e;
    }
};

}  // namespace

void train_stage(ToyPredictor& predictor, const Dataset& data, StageRole role, const TrainConfig& cfg,
                 TrainState& state, const EpochCallback& on_epoch) {
    cfg.validate();
    std::vector<TrainSample> samples = full_image_samples(data, predictor.resolution_px());
    if (state.optimizers.empty()) state.optimizers.emplace_back(cfg.optimizer, predictor.parameters().size(), cfg.ema_decay);
    if (state.optimizers.size() != 1) throw std::invalid_argument("single-stage training needs one optimizer state");
    Optimizer& optimizer = state.optimizers[0];
    for (int epoch = state.epochs_completed; epoch < cfg.epochs; ++epoch) {
        const auto order = epoch_order(samples.size(), cfg.seed, epoch);
        Accumulator acc;
        for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
            std::vector<TrainSample*> batch;
            for (std::size_t k = start; k < std::min(order.size(), start + cfg.batch_size); ++k)
                batch.push_back(&samples[order[k]]);
            acc.add(train_step(predictor, optimizer, batch, role, cfg.epoch_learning_rate(epoch)), batch.size());
        }
        state.history.push_back(acc.finish(0, epoch, mean_loss(averaged_predictor(predictor, optimizer), samples, role)));
        state.epochs_completed = epoch + 1;
        if (on_epoch) on_epoch(state);
    }
}

std::vector<EpochLoss> train_stage(ToyPredictor& predictor, const Dataset& data, StageRole role,
                                   const TrainConfig& cfg) {
    TrainState state;
    train_stage(predictor, data, role, cfg, state);
    predictor = averaged_predictor(predictor, state.optimizers[0]);
    return std::move(state.history);
}

void train_two_stage(ToyPredictor& stage1, ToyPredictor& stage2, const Dataset& data, const TrainConfig& cfg,
                     TrainState& state, const EpochCallback& on_epoch) {
    cfg.validate();
    std::vector<TrainSample> samples = full_image_samples(data, stage1.resolution_px());
    const GridSpec grid2 = stage2.grid();
    BoundedQueue<TrainSample> queue(cfg.queue_capacity);
    if (state.optimizers.empty()) {
        state.optimizers.emplace_back(cfg.optimizer, stage1.parameters().size(), cfg.ema_decay);
        state.optimizers.emplace_back(cfg.optimizer, stage2.parameters().size(), cfg.ema_decay);
    }
    if (state.optimizers.size() != 2) throw std::invalid_argument("two-stage training needs two optimizer states");
    Optimizer& opt1 = state.optimizers[0];
    Optimizer& opt2 = state.optimizers[1];

    auto crop_sample = [&](std::size_t s, const CropRegion& crop) {
        TrainSample item;
        item.features =
            extract_features(resample_region(data.images[s], crop.region, stage2.resolution_px()), grid2);
        item.targets = build_targets(crop_scene(data.scenes[s], crop.region, 0.25), grid2);
        return item;
    };
    std::vector<TrainSample> probe2;
    if (cfg.delay_epochs < cfg.epochs) {
        for (std::size_t s = 0; s < data.scenes.size() && probe2.size() < cfg.probe_crops; ++s) {
            const StageOutput ideal = perfect_oracle(data.scenes[s], stage1.grid());
            for (const CropRegion& crop : extract_crops(ideal, TransitionConfig::training()).crops) {
                if (probe2.size() >= cfg.probe_crops) break;
                probe2.push_back(crop_sample(s, crop));
            }
        }
    }

    for (int epoch = state.epochs_completed; epoch < cfg.epochs; ++epoch) {
        const bool feed_stage2 = epoch >= cfg.delay_epochs;
        const auto order = epoch_order(samples.size(), cfg.seed, epoch);
        Accumulator acc1;
        Accumulator acc2;

        auto consume = [&](std::size_t max_items) {
            std::vector<TrainSample> items;
            TrainSample item;
            while (items.size() < max_items && queue.try_pop(item)) items.push_back(std::move(item));
            std::vector<TrainSample*> batch;
            for (TrainSample& s : items) batch.push_back(&s);
            acc2.add(train_step(stage2, opt2, batch, StageRole::final, cfg.epoch_learning_rate(epoch)), batch.size());
        };

        for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
            const std::size_t end = std::min(order.size(), start + cfg.batch_size);
            std::vector<TrainSample*> batch;
            for (std::size_t k = start; k < end; ++k) batch.push_back(&samples[order[k]]);
            acc1.add(train_step(stage1, opt1, batch, StageRole::intermediate, cfg.epoch_learning_rate(epoch)), batch.size());
            if (!feed_stage2) continue;

            for (std::size_t k = start; k < end; ++k) {
                const std::size_t s = order[k];
                const StageOutput out = stage1.forward(samples[s].features);
                const TransitionResult crops = extract_crops(out, TransitionConfig::training());
                for (const CropRegion& crop : crops.crops) {
                    while (queue.full()) consume(static_cast<std::size_t>(cfg.crop_batch_size));
                    queue.try_push(crop_sample(s, crop));
                }
            }
            while (queue.size() >= static_cast<std::size_t>(cfg.crop_batch_size))
                consume(static_cast<std::size_t>(cfg.crop_batch_size));
        }
        while (!queue.empty()) consume(static_cast<std::size_t>(cfg.crop_batch_size));

        state.history.push_back(
            acc1.finish(0, epoch, mean_loss(averaged_predictor(stage1, opt1), samples, StageRole::intermediate)));
        if (feed_stage2)
            state.history.push_back(
                acc2.finish(1, epoch, mean_loss(averaged_predictor(stage2, opt2), probe2, StageRole::final)));
        state.epochs_completed = epoch + 1;
        if (on_epoch) on_epoch(state);
    }
}

double gradient_check(const ToyPredictor& predictor, const Image& pixels, const GroundTruthScene& scene,
                      std::uint64_t seed, std::size_t min_params) {
    std::optional<Image> storage;
    const ToyFeatures features =
        extract_features(at_resolution(pixels, predictor.resolution_px(), storage), predictor.grid());
    TargetGrid targets = build_targets(scene, predictor.grid());
    const StageOutput base = predictor.forward(features);
    refresh_offset_targets(targets, base);
    const std::vector<double> conf = confidence_targets(base, targets);
    LossOptions options;
    options.role = StageRole::intermediate;
    options.frozen_confidence_targets = &conf;

    StageGradient grad(base.grid());
    total_loss(base, targets, options, &grad);
    std::vector<double> analytic(predictor.parameters().size(), 0.0);
    predictor.backward(features, base, grad, analytic);

    std::vector<std::size_t> indices(analytic.size());
    std::iota(indices.begin(), indices.end(), std::size_t{0});
    std::mt19937_64 rng(mix_seed(seed));
    std::shuffle(indices.begin(), indices.end(), rng);
    indices.resize(std::min(indices.size(), std::max<std::size_t>(min_params, 1)));

    // Losses are sums over cells, so the numeric derivative is summed from
    // per-cell differences; this keeps roundoff at the scale of one cell's loss.
    const GridSpec one{1, 1};
    auto cell_losses = [&](const StageOutput& out) {
        std::vector<double> losses(out.cells().size());
        StageOutput cell_out(one);
        TargetGrid cell_targets(one);
        std::vector<double> cell_conf(1);
        LossOptions cell_options = options;
        cell_options.frozen_confidence_targets = &cell_conf;
        for (std::size_t c = 0; c < losses.size(); ++c) {
            cell_out.cells()[0] = out.cells()[c];
            cell_targets.cells()[0] = targets.cells()[c];
            cell_conf[0] = conf[c];
            losses[c] = total_loss(cell_out, cell_targets, cell_options).total;
        }
        return losses;
    };

    constexpr double h = 1e-6;
    ToyPredictor probe = predictor;
    double worst = 0.0;
    for (std::size_t k : indices) {
        const double p = predictor.parameters()[k];
        probe.parameters()[k] = p + h;
        const std::vector<double> plus = cell_losses(probe.forward(features));
        probe.parameters()[k] = p - h;
        const std::vector<double> minus = cell_losses(probe.forward(features));
        probe.parameters()[k] = p;
        double diff = 0.0;
        for (std::size_t c = 0; c < plus.size(); ++c) diff += plus[c] - minus[c];
        const double numeric = diff / (2.0 * h);
        const double denom = std::max({std::abs(analytic[k]), std::abs(numeric), kGradientCheckFloor});
        worst = std::max(worst, std::abs(analytic[k] - numeric) / denom);
    }
    return worst;
}

namespace {

const char* optimizer_name(OptimizerKind k) { return k == OptimizerKind::adam ? "adam" : "sgd"; }

OptimizerKind optimizer_from_name(const std::string& name) {
    if (name == "adam") return OptimizerKind::adam;
    if (name == "sgd") return OptimizerKind::sgd;
    throw FormatError("unknown optimizer " + name);
}

}  // namespace

void write_checkpoint(std::ostream& out, const Checkpoint& ckpt) {
    nlohmann::json j;
    j["format"] = "odgi-toy";
    j["version"] = kCheckpointVersion;
    j["epochs_completed"] = ckpt.state.epochs_completed;
    j["stages"] = nlohmann::json::array();
    for (std::size_t s = 0; s < ckpt.stages.size(); ++s) {
        const ToyPredictor& p = ckpt.stages[s];
        nlohmann::json stage{
            {"resolution_px", p.resolution_px()}, {"feature_dim", ToyFeatures::dim}, {"parameters", p.parameters()}};
        if (s < ckpt.state.optimizers.size()) {
            const Optimizer& o = ckpt.state.optimizers[s];
            stage["optimizer"] = {{"kind", optimizer_name(o.kind())},
                                  {"ema_decay", o.ema_decay()},
                                  {"steps", o.steps()},
                                  {"m", o.first_moment()},
                                  {"v", o.second_moment()},
                                  {"average", o.average_accumulator()}};
        }
        j["stages"].push_back(std::move(stage));
    }
    j["history"] = nlohmann::json::array();
    for (const EpochLoss& e : ckpt.state.history)
        j["history"].push_back({{"stage", e.stage},
                                {"epoch", e.epoch},
                                {"samples", e.samples},
                                {"total", e.mean.total},
                                {"groups", e.mean.groups},
                                {"coords", e.mean.coords},
                                {"offsets", e.mean.offsets},
                                {"probe_total", e.probe.total},
                                {"probe_groups", e.probe.groups},
                                {"probe_coords", e.probe.coords},
                                {"probe_offsets", e.probe.offsets}});
    out << j.dump(1) << '\n';
}

Checkpoint read_checkpoint(std::istream& in) {
    try {
        const nlohmann::json j = nlohmann::json::parse(in);
        if (j.at("format") != "odgi-toy") throw FormatError("not a toy-predictor checkpoint");
        if (j.at("version").get<int>() != kCheckpointVersion) throw FormatError("unsupported checkpoint version");
        Checkpoint ckpt;
        ckpt.state.epochs_completed = j.at("epochs_completed").get<int>();
        for (const auto& s : j.at("stages")) {
            if (s.at("feature_dim").get<int>() != ToyFeatures::dim) throw FormatError("checkpoint feature size differs");
            ToyPredictor p(s.at("resolution_px").get<int>());
            auto params = s.at("parameters").get<std::vector<double>>();
            if (params.size() != p.parameters().size()) throw FormatError("checkpoint parameter count differs");
            p.parameters() = std::move(params);
            if (s.contains("optimizer")) {
                const auto& o = s.at("optimizer");
                Optimizer opt(optimizer_from_name(o.at("kind").get<std::string>()), p.parameters().size(),
                              o.at("ema_decay").get<double>());
                opt.restore(o.at("steps").get<std::int64_t>(), o.at("m").get<std::vector<double>>(),
                            o.at("v").get<std::vector<double>>(), o.at("average").get<std::vector<double>>());
                ckpt.state.optimizers.push_back(std::move(opt));
            }
            ckpt.stages.push_back(std::move(p));
        }
        if (j.contains("history")) {
            for (const auto& h : j.at("history")) {
                EpochLoss e;
                e.stage = h.at("stage").get<int>();
                e.epoch = h.at("epoch").get<int>();
                e.samples = h.at("samples").get<std::size_t>();
                e.mean.total = h.at("total").get<double>();
                e.mean.groups = h.at("groups").get<double>();
                e.mean.coords = h.at("coords").get<double>();
                e.mean.offsets = h.at("offsets").get<double>();
                e.probe.total = h.at("probe_total").get<double>();
                e.probe.groups = h.at("probe_groups").get<double>();
                e.probe.coords = h.at("probe_coords").get<double>();
                e.probe.offsets = h.at("probe_offsets").get<double>();
                ckpt.state.history.push_back(e);
            }
        }
        return ckpt;
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("bad checkpoint: ") + e.what());
    } catch (const std::invalid_argument& e) {
        throw FormatError(std::string("bad checkpoint: ") + e.what());
    }
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw FormatError("cannot write " + path.string());
    write_checkpoint(out, ckpt);
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FormatError("cannot read " + path.string());
    return read_checkpoint(in);
}

void write_loss_csv(std::ostream& out, const std::vector<EpochLoss>& history) {
    out << "stage,epoch,samples,total,groups,coords,offsets,probe_total\n";
    const auto old_precision = out.precision(12);
    for (const EpochLoss& e : history)
        out << e.stage + 1 << ',' << e.epoch + 1 << ',' << e.samples << ',' << e.mean.total << ',' << e.mean.groups
            << ',' << e.mean.coords << ',' << e.mean.offsets << ',' << e.probe.total << '\n';
    out.precision(old_precision);
}

}  // namespace odgi
