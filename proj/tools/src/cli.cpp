#include "cli.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "odgi/dataset.hpp"
#include "odgi/metrics.hpp"
#include "odgi/pipeline.hpp"
#include "odgi/synth.hpp"
#include "odgi/training.hpp"

namespace odgi::cli {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

constexpr const char* kToolVersion = "0.1.0";
constexpr const char* kManifestFile = "manifest.json";

void write_file(const fs::path& path, const std::string& content) {
    const fs::path tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw IoError("cannot write " + tmp.string());
        out << content;
        if (!out) throw IoError("write failed: " + tmp.string());
    }
    std::error_code ec;
    fs::rename(tmp, path, ec);
    if (ec) throw IoError("cannot rename " + tmp.string() + ": " + ec.message());
}

json read_json_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot read " + path.string());
    try {
        return json::parse(in);
    } catch (const json::exception& e) {
        throw ConfigError(path.string() + ": " + e.what());
    }
}

void make_output_dir(const fs::path& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec || !fs::is_directory(dir)) throw IoError("cannot create " + dir.string());
}

// Paths inside the manifest are relative to the output directory so that
// two runs into different directories write identical manifests.
void write_manifest(const fs::path& out_dir, const std::string& command, json config, json seeds, json inputs,
                    std::vector<std::string> outputs) {
    json manifest{{"command", command},
                  {"tool_version", kToolVersion},
                  {"formats",
                   {{"annotations", "jsonl"},
                    {"image", "ODGI-IMG v1"},
                    {"checkpoint", {{"format", "odgi-toy"}, {"version", kCheckpointVersion}}}}},
                  {"config", std::move(config)},
                  {"seeds", std::move(seeds)},
                  {"inputs", std::move(inputs)},
                  {"outputs", std::move(outputs)}};
    write_file(out_dir / kManifestFile, manifest.dump(2) + "\n");
}

Dataset load_data(const std::string& dir, bool with_images) {
    if (!fs::is_regular_file(fs::path(dir) / "annotations.jsonl")) throw IoError("no dataset at " + dir);
    return load_dataset(dir, with_images);
}

std::string clustering_name(ClusteringKind k) { return k == ClusteringKind::clustered ? "clustered" : "none"; }

json scene_config_json(const SceneGenConfig& c) {
    return {{"seed", c.seed},
            {"mean_objects", c.mean_objects},
            {"mean_size_fraction", c.mean_size_fraction},
            {"size_spread", c.size_spread},
            {"aspect_spread", c.aspect_spread},
            {"clustering",
             {{"kind", clustering_name(c.clustering.kind)},
              {"clusters", c.clustering.clusters},
              {"spread", c.clustering.spread}}},
            {"image_size_px", c.image_size_px},
            {"render", c.render}};
}

void reject_unknown(const json& j, std::initializer_list<const char*> known, const std::string& where) {
    if (!j.is_object()) throw ConfigError(where + " must be a JSON object");
    for (const auto& item : j.items()) {
        if (std::none_of(known.begin(), known.end(), [&](const char* k) { return item.key() == k; }))
            throw ConfigError("unknown key '" + item.key() + "' in " + where);
    }
}

SceneGenConfig scene_config_from_json(const json& j) {
    SceneGenConfig c;
    reject_unknown(j,
                   {"seed", "mean_objects", "mean_size_fraction", "size_spread", "aspect_spread", "clustering",
                    "image_size_px", "render"},
                   "generator config");
    try {
        c.seed = j.value("seed", c.seed);
        c.mean_objects = j.value("mean_objects", c.mean_objects);
        c.mean_size_fraction = j.value("mean_size_fraction", c.mean_size_fraction);
        c.size_spread = j.value("size_spread", c.size_spread);
        c.aspect_spread = j.value("aspect_spread", c.aspect_spread);
        c.image_size_px = j.value("image_size_px", c.image_size_px);
        c.render = j.value("render", c.render);
        if (j.contains("clustering")) {
            const json& cl = j.at("clustering");
            reject_unknown(cl, {"kind", "clusters", "spread"}, "clustering");
            const std::string kind = cl.value("kind", std::string("none"));
            if (kind == "none") {
                c.clustering.kind = ClusteringKind::none;
            } else if (kind == "clustered") {
                c.clustering.kind = ClusteringKind::clustered;
            } else {
                throw ConfigError("clustering kind must be 'none' or 'clustered'");
            }
            c.clustering.clusters = cl.value("clusters", c.clustering.clusters);
            c.clustering.spread = cl.value("spread", c.clustering.spread);
        }
    } catch (const json::exception& e) {
        throw ConfigError(std::string("generator config: ") + e.what());
    }
    return c;
}

json transition_json(const TransitionConfig& t) {
    return {{"tau_low", t.tau_low}, {"tau_high", t.tau_high}, {"tau_nms", t.tau_nms}, {"gamma", t.gamma}};
}

TransitionConfig transition_from_json(const json& j) {
    TransitionConfig t;
    try {
        t.tau_low = j.at("tau_low").get<double>();
        t.tau_high = j.at("tau_high").get<double>();
        t.tau_nms = j.at("tau_nms").get<double>();
        t.gamma = j.at("gamma").get<int>();
    } catch (const json::exception& e) {
        throw ConfigError(std::string("transition config: ") + e.what());
    }
    return t;
}

const std::map<std::string, AblationKind> kAblations{{"full", AblationKind::full},
                                                     {"no_groups", AblationKind::no_groups},
                                                     {"fixed_offsets", AblationKind::fixed_offsets},
                                                     {"no_offsets", AblationKind::no_offsets}};

const std::map<std::string, OracleKind> kOracles{{"perfect", OracleKind::perfect},
                                                 {"noisy", OracleKind::noisy},
                                                 {"degraded", OracleKind::resolution_degraded}};

PipelineConfig make_pipeline(const std::vector<int>& res, const TransitionConfig& t) {
    if (res.empty()) throw ConfigError("at least one resolution is required");
    PipelineConfig cfg;
    for (std::size_t s = 0; s < res.size(); ++s) {
        StageConfig stage;
        stage.resolution_px = res[s];
        if (s + 1 < res.size()) stage.transition = t;
        cfg.stages.push_back(stage);
    }
    return cfg;
}

// Flags shared by eval and sweep.
struct DetectorArgs {
    std::string data;
    std::string ckpt;
    std::string oracle;
    std::vector<int> res{512, 256};
    OracleConfig oracle_cfg;

    void add_to(CLI::App& app) {
        app.add_option("--data", data, "Dataset directory")->required();
        auto* c = app.add_option("--ckpt", ckpt, "Trained checkpoint (stages and resolutions come from it)");
        auto* o = app.add_option("--oracle", oracle, "Annotation-driven detector")
                      ->check(CLI::IsMember({"perfect", "noisy", "degraded"}));
        c->excludes(o);
        app.add_option("--res", res, "Stage resolutions for oracle runs")->delimiter(',')->capture_default_str();
        app.add_option("--jitter", oracle_cfg.jitter, "noisy: coordinate std-dev")->capture_default_str();
        app.add_option("--p-drop", oracle_cfg.p_drop, "noisy: drop probability")->capture_default_str();
        app.add_option("--p-spurious", oracle_cfg.p_spurious, "noisy: spurious box probability per empty cell")
            ->capture_default_str();
        app.add_option("--area-threshold", oracle_cfg.area_threshold_px, "degraded: minimum visible area (px^2)")
            ->capture_default_str();
        app.add_option("--oracle-seed", oracle_cfg.seed, "Seed of the oracle noise")->capture_default_str();
    }

    json to_json() const {
        json j{{"data", data}};
        if (!ckpt.empty()) {
            j["ckpt"] = ckpt;
        } else {
            j["oracle"] = oracle;
            j["res"] = res;
            j["jitter"] = oracle_cfg.jitter;
            j["p_drop"] = oracle_cfg.p_drop;
            j["p_spurious"] = oracle_cfg.p_spurious;
            j["area_threshold_px"] = oracle_cfg.area_threshold_px;
            j["oracle_seed"] = oracle_cfg.seed;
        }
        return j;
    }
};

struct Detectors {
    std::vector<std::unique_ptr<Detector>> owned;
    std::vector<const Detector*> stages;
    std::vector<int> res;
    bool needs_images = false;
};

Detectors build_detectors(const DetectorArgs& args) {
    Detectors d;
    if (!args.ckpt.empty()) {
        Checkpoint ckpt;
        try {
            ckpt = load_checkpoint(args.ckpt);
        } catch (const FormatError& e) {
            throw IoError(e.what());
        }
        if (ckpt.stages.empty()) throw ConfigError("checkpoint has no stages");
        for (std::size_t s = 0; s < ckpt.stages.size(); ++s) {
            const ToyPredictor& p = ckpt.stages[s];
            auto exported = s < ckpt.state.optimizers.size() ? averaged_predictor(p, ckpt.state.optimizers[s]) : p;
            d.res.push_back(p.resolution_px());
            d.owned.push_back(std::make_unique<ToyPredictor>(std::move(exported)));
        }
        d.needs_images = true;
    } else {
        if (args.oracle.empty()) throw ConfigError("one of --ckpt or --oracle is required");
        OracleConfig oc = args.oracle_cfg;
        oc.kind = kOracles.at(args.oracle);
        try {
            oc.validate();
        } catch (const std::invalid_argument& e) {
            throw ConfigError(e.what());
        }
        d.res = args.res;
        for (std::size_t s = 0; s < d.res.size(); ++s) d.owned.push_back(std::make_unique<OracleDetector>(oc));
    }
    for (const auto& p : d.owned) d.stages.push_back(p.get());
    return d;
}

Dataset load_for(const DetectorArgs& args, const Detectors& d) {
    Dataset data = load_data(args.data, d.needs_images);
    if (d.needs_images && !data.has_images()) throw IoError("dataset " + args.data + " has no images");
    return data;
}

struct GenerateArgs {
    std::string config;
    std::size_t count = 100;
    std::string out;
    std::uint64_t seed = 0;
    bool no_images = false;
};

int cmd_generate(const GenerateArgs& a, bool seed_given, std::ostream& out) {
    SceneGenConfig cfg;
    if (!a.config.empty()) cfg = scene_config_from_json(read_json_file(a.config));
    if (seed_given) cfg.seed = a.seed;
    if (a.no_images) cfg.render = false;
    try {
        cfg.validate();
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }
    const fs::path dir(a.out);
    make_output_dir(dir);
    std::vector<std::string> outputs{"annotations.jsonl"};
    if (cfg.render) outputs.push_back("images/");
    json config = scene_config_json(cfg);
    config["count"] = a.count;
    write_manifest(dir, "generate", config, {{"scenes", cfg.seed}}, json::object(), outputs);

    const Dataset data = generate(cfg, a.count);
    save_dataset(dir, data);
    const DatasetStats stats = dataset_stats(data.scenes);
    std::size_t boxes = 0;
    for (const auto& s : data.scenes) boxes += s.boxes.size();
    out << json{{"scenes", data.scenes.size()},
                {"boxes", boxes},
                {"avg_object_size_fraction", stats.avg_object_size_fraction},
                {"empty_cell_ratio_16", stats.empty_cell_ratio_16}}
               .dump(2)
        << '\n';
    return kOk;
}

struct TrainArgs {
    std::string data;
    std::string out;
    std::string resume;
    int stages = 2;
    std::vector<int> res{512, 256};
    std::string optimizer = "adam";
    TrainConfig cfg;
};

json train_config_json(const TrainArgs& a) {
    const TrainConfig& c = a.cfg;
    return {{"stages", a.stages},
            {"res", a.res},
            {"optimizer", a.optimizer},
            {"learning_rate", c.learning_rate},
            {"lr_decay", c.lr_decay},
            {"ema_decay", c.ema_decay},
            {"epochs", c.epochs},
            {"batch_size", c.batch_size},
            {"crop_batch_size", c.crop_batch_size},
            {"delay_epochs", c.delay_epochs},
            {"queue_capacity", c.queue_capacity},
            {"probe_crops", c.probe_crops}};
}

int cmd_train(TrainArgs a, std::ostream& out) {
    if (a.stages != 1 && a.stages != 2) throw ConfigError("--stages must be 1 or 2");
    if (static_cast<int>(a.res.size()) != a.stages) throw ConfigError("--res needs one resolution per stage");
    a.cfg.optimizer = a.optimizer == "sgd" ? OptimizerKind::sgd : OptimizerKind::adam;
    try {
        a.cfg.validate();
        make_pipeline(a.res, TransitionConfig::training()).validate();
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }

    std::vector<ToyPredictor> stages;
    TrainState state;
    if (!a.resume.empty()) {
        Checkpoint ckpt;
        try {
            ckpt = load_checkpoint(a.resume);
        } catch (const FormatError& e) {
            throw IoError(e.what());
        }
        if (static_cast<int>(ckpt.stages.size()) != a.stages) throw ConfigError("checkpoint stage count differs");
        for (int s = 0; s < a.stages; ++s)
            if (ckpt.stages[s].resolution_px() != a.res[s]) throw ConfigError("checkpoint resolutions differ");
        stages = std::move(ckpt.stages);
        state = std::move(ckpt.state);
    } else {
        for (int r : a.res) stages.emplace_back(r);
    }

    const fs::path dir(a.out);
    make_output_dir(dir);
    json inputs{{"data", a.data}};
    if (!a.resume.empty()) inputs["resume"] = a.resume;
    write_manifest(dir, "train", train_config_json(a), {{"train", a.cfg.seed}}, inputs,
                   {"checkpoint.json", "loss.csv"});

    const Dataset data = load_data(a.data, true);
    if (!data.has_images()) throw IoError("dataset " + a.data + " has no images");

    auto save = [&](const TrainState& st) {
        Checkpoint ckpt{st, stages};
        std::ostringstream c;
        write_checkpoint(c, ckpt);
        write_file(dir / "checkpoint.json", c.str());
        std::ostringstream l;
        write_loss_csv(l, st.history);
        write_file(dir / "loss.csv", l.str());
    };
    if (a.stages == 1) {
        train_stage(stages[0], data, StageRole::final, a.cfg, state, save);
    } else {
        train_two_stage(stages[0], stages[1], data, a.cfg, state, save);
    }
    save(state);

    json last = json::array();
    for (const EpochLoss& e : state.history) {
        if (e.epoch + 1 != state.epochs_completed) continue;
        last.push_back({{"stage", e.stage + 1}, {"total", e.mean.total}, {"probe_total", e.probe.total}});
    }
    out << json{{"epochs_completed", state.epochs_completed}, {"last_epoch", last}}.dump(2) << '\n';
    return kOk;
}

struct EvalArgs {
    DetectorArgs det;
    TransitionConfig transition;
    std::string transition_file;
    std::string ablation = "full";
    double fixed_offset = 2.0 / 3.0;
    std::vector<double> iou{0.5, 0.75};
    std::string out;
};

int cmd_eval(const EvalArgs& a, std::ostream& out) {
    const Detectors d = build_detectors(a.det);
    TransitionConfig t = a.transition;
    if (!a.transition_file.empty()) t = transition_from_json(read_json_file(a.transition_file));
    PipelineConfig cfg = make_pipeline(d.res, t);
    cfg.ablation.kind = kAblations.at(a.ablation);
    cfg.ablation.fixed_offset = a.fixed_offset;
    try {
        cfg.validate();
        for (double v : a.iou)
            if (!(v > 0.0 && v < 1.0)) throw std::invalid_argument("IoU thresholds must lie in (0, 1)");
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }

    const fs::path dir(a.out);
    make_output_dir(dir);
    json config{{"transition", transition_json(t)},
                {"ablation", a.ablation},
                {"fixed_offset", a.fixed_offset},
                {"iou", a.iou},
                {"res", d.res},
                {"final_nms_iou", cfg.final_nms_iou}};
    write_manifest(dir, "eval", config, {{"oracle", a.det.oracle_cfg.seed}}, a.det.to_json(),
                   {"eval.json", "ap.csv", "detections.jsonl"});

    const Dataset data = load_for(a.det, d);
    const EvalResult r = evaluate(data, d.stages, cfg, a.iou);
    const std::string report = eval_report_json(r);
    write_file(dir / "eval.json", report + "\n");
    std::ostringstream ap;
    write_ap_csv(ap, r);
    write_file(dir / "ap.csv", ap.str());
    std::ostringstream dets;
    write_detections_jsonl(dets, r.detections);
    write_file(dir / "detections.jsonl", dets.str());
    out << report << '\n';
    return kOk;
}

struct SweepArgs {
    DetectorArgs det;
    bool from_paper = false;
    std::vector<double> tau_low{0.0};
    std::vector<double> tau_high{1.0};
    std::vector<double> tau_nms{0.5};
    std::vector<int> gamma{1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
    std::string out;
};

int cmd_sweep(const SweepArgs& a, std::ostream& out) {
    const Detectors d = build_detectors(a.det);
    if (d.res.size() < 2) throw ConfigError("a sweep needs at least two stages");
    SweepGrid grid = a.from_paper ? SweepGrid::standard(a.gamma) : SweepGrid{a.tau_low, a.tau_high, a.tau_nms, a.gamma};
    PipelineConfig base = make_pipeline(d.res, TransitionConfig{});
    try {
        base.validate();
        for (int g : grid.gamma)
            if (g < 1) throw std::invalid_argument("gamma must be >= 1");
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }

    const fs::path dir(a.out);
    make_output_dir(dir);
    json config{{"grid_from_paper", a.from_paper},
                {"tau_low", grid.tau_low},
                {"tau_high", grid.tau_high},
                {"tau_nms", grid.tau_nms},
                {"gamma", grid.gamma},
                {"res", d.res}};
    write_manifest(dir, "sweep", config, {{"oracle", a.det.oracle_cfg.seed}}, a.det.to_json(),
                   {"sweep.csv", "best.json"});

    const Dataset data = load_for(a.det, d);
    SweepResult result;
    try {
        result = hyperparameter_sweep(data, d.stages, base, grid);
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }
    std::ostringstream csv;
    write_sweep_csv(csv, result);
    write_file(dir / "sweep.csv", csv.str());
    const SweepRow& best = result.best_row();
    json b = transition_json(best.transition);
    b["map50"] = best.map50;
    b["map75"] = best.map75;
    b["max_boxes"] = best.max_boxes;
    b["pixels"] = best.pixels;
    write_file(dir / "best.json", b.dump(2) + "\n");
    out << json{{"rows", result.rows.size()}, {"best", b}}.dump(2) << '\n';
    return kOk;
}

struct BudgetArgs {
    int res1 = 512;
    int res2 = 0;
    int gamma = 0;
    std::string out;
};

int cmd_budget(const BudgetArgs& a, std::ostream& out) {
    PipelineConfig cfg;
    try {
        if (a.res2 > 0) {
            if (a.gamma < 1) throw std::invalid_argument("--gamma must be >= 1 for two stages");
            TransitionConfig t;
            t.gamma = a.gamma;
            cfg = PipelineConfig::two_stage(a.res1, a.res2, t);
        } else {
            cfg = PipelineConfig::single_stage(a.res1);
        }
        cfg.validate();
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }
    const json report{{"max_boxes", box_budget(cfg)}, {"pixels", pixel_budget(cfg)}};
    if (!a.out.empty()) {
        const fs::path dir(a.out);
        make_output_dir(dir);
        write_manifest(dir, "budget", {{"res1", a.res1}, {"res2", a.res2}, {"gamma", a.gamma}}, json::object(),
                       json::object(), {"budget.json"});
        write_file(dir / "budget.json", report.dump(2) + "\n");
    }
    out << report.dump(2) << '\n';
    return kOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Grouped-instance detection cascade: data, training, evaluation and budgets", "odgi"};
    app.require_subcommand(1);
    app.set_version_flag("--version", kToolVersion);

    GenerateArgs gen;
    auto* generate = app.add_subcommand("generate", "Write synthetic scenes (annotations.jsonl, images/)");
    generate->add_option("--config", gen.config,
                         "Generator config JSON; missing keys keep their defaults: seed 0, mean_objects 3, "
                         "mean_size_fraction 0.00113, size_spread 0.25, aspect_spread 0.3, "
                         "clustering {kind none, clusters 2, spread 0.03}, image_size_px 512, render true");
    generate->add_option("--count", gen.count, "Number of scenes")->capture_default_str();
    generate->add_option("--out", gen.out, "Output directory")->required();
    auto* gen_seed = generate->add_option("--seed", gen.seed, "Overrides the config seed");
    generate->add_flag("--no-images", gen.no_images, "Annotations only");

    TrainArgs tr;
    auto* train = app.add_subcommand("train", "Train the toy cascade; writes checkpoint.json and loss.csv");
    train->add_option("--data", tr.data, "Dataset directory (with images)")->required();
    train->add_option("--out", tr.out, "Output directory")->required();
    train->add_option("--stages", tr.stages, "1 or 2")->capture_default_str();
    train->add_option("--res", tr.res, "Resolution per stage")->delimiter(',')->capture_default_str();
    train->add_option("--resume", tr.resume, "Continue from this checkpoint");
    train->add_option("--optimizer", tr.optimizer, "adam or sgd")
        ->check(CLI::IsMember({"adam", "sgd"}))
        ->capture_default_str();
    train->add_option("--lr", tr.cfg.learning_rate, "Learning rate")->capture_default_str();
    train->add_option("--lr-decay", tr.cfg.lr_decay, "Per-epoch learning-rate factor")->capture_default_str();
    train->add_option("--ema", tr.cfg.ema_decay, "Parameter averaging decay (0 = off)")->capture_default_str();
    train->add_option("--epochs", tr.cfg.epochs, "Epochs")->capture_default_str();
    train->add_option("--batch", tr.cfg.batch_size, "Scenes per stage-1 step")->capture_default_str();
    train->add_option("--crop-batch", tr.cfg.crop_batch_size, "Crops per stage-2 step")->capture_default_str();
    train->add_option("--delay", tr.cfg.delay_epochs, "Epochs before stage 2 starts")->capture_default_str();
    train->add_option("--queue", tr.cfg.queue_capacity, "Crop queue capacity")->capture_default_str();
    train->add_option("--probe-crops", tr.cfg.probe_crops, "Size of the stage-2 probe set")->capture_default_str();
    train->add_option("--seed", tr.cfg.seed, "Shuffle seed")->capture_default_str();

    EvalArgs ev;
    auto* eval = app.add_subcommand("eval", "Run the cascade and report mAP and cost");
    ev.det.add_to(*eval);
    eval->add_option("--iou", ev.iou, "IoU thresholds")->delimiter(',')->capture_default_str();
    eval->add_option("--tau-low", ev.transition.tau_low, "Discard threshold")->capture_default_str();
    eval->add_option("--tau-high", ev.transition.tau_high, "Early-exit threshold")->capture_default_str();
    eval->add_option("--tau-nms", ev.transition.tau_nms, "Crop NMS IoU")->capture_default_str();
    eval->add_option("--gamma", ev.transition.gamma, "Crops per image")->capture_default_str();
    eval->add_option("--transition", ev.transition_file, "Thresholds from a sweep's best.json");
    eval->add_option("--ablation", ev.ablation, "full, no_groups, fixed_offsets or no_offsets")
        ->check(CLI::IsMember({"full", "no_groups", "fixed_offsets", "no_offsets"}))
        ->capture_default_str();
    eval->add_option("--fixed-offset", ev.fixed_offset, "Offset for fixed_offsets")->capture_default_str();
    eval->add_option("--out", ev.out, "Output directory")->required();

    SweepArgs sw;
    auto* sweep = app.add_subcommand("sweep", "Grid search over the transition thresholds");
    sw.det.add_to(*sweep);
    auto* paper = sweep->add_flag("--grid-from-paper", sw.from_paper,
                                  "tau_low {0..0.4}, tau_high {0.6..1}, tau_nms {0.25,0.5,0.75}");
    auto* lo = sweep->add_option("--tau-low", sw.tau_low, "Values")->delimiter(',')->capture_default_str();
    auto* hi = sweep->add_option("--tau-high", sw.tau_high, "Values")->delimiter(',')->capture_default_str();
    auto* nm = sweep->add_option("--tau-nms", sw.tau_nms, "Values")->delimiter(',')->capture_default_str();
    paper->excludes(lo)->excludes(hi)->excludes(nm);
    sweep->add_option("--gamma", sw.gamma, "Values")->delimiter(',')->capture_default_str();
    sweep->add_option("--out", sw.out, "Output directory")->required();

    BudgetArgs bu;
    auto* budget = app.add_subcommand("budget", "Box and pixel budgets");
    budget->add_option("--res1", bu.res1, "First-stage resolution")->capture_default_str();
    auto* r2 = budget->add_option("--res2", bu.res2, "Second-stage resolution (omit for one stage)");
    budget->add_option("--gamma", bu.gamma, "Crops per image")->needs(r2);
    budget->add_option("--out", bu.out, "Also write budget.json and a manifest here");

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(std::move(reversed));
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kOk : kConfigError;
    }

    try {
        if (generate->parsed()) return cmd_generate(gen, gen_seed->count() > 0, out);
        if (train->parsed()) return cmd_train(tr, out);
        if (eval->parsed()) return cmd_eval(ev, out);
        if (sweep->parsed()) return cmd_sweep(sw, out);
        if (budget->parsed()) return cmd_budget(bu, out);
    } catch (const ConfigError& e) {
        err << "config error: " << e.what() << '\n';
        return kConfigError;
    } catch (const DivergenceError& e) {
        err << "numeric failure: " << e.what() << '\n';
        return kNumericError;
    } catch (const IoError& e) {
        err << "i/o error: " << e.what() << '\n';
        return kIoError;
    } catch (const FormatError& e) {
        err << "i/o error: " << e.what() << '\n';
        return kIoError;
    } catch (const fs::filesystem_error& e) {
        err << "i/o error: " << e.what() << '\n';
        return kIoError;
    } catch (const std::invalid_argument& e) {
        err << "config error: " << e.what() << '\n';
        return kConfigError;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kFailure;
    }
    return kFailure;
}

}  // namespace odgi::cli
