#include "odgi/dataset.hpp"

#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include <nlohmann/json.hpp>

namespace odgi {

namespace {

constexpr const char* kImageMagic = "ODGI-IMG v1";
constexpr const char* kAnnotationFile = "annotations.jsonl";
constexpr const char* kImageDir = "images";

std::filesystem::path image_path(const std::filesystem::path& dir, const std::string& id) {
    return dir / kImageDir / (id + ".img");
}

}  // namespace

std::string annotation_line(const GroundTruthScene& scene) {
    nlohmann::json boxes = nlohmann::json::array();
    for (const Box& b : scene.boxes) boxes.push_back({{"cx", b.cx}, {"cy", b.cy}, {"w", b.w}, {"h", b.h}});
    nlohmann::json j;
    j["image_id"] = scene.image_id;
    j["boxes"] = std::move(boxes);
    return j.dump();
}

GroundTruthScene parse_annotation_line(const std::string& line) {
    try {
        const nlohmann::json j = nlohmann::json::parse(line);
        GroundTruthScene scene;
        scene.image_id = j.at("image_id").get<std::string>();
        for (const auto& b : j.at("boxes")) {
            Box box{b.at("cx").get<double>(), b.at("cy").get<double>(), b.at("w").get<double>(), b.at("h").get<double>()};
            if (box.w < 0.0 || box.h < 0.0) throw FormatError("negative box size in " + scene.image_id);
            scene.boxes.push_back(box);
        }
        return scene;
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("bad annotation line: ") + e.what());
    }
}

void write_annotations(std::ostream& out, const std::vector<GroundTruthScene>& scenes) {
    for (const GroundTruthScene& s : scenes) out << annotation_line(s) << '\n';
}

std::vector<GroundTruthScene> read_annotations(std::istream& in) {
    std::vector<GroundTruthScene> scenes;
    std::string line;
    while (std::getline(in, line)) {
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        scenes.push_back(parse_annotation_line(line));
    }
    return scenes;
}

void write_image(std::ostream& out, const Image& image) {
    out << kImageMagic << '\n' << image.width << ' ' << image.height << '\n';
    out.write(reinterpret_cast<const char*>(image.pixels.data()), static_cast<std::streamsize>(image.pixels.size()));
}

Image read_image(std::istream& in) {
    std::string magic;
    if (!std::getline(in, magic) || magic != kImageMagic) throw FormatError("missing image header");
    std::string dims;
    if (!std::getline(in, dims)) throw FormatError("missing image dimensions");
    std::istringstream ds(dims);
    int w = 0;
    int h = 0;
    if (!(ds >> w >> h) || w <= 0 || h <= 0) throw FormatError("bad image dimensions");
    Image image(w, h);
    in.read(reinterpret_cast<char*>(image.pixels.data()), static_cast<std::streamsize>(image.pixels.size()));
    if (in.gcount() != static_cast<std::streamsize>(image.pixels.size())) throw FormatError("truncated image data");
    return image;
}

void save_dataset(const std::filesystem::path& dir, const Dataset& dataset) {
    std::filesystem::create_directories(dir);
    {
        std::ofstream out(dir / kAnnotationFile, std::ios::binary);
        if (!out) throw FormatError("cannot write " + (dir / kAnnotationFile).string());
        write_annotations(out, dataset.scenes);
    }
    if (!dataset.has_images()) return;
    std::filesystem::create_directories(dir / kImageDir);
    for (std::size_t k = 0; k < dataset.scenes.size(); ++k) {
        const auto path = image_path(dir, dataset.scenes[k].image_id);
        std::ofstream out(path, std::ios::binary);
        if (!out) throw FormatError("cannot write " + path.string());
        write_image(out, dataset.images[k]);
    }
}

Dataset load_dataset(const std::filesystem::path& dir, bool with_images) {
    Dataset dataset;
    std::ifstream in(dir / kAnnotationFile, std::ios::binary);
    if (!in) throw FormatError("cannot read " + (dir / kAnnotationFile).string());
    dataset.scenes = read_annotations(in);
    if (!with_images || !std::filesystem::is_directory(dir / kImageDir)) return dataset;
    dataset.images.reserve(dataset.scenes.size());
    for (GroundTruthScene& scene : dataset.scenes) {
        const auto path = image_path(dir, scene.image_id);
        std::ifstream img(path, std::ios::binary);
        if (!img) throw FormatError("cannot read " + path.string());
        dataset.images.push_back(read_image(img));
        scene.image_size_px = dataset.images.back().width;
    }
    return dataset;
}

}  // namespace odgi
