#pragma once

#include <filesystem>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

#include "odgi/grouping.hpp"
#include "odgi/image.hpp"

namespace odgi {

/// Scenes with optional rendered images (either empty or one per scene).
struct Dataset {
    std::vector<GroundTruthScene> scenes;
    std::vector<Image> images;

    bool has_images() const { return !images.empty(); }
    const Image* image(std::size_t k) const { return has_images() ? &images[k] : nullptr; }
};

/// Raised for unreadable or malformed files.
class FormatError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Annotation lines: {"image_id": ..., "boxes": [{"cx":..,"cy":..,"w":..,"h":..}, ...]}
std::string annotation_line(const GroundTruthScene& scene);
GroundTruthScene parse_annotation_line(const std::string& line);
void write_annotations(std::ostream& out, const std::vector<GroundTruthScene>& scenes);
std::vector<GroundTruthScene> read_annotations(std::istream& in);

// Images: "ODGI-IMG v1\n<width> <height>\n" followed by row-major 8-bit pixels.
void write_image(std::ostream& out, const Image& image);
Image read_image(std::istream& in);

/// Directory layout: annotations.jsonl plus images/<image_id>.img.
void save_dataset(const std::filesystem::path& dir, const Dataset& dataset);
/// Loads images when the images/ directory exists. Image sizes are recorded
/// in each scene's image_size_px.
Dataset load_dataset(const std::filesystem::path& dir, bool with_images = true);

}  // namespace odgi
