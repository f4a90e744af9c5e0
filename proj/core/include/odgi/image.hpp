#pragma once

#include <cstdint>
#include <vector>

#include "odgi/box.hpp"

namespace odgi {

/// Single-channel 8-bit image, row-major.
struct Image {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> pixels;

    Image() = default;
    Image(int w, int h, std::uint8_t fill = 0)
        : width(w), height(h), pixels(static_cast<std::size_t>(w) * static_cast<std::size_t>(h), fill) {}

    bool empty() const { return pixels.empty(); }
    std::uint8_t at(int x, int y) const { return pixels[static_cast<std::size_t>(y) * width + x]; }
    std::uint8_t& at(int x, int y) { return pixels[static_cast<std::size_t>(y) * width + x]; }

    friend bool operator==(const Image&, const Image&) = default;
};

/// Bilinearly resample `region` (normalized image frame) of `src` to a
/// size x size image. Samples outside the source clamp to its border.
Image resample_region(const Image& src, const Box& region, int size);

}  // namespace odgi
