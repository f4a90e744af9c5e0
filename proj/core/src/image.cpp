#include "odgi/image.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace odgi {

Image resample_region(const Image& src, const Box& region, int size) {
    if (src.empty()) throw std::invalid_argument("cannot resample an empty image");
    if (size <= 0) throw std::invalid_argument("resample size must be positive");
    Image out(size, size);
    const Corners r = region.corners();
    const double step_x = region.w / size;
    const double step_y = region.h / size;
    for (int v = 0; v < size; ++v) {
        const double py = (r.y0 + (v + 0.5) * step_y) * src.height - 0.5;
        const double fy = std::floor(py);
        const double ay = py - fy;
        const int y0 = std::clamp(static_cast<int>(fy), 0, src.height - 1);
        const int y1 = std::clamp(static_cast<int>(fy) + 1, 0, src.height - 1);
        for (int u = 0; u < size; ++u) {
            const double px = (r.x0 + (u + 0.5) * step_x) * src.width - 0.5;
            const double fx = std::floor(px);
            const double ax = px - fx;
            const int x0 = std::clamp(static_cast<int>(fx), 0, src.width - 1);
            const int x1 = std::clamp(static_cast<int>(fx) + 1, 0, src.width - 1);
            const double top = (1.0 - ax) * src.at(x0, y0) + ax * src.at(x1, y0);
            const double bottom = (1.0 - ax) * src.at(x0, y1) + ax * src.at(x1, y1);
            const double value = (1.0 - ay) * top + ay * bottom;
            out.at(u, v) = static_cast<std::uint8_t>(std::clamp(std::lround(value), 0L, 255L));
        }
    }
    return out;
}

}  // namespace odgi
