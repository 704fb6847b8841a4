#include <algorithm>
#include <bit>
#include <cmath>

#include "roadnet/road_graph.hpp"

namespace roadnet {

RasterMap::RasterMap(int width, int height) : width_(width), height_(height) {
    if (width < 0 || height < 0) throw Error("negative raster dimensions");
    bits_.assign((static_cast<std::size_t>(width) * height + 63) / 64, 0);
}

bool RasterMap::get(int x, int y) const {
    if (!in_bounds(x, y)) return false;
    const std::size_t i = static_cast<std::size_t>(y) * width_ + x;
    return (bits_[i >> 6] >> (i & 63)) & 1u;
}

void RasterMap::set(int x, int y) {
    if (!in_bounds(x, y)) return;
    const std::size_t i = static_cast<std::size_t>(y) * width_ + x;
    bits_[i >> 6] |= std::uint64_t{1} << (i & 63);
}

std::size_t RasterMap::count_set() const {
    std::size_t n = 0;
    for (const auto w : bits_) n += static_cast<std::size_t>(std::popcount(w));
    return n;
}

RasterMap rasterize(const RoadGraph& g, double line_width, int width, int height) {
    if (line_width <= 0.0) throw Error("line width must be positive");
    RasterMap out(width, height);
    const double radius = line_width / 2.0;
    for (const auto& e : g.edges()) {
        const Point a = g.node_pos(e.a);
        const Point b = g.node_pos(e.b);
        const int x0 = std::max(0, static_cast<int>(std::floor(std::min(a.x, b.x) - radius - 1.0)));
        const int x1 = std::min(width - 1, static_cast<int>(std::ceil(std::max(a.x, b.x) + radius + 1.0)));
        const int y0 = std::max(0, static_cast<int>(std::floor(std::min(a.y, b.y) - radius - 1.0)));
        const int y1 = std::min(height - 1, static_cast<int>(std::ceil(std::max(a.y, b.y) + radius + 1.0)));
        for (int y = y0; y <= y1; ++y) {
            for (int x = x0; x <= x1; ++x) {
                const Point center{x + 0.5, y + 0.5};
                if (point_segment_distance(center, a, b) <= radius) out.set(x, y);
            }
        }
    }
    return out;
}

}  // namespace roadnet
