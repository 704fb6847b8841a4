#pragma once

#include <string>
#include <vector>

#include "roadnet/error.hpp"

namespace roadnet {

// Planar multi-channel raster image with values in [0,1].
struct Image {
    int width = 0;
    int height = 0;
    int channels = 1;
    std::vector<double> data;  // [c][y][x]

    Image() = default;
    Image(int w, int h, int c = 1)
        : width(w), height(h), channels(c), data(static_cast<std::size_t>(w) * h * c, 0.0) {}

    bool in_bounds(int x, int y) const { return x >= 0 && x < width && y >= 0 && y < height; }

    double at(int c, int x, int y) const {
        return data[(static_cast<std::size_t>(c) * height + y) * width + x];
    }
    double& at(int c, int x, int y) {
        return data[(static_cast<std::size_t>(c) * height + y) * width + x];
    }
};

// Channel 0 as 8-bit binary PGM (P5).
void save_pgm(const Image& img, const std::string& path);
Image load_pgm(const std::string& path);

}  // namespace roadnet
