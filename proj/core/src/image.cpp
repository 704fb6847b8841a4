#include "roadnet/image.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

namespace roadnet {

void save_pgm(const Image& img, const std::string& path) {
    if (img.width <= 0 || img.height <= 0 || img.channels < 1) {
        throw Error("cannot save empty image");
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write image file: " + path);
    out << "P5\n" << img.width << " " << img.height << "\n255\n";
    for (int y = 0; y < img.height; ++y) {
        for (int x = 0; x < img.width; ++x) {
            const double v = std::clamp(img.at(0, x, y), 0.0, 1.0);
            out.put(static_cast<char>(std::lround(v * 255.0)));
        }
    }
}

Image load_pgm(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open image file: " + path);
    std::string magic;
    in >> magic;
    if (magic != "P5") throw Error("unsupported image format (expected binary PGM P5): " + path);
    int w = 0, h = 0, maxval = 0;
    // Skip whitespace and '#' comment lines between header tokens.
    auto next_int = [&in, &path]() {
        while (true) {
            const int c = in.peek();
            if (c == '#') {
                std::string line;
                std::getline(in, line);
            } else if (std::isspace(c)) {
                in.get();
            } else {
                break;
            }
        }
        int v = 0;
        if (!(in >> v)) throw Error("truncated PGM header: " + path);
        return v;
    };
    w = next_int();
    h = next_int();
    maxval = next_int();
    if (w <= 0 || h <= 0 || maxval <= 0 || maxval > 255) {
        throw Error("invalid PGM header in " + path);
    }
    in.get();  // single whitespace after maxval
    Image img(w, h, 1);
    std::vector<char> row(static_cast<std::size_t>(w));
    for (int y = 0; y < h; ++y) {
        in.read(row.data(), w);
        if (!in) throw Error("truncated PGM pixel data: " + path);
        for (int x = 0; x < w; ++x) {
            img.at(0, x, y) = static_cast<unsigned char>(row[x]) / static_cast<double>(maxval);
        }
    }
    return img;
}

}  // namespace roadnet
