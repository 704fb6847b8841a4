#include "roadnet/tiling.hpp"

#include <cmath>

#include "roadnet/error.hpp"

namespace roadnet {

std::vector<double> tile_positions(double canvas, double tile, double overlap) {
    if (tile <= 0.0) throw Error("tile size must be positive");
    if (overlap < 0.0 || overlap >= tile) throw Error("overlap must be in [0, tile)");
    if (tile >= canvas) return {0.0};
    const double stride = tile - overlap;
    std::vector<double> out;
    double pos = 0.0;
    while (pos + tile <= canvas + 1e-9) {
        out.push_back(pos);
        pos += stride;
    }
    if (out.empty() || out.back() + tile < canvas - 1e-9) {
        out.push_back(canvas - tile);
    }
    return out;
}

std::vector<TileWindow> tile_windows(double canvas_w, double canvas_h, double tile,
                                     double overlap) {
    std::vector<TileWindow> out;
    const auto xs = tile_positions(canvas_w, tile, overlap);
    const auto ys = tile_positions(canvas_h, tile, overlap);
    for (const double y : ys) {
        for (const double x : xs) {
            out.push_back(TileWindow{x, y, std::min(tile, canvas_w), std::min(tile, canvas_h)});
        }
    }
    return out;
}

RoadGraph window_subgraph(const RoadGraph& g, const TileWindow& win) {
    RoadGraph out(win.w, win.h);
    for (const auto& n : g.nodes()) {
        if (n.pos.x >= win.x0 && n.pos.x <= win.x0 + win.w && n.pos.y >= win.y0 &&
            n.pos.y <= win.y0 + win.h) {
            out.add_node_with_id(n.id, n.pos.x - win.x0, n.pos.y - win.y0);
        }
    }
    for (const auto& e : g.edges()) {
        if (out.has_node(e.a) && out.has_node(e.b)) out.add_edge(e.a, e.b);
    }
    return out;
}

RoadGraph shift_graph(const RoadGraph& g, double dx, double dy, double new_w, double new_h) {
    RoadGraph out(new_w, new_h);
    for (const auto& n : g.nodes()) out.add_node_with_id(n.id, n.pos.x + dx, n.pos.y + dy);
    for (const auto& e : g.edges()) out.add_edge(e.a, e.b);
    return out;
}

}  // namespace roadnet
