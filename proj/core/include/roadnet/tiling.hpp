#pragma once

#include <vector>

#include "roadnet/road_graph.hpp"

namespace roadnet {

// Window origins along one axis: stride = tile - overlap, plus a final
// flush window when the stride walk does not land exactly on canvas - tile.
std::vector<double> tile_positions(double canvas, double tile, double overlap);

struct TileWindow {
    double x0 = 0.0;
    double y0 = 0.0;
    double w = 0.0;
    double h = 0.0;
};

std::vector<TileWindow> tile_windows(double canvas_w, double canvas_h, double tile,
                                     double overlap);

// Nodes inside the window (inclusive bounds) and edges with both endpoints
// inside, re-expressed in window-local coordinates. Node ids are preserved.
RoadGraph window_subgraph(const RoadGraph& g, const TileWindow& win);

// Copy with all coordinates translated by (dx, dy) into a canvas of the
// given extent.
RoadGraph shift_graph(const RoadGraph& g, double dx, double dy, double new_w, double new_h);

}  // namespace roadnet
