#pragma once

#include <cstdint>
#include <vector>

#include "roadnet/image.hpp"
#include "roadnet/rng.hpp"
#include "roadnet/road_graph.hpp"

namespace roadnet {

struct SceneSpec {
    double width = 512.0;
    double height = 512.0;
    double pitch = 64.0;           // grid spacing
    double jitter_sigma = 0.0;     // node jitter, clamped at 4 sigma
    double drop_rate = 0.0;        // probability of removing a lattice edge
    double curve_amplitude = 0.0;  // perpendicular bow of each edge, pixels
    double road_brightness = 0.85;
    double background_brightness = 0.15;
    int channels = 1;  // extra channels carry seeded noise
    std::uint64_t seed = 0;
};

struct Scene {
    RoadGraph graph;
    Image image;
};

// Jittered-grid road graph rendered as bright anti-aliased strokes over a
// lightly textured darker background. Deterministic per seed.
Scene generate_scene(const SceneSpec& spec);

struct GapRecord {
    int edge_a = 0;  // original edge endpoints
    int edge_b = 0;
    int stub_p = 0;  // new endpoint ids flanking the removed span
    int stub_q = 0;
    Point p, q;
    double gap_len = 0.0;
};

struct Fragmentation {
    std::vector<GapRecord> gaps;
    RoadGraph residual;
};

// Removes n_breaks centered interior sub-segments of length gap_len from
// distinct eligible edges (both endpoints degree >= 2, long enough to leave
// stubs), creating two new endpoints per break. Junction nodes are never
// touched.
Fragmentation fragment(const RoadGraph& gt, int n_breaks, double gap_len, Rng& rng);

}  // namespace roadnet
