#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "roadnet/road_graph.hpp"

namespace roadnet {

struct TopoConfig {
    double seed_spacing = 20.0;
    double match_radius = 8.0;
    double angle_tolerance = 30.0;      // degrees, undirected tangents
    double propagation_radius = 100.0;  // arc length along the graph
    double hole_spacing = 5.0;
};

enum class AplsCombine { harmonic, paper_verbatim };

struct AplsConfig {
    double snap_radius = 8.0;
    double densify_spacing = 10.0;
    int exhaustive_cap = 50;  // exhaustive pairs up to this many source nodes
    int samples = 500;        // sampled pairs beyond the cap
    std::uint64_t seed = 1234;
    AplsCombine combine = AplsCombine::harmonic;
};

struct SeedSample {
    Point pos;
    double tangent_deg = 0.0;  // undirected, [0,180)
};

// Seed points at arc-length intervals along every edge chain, endpoints
// inclusive; shared junctions seeded once.
std::vector<SeedSample> sample_seeds(const RoadGraph& g, double spacing);

struct SeedDetail {
    SeedSample seed;
    bool matched = false;
    Point matched_pos;
    int gt_holes = 0;
    int pred_holes = 0;
    int matched_holes = 0;
};

struct TopoResult {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    std::vector<SeedDetail> per_seed;
};

// Seed-and-propagate hole matching. Holes are the points whose graph
// distance from the seed equals a multiple of hole_spacing, up to the
// propagation radius; matched one-to-one greedily within match_radius and
// micro-averaged over seeds.
TopoResult topo(const RoadGraph& gt, const RoadGraph& pred, const TopoConfig& cfg = {});

struct PairDetail {
    int u = 0;
    int v = 0;
    double len_a = 0.0;
    double len_b = 0.0;  // infinity when unreachable
    double penalty = 0.0;
    bool matched = false;  // both endpoints matched into b
};

struct DirectionalApls {
    double score = 0.0;
    std::vector<PairDetail> pairs;
};

// 1 - mean(min(1, |L_a - L_b| / L_a)) over vertex pairs sampled from a,
// each endpoint matched to its nearest b node within snap_radius; unmatched
// or unreachable pairs take the maximum penalty. Throws when a has no
// connected vertex pair.
DirectionalApls apls_directional(const RoadGraph& a, const RoadGraph& b, const AplsConfig& cfg);

// Dijkstra over Euclidean edge lengths; +infinity when disconnected.
double shortest_path_length(const RoadGraph& g, int u, int v);

// Copy of g with interior points injected so no segment exceeds spacing.
RoadGraph densify(const RoadGraph& g, double spacing);

// Densifies both graphs, evaluates both directions and combines:
// harmonic 2ab/(a+b), paper_verbatim ab/(a+b); 0 when both directions are 0
// or degenerate.
double apls(const RoadGraph& gt, const RoadGraph& pred, const AplsConfig& cfg = {});

struct MetricReport {
    TopoResult topo;
    double apls = 0.0;
    double s_pred_to_gt = 0.0;
    double s_gt_to_pred = 0.0;
    std::vector<PairDetail> per_pair;  // gt->pred direction diagnostics
    TopoConfig topo_config;
    AplsConfig apls_config;
};

MetricReport evaluate(const RoadGraph& gt, const RoadGraph& pred, const TopoConfig& tcfg = {},
                      const AplsConfig& acfg = {});

std::string metric_report_to_json(const MetricReport& report);

// Fixed-order table row: TOPO-P, TOPO-R, TOPO-F1, APLS, in percent.
std::string format_metric_table(const MetricReport& report);

}  // namespace roadnet
