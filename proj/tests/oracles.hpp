// Independent brute-force oracles. These re-derive the quantities the
// library computes through deliberately different algorithms (ternary search
// instead of closed-form projection, Floyd-Warshall / Bellman-Ford instead
// of Dijkstra, exhaustive enumeration instead of incremental construction)
// so agreement is meaningful.
#pragma once

#include <vector>

#include "roadnet/connect_net.hpp"
#include "roadnet/metrics.hpp"
#include "roadnet/rng.hpp"
#include "roadnet/road_graph.hpp"

namespace oracle {

using roadnet::AplsConfig;
using roadnet::ConnectBatch;
using roadnet::ConnectNet;
using roadnet::Point;
using roadnet::RasterMap;
using roadnet::Rng;
using roadnet::RoadGraph;
using roadnet::TopoConfig;

// Minimum distance from p to segment [a,b] by ternary search on the
// parameter (the distance is unimodal in t).
double segment_distance(const Point& p, const Point& a, const Point& b);

// Definition-level rasterization: every pixel against every edge.
RasterMap rasterize_brute(const RoadGraph& g, double line_width, int w, int h);

struct NearestHit {
    double dist = 0.0;
    int edge_id = -1;
    Point point;
};
NearestHit nearest_brute(const RoadGraph& g, const Point& p);

// Exhaustive k-nearest within range, distance ascending, ties by id.
std::vector<int> knn_brute(const std::vector<roadnet::Node>& nodes, int center_id, double range,
                           int k);

// All-pairs shortest paths over Euclidean edge lengths via Floyd-Warshall.
// ids_out receives the ascending node ids indexing the matrix.
std::vector<std::vector<double>> floyd_warshall(const RoadGraph& g, std::vector<int>& ids_out);

// Shortest path by exhaustive simple-path enumeration; small graphs only.
double shortest_path_enumerate(const RoadGraph& g, int u, int v);

// Independent APLS: re-coded densification, coordinate-canonical exhaustive
// pair enumeration, Floyd-Warshall lengths, nearest-node matching.
double apls_directional_oracle(const RoadGraph& a, const RoadGraph& b, const AplsConfig& cfg);
double apls_oracle(const RoadGraph& gt, const RoadGraph& pred, const AplsConfig& cfg);

// Independent TOPO given the same seed set: Bellman-Ford distances over an
// independently built split-edge adjacency, re-derived hole level sets and
// re-coded greedy matching.
struct TopoScores {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
};
TopoScores topo_oracle(const RoadGraph& gt, const RoadGraph& pred, const TopoConfig& cfg);

// Central finite differences over a deterministic sample of entries per
// tensor; returns the max relative error against the analytic gradients.
double gradient_check(ConnectNet& net, const ConnectBatch& batch, const std::vector<int>& labels,
                      int samples_per_tensor, std::uint64_t seed);

// Random connected-ish spatial graph for metric tests.
RoadGraph random_graph(Rng& rng, int n_nodes, double extent, int extra_edges);

}  // namespace oracle
