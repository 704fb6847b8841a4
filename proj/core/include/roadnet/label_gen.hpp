#pragma once

#include <string>
#include <vector>

#include "roadnet/road_graph.hpp"

namespace roadnet {

struct ValidNodeFilter {
    std::vector<int> kept;       // indices into the predicted node list
    std::vector<int> discarded;
};

// Keeps nodes lying within the width-wide rasterized band of the ground
// truth, i.e. distance to the nearest gt segment <= width/2.
ValidNodeFilter filter_valid_nodes(const std::vector<Point>& pred_nodes, const RoadGraph& gt,
                                   double width = 5.0);

struct GtProjection {
    int node = 0;      // predicted node index
    Point original;    // predicted coordinate
    Point point;       // projection onto the gt centerline
    int edge_id = -1;  // owning gt edge
    double t = 0.0;    // parametric position along the owning edge
};

std::vector<GtProjection> project_to_gt(const std::vector<int>& valid_ids,
                                        const std::vector<Point>& pred_nodes,
                                        const RoadGraph& gt);

struct CandidateList {
    int node = 0;
    std::vector<int> candidates;  // distance-ascending, ties by id
};

// Up to n_pt nearest nodes within range_r of each node.
std::vector<CandidateList> candidate_pairs(const std::vector<Node>& nodes, double range_r,
                                           int n_pt);

struct PairLabel {
    int v = 0;
    int n = 0;
    int label = 0;
};

struct ConnectionLabelSet {
    std::vector<int> valid_nodes;
    std::vector<PairLabel> pairs;  // both orientations present for every pair
};

// Label 1 iff the gt walk between the two projection points exists and
// passes through no other valid node's projection. A projection occupies a
// gt node when it lands within node_occupancy of it (the width-5 band
// radius), so near-node predictions block paths through that node.
// Candidates limited to the n_pt nearest within range_r; the mirrored
// orientation of every emitted pair is included so the set stays symmetric.
ConnectionLabelSet derive_connections(const std::vector<GtProjection>& projections,
                                      const RoadGraph& gt, double range_r = 50.0, int n_pt = 8,
                                      double node_occupancy = 2.5);

void save_labels_jsonl(const ConnectionLabelSet& labels, const std::string& path);
ConnectionLabelSet load_labels_jsonl(const std::string& path);

}  // namespace roadnet
