#pragma once

#include <memory>
#include <string>
#include <vector>

#include "roadnet/image.hpp"
#include "roadnet/rng.hpp"
#include "roadnet/road_graph.hpp"

namespace roadnet {

// Aligned crops of the scene image and the working-graph raster, centered on
// a query node. Windows leaving the canvas are zero padded; the center maps
// to patch coordinate (size/2, size/2).
struct ProposerPatch {
    Point center;
    int size = 128;
    int origin_x = 0;  // global pixel of patch (0,0)
    int origin_y = 0;
    Image image_crop;
    Image raster_crop;  // single channel, 0/1

    Point to_global(const Point& patch_pos) const {
        return {origin_x + patch_pos.x, origin_y + patch_pos.y};
    }
    Point to_patch(const Point& global) const {
        return {global.x - origin_x, global.y - origin_y};
    }
    bool raster_at_global(const Point& global) const {
        const int px = static_cast<int>(std::floor(global.x)) - origin_x;
        const int py = static_cast<int>(std::floor(global.y)) - origin_y;
        if (px < 0 || px >= size || py < 0 || py >= size) return false;
        return raster_crop.at(0, px, py) > 0.5;
    }
};

struct Proposal {
    Point patch_pos;  // patch-local coordinates in [0, size)^2
    double prob = 1.0;
};

// Patch-in, nodes-out contract standing in for a learned local decoder:
// at most 4 proposals, patch-local coordinates, probability in [0,1].
class NodeProposer {
public:
    virtual ~NodeProposer() = default;
    virtual std::vector<Proposal> propose(const ProposerPatch& patch) = 0;
    virtual std::string name() const = 0;
};

struct CompletionOptions {
    int max_steps = 5;
    double snap_tol = 2.0;
    double accept_threshold = 0.5;  // proposal probability gate
    int patch_size = 128;
    double raster_width = 2.0;
    // Safety budget bounding total proposer invocations; generous for any
    // sane proposer, guarantees termination for adversarial ones.
    std::size_t max_invocations = 100000;
};

struct TraceRow {
    int walk = 0;
    int step = 0;  // 1-based within the walk
    Point center;
    std::vector<std::pair<Point, double>> proposed;  // global coords + prob
    std::string action;                              // bridge | extend | stop
    std::string reason;
    std::vector<int> added_nodes;
    std::vector<GraphEdge> added_edges;
};

struct CompletionTrace {
    std::vector<TraceRow> rows;
    std::size_t invocations = 0;
    bool budget_exhausted = false;
};

// Endpoint node ids in ascending order.
std::vector<int> build_query_centers(const RoadGraph& g);

ProposerPatch crop_patch(const Image& image, const RasterMap& raster, const Point& center,
                         int size = 128);

// Endpoint-driven iterative completion. Pops each query center, walks up to
// max_steps proposer calls: zero accepted proposals end the walk; a single
// proposal either snaps to an existing node within snap_tol (bridge) or
// extends the walk from the new node; multiple proposals all get edges, one
// random pick is consumed and the rest join the frontier. Never removes
// nodes or edges.
std::pair<RoadGraph, CompletionTrace> complete(const RoadGraph& g, const Image& image,
                                               NodeProposer& proposer,
                                               const CompletionOptions& opts, Rng& rng);

// Walks the ground truth from the patch center toward directions the
// working raster has not covered, emitting the next gt location at the given
// stride (or the covered re-entry point / junction node when nearer),
// perturbed by Gaussian noise sigma. Centers off the gt produce no
// proposals.
class OracleProposer : public NodeProposer {
public:
    OracleProposer(RoadGraph gt, double sigma, double stride, std::uint64_t seed);
    std::vector<Proposal> propose(const ProposerPatch& patch) override;
    std::string name() const override { return "oracle"; }

private:
    RoadGraph gt_;
    double sigma_;
    double stride_;
    Rng rng_;
};

// No-learning baseline: extends the endpoint's incident tangent (estimated
// from the raster crop) by one stride when the image probe along it looks
// road-bright.
class HeuristicProposer : public NodeProposer {
public:
    explicit HeuristicProposer(double stride = 20.0, double intensity_threshold = 0.5);
    std::vector<Proposal> propose(const ProposerPatch& patch) override;
    std::string name() const override { return "heuristic"; }

private:
    double stride_;
    double intensity_threshold_;
};

void save_trace_jsonl(const CompletionTrace& trace, const std::string& path);

}  // namespace roadnet
