#pragma once

#include <string>
#include <vector>

#include "roadnet/geometry.hpp"
#include "roadnet/road_graph.hpp"

namespace roadnet {

// Road node as a coordinate plus a directional descriptor: bin k covers the
// 360/bin_count-degree interval centered at k * 360/bin_count, measured
// counterclockwise with bin 0 pointing horizontal right. Ground-truth
// descriptors are binary; predicted ones may carry fractional confidences.
struct NodeDescriptor {
    Point coord;
    std::vector<double> bins;

    int bin_count() const { return static_cast<int>(bins.size()); }
};

// Bins the direction toward each neighbor: bin = round(angle/interval) mod
// bin_count. Throws on a neighbor coincident with the node.
NodeDescriptor encode_directions(const Point& node, const std::vector<Point>& neighbors,
                                 int bin_count = 36);

// Angles (degrees, ascending) of every bin with value >= threshold.
std::vector<double> decode_directions(const NodeDescriptor& d, double threshold = 0.5);

// [x/w, y/h] concatenated with the bins; length 2 + bin_count.
std::vector<double> node_feature(const NodeDescriptor& d, double extent_w, double extent_h);

// Descriptor of a graph node from its adjacency.
NodeDescriptor descriptor_from_graph(const RoadGraph& g, int node_id, int bin_count = 36);

// Descriptor file payload: node ids parallel to descriptors, plus the canvas
// extent used for feature normalization.
struct DescriptorSet {
    double extent_w = 0.0;
    double extent_h = 0.0;
    std::vector<int> ids;
    std::vector<NodeDescriptor> descriptors;
};

void save_descriptors(const DescriptorSet& set, const std::string& path);
DescriptorSet load_descriptors(const std::string& path);

}  // namespace roadnet
