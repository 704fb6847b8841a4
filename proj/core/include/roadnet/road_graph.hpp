#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "roadnet/error.hpp"
#include "roadnet/geometry.hpp"

namespace roadnet {

struct Node {
    int id = 0;
    Point pos;
};

// Undirected edge, endpoints stored with a < b.
struct GraphEdge {
    int a = 0;
    int b = 0;
    bool operator==(const GraphEdge& o) const { return a == o.a && b == o.b; }
    bool operator<(const GraphEdge& o) const { return a < o.a || (a == o.a && b < o.b); }
};

// Undirected spatial graph over pixel coordinates. Node ids are unique,
// self-loops are rejected, and coordinates must stay inside the declared
// canvas extent. Treated as an immutable value once built; share read-only
// across threads, build new graphs to mutate concurrently.
class RoadGraph {
public:
    RoadGraph() = default;
    RoadGraph(double width, double height);

    double width() const { return width_; }
    double height() const { return height_; }

    // Adds a node with the next free id and returns it.
    int add_node(double x, double y);
    void add_node_with_id(int id, double x, double y);
    void add_edge(int a, int b);

    bool has_node(int id) const { return nodes_.count(id) > 0; }
    bool has_edge(int a, int b) const;
    const Point& node_pos(int id) const;
    int degree(int id) const;
    const std::vector<int>& neighbors(int id) const;

    std::size_t node_count() const { return nodes_.size(); }
    std::size_t edge_count() const { return edges_.size(); }

    // Node views in ascending id order.
    std::vector<Node> nodes() const;
    std::vector<int> node_ids() const;

    // Edges sorted lexicographically; the index in this vector acts as the
    // edge id for tie-breaking.
    const std::vector<GraphEdge>& edges() const { return edges_; }

    int max_node_id() const;

private:
    struct NodeRec {
        Point pos;
        std::vector<int> nbrs;  // kept sorted ascending
    };

    double width_ = 0.0;
    double height_ = 0.0;
    std::map<int, NodeRec> nodes_;
    std::vector<GraphEdge> edges_;  // kept sorted
};

// Bit raster aligned to the canvas pixel grid; pixel (x,y) covers the unit
// square with center (x+0.5, y+0.5).
class RasterMap {
public:
    RasterMap() = default;
    RasterMap(int width, int height);

    int width() const { return width_; }
    int height() const { return height_; }
    bool in_bounds(int x, int y) const { return x >= 0 && x < width_ && y >= 0 && y < height_; }

    bool get(int x, int y) const;
    void set(int x, int y);
    std::size_t count_set() const;

private:
    int width_ = 0;
    int height_ = 0;
    std::vector<std::uint64_t> bits_;
};

// Node ids with degree < 2, ascending. Isolated nodes count.
std::vector<int> endpoints(const RoadGraph& g);

// Pixel set iff its center lies within line_width/2 of some edge segment.
RasterMap rasterize(const RoadGraph& g, double line_width, int width, int height);

struct GraphProjection {
    Point point;       // closest point on the graph
    int edge_id = -1;  // index into g.edges()
    double t = 0.0;    // parametric position along the owning edge
    double distance = 0.0;
};

// Global minimum point-to-segment distance over all edges; ties broken by
// lowest edge id. Throws on an edgeless graph.
GraphProjection nearest_point_on_graph(const RoadGraph& g, const Point& p);

// Nearest node within tol (inclusive), ties by lowest id.
std::optional<int> check_node_connection(const RoadGraph& g, const Point& p, double tol = 2.0);

// Union of both graphs. Each node of b is unified with the nearest node
// already in the result when within snap_tol (nearest first, ties by lowest
// id); otherwise it keeps its id when free, else gets a fresh one.
RoadGraph merge_graphs(const RoadGraph& a, const RoadGraph& b, double snap_tol);

enum class GraphFormat { auto_detect, edge_list, adjacency };

RoadGraph load_graph(const std::string& path, GraphFormat format = GraphFormat::auto_detect,
                     std::vector<std::string>* warnings = nullptr);
void save_graph(const RoadGraph& g, const std::string& path);

// JSON-string variants used by the file API above.
RoadGraph parse_graph_json(const std::string& text, GraphFormat format = GraphFormat::auto_detect,
                           std::vector<std::string>* warnings = nullptr);
std::string graph_to_json(const RoadGraph& g);

}  // namespace roadnet
