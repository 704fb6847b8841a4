#include "roadnet/road_graph.hpp"

#include <algorithm>
#include <cmath>

namespace roadnet {

RoadGraph::RoadGraph(double width, double height) : width_(width), height_(height) {
    if (width <= 0.0 || height <= 0.0) {
        throw Error("RoadGraph extent must be positive");
    }
}

int RoadGraph::add_node(double x, double y) {
    const int id = max_node_id() + 1;
    add_node_with_id(id, x, y);
    return id;
}

void RoadGraph::add_node_with_id(int id, double x, double y) {
    if (nodes_.count(id) > 0) {
        throw Error("duplicate node id " + std::to_string(id));
    }
    if (!std::isfinite(x) || !std::isfinite(y)) {
        throw Error("non-finite coordinate for node " + std::to_string(id));
    }
    if (x < 0.0 || y < 0.0 || (width_ > 0.0 && (x > width_ || y > height_))) {
        throw Error("node " + std::to_string(id) + " outside canvas extent");
    }
    nodes_[id] = NodeRec{{x, y}, {}};
}

void RoadGraph::add_edge(int a, int b) {
    if (a == b) {
        throw Error("self-loop edge on node " + std::to_string(a));
    }
    if (!has_node(a) || !has_node(b)) {
        throw Error("edge references unknown node " + std::to_string(has_node(a) ? b : a));
    }
    if (a > b) std::swap(a, b);
    const GraphEdge e{a, b};
    auto it = std::lower_bound(edges_.begin(), edges_.end(), e);
    if (it != edges_.end() && *it == e) return;  // undirected dedupe
    edges_.insert(it, e);

    auto& na = nodes_[a].nbrs;
    na.insert(std::lower_bound(na.begin(), na.end(), b), b);
    auto& nb = nodes_[b].nbrs;
    nb.insert(std::lower_bound(nb.begin(), nb.end(), a), a);
}

bool RoadGraph::has_edge(int a, int b) const {
    if (a > b) std::swap(a, b);
    const GraphEdge e{a, b};
    auto it = std::lower_bound(edges_.begin(), edges_.end(), e);
    return it != edges_.end() && *it == e;
}

const Point& RoadGraph::node_pos(int id) const {
    auto it = nodes_.find(id);
    if (it == nodes_.end()) throw Error("unknown node id " + std::to_string(id));
    return it->second.pos;
}

int RoadGraph::degree(int id) const {
    auto it = nodes_.find(id);
    if (it == nodes_.end()) throw Error("unknown node id " + std::to_string(id));
    return static_cast<int>(it->second.nbrs.size());
}

const std::vector<int>& RoadGraph::neighbors(int id) const {
    auto it = nodes_.find(id);
    if (it == nodes_.end()) throw Error("unknown node id " + std::to_string(id));
    return it->second.nbrs;
}

std::vector<Node> RoadGraph::nodes() const {
    std::vector<Node> out;
    out.reserve(nodes_.size());
    for (const auto& [id, rec] : nodes_) out.push_back(Node{id, rec.pos});
    return out;
}

std::vector<int> RoadGraph::node_ids() const {
    std::vector<int> out;
    out.reserve(nodes_.size());
    for (const auto& [id, rec] : nodes_) out.push_back(id);
    return out;
}

int RoadGraph::max_node_id() const {
    if (nodes_.empty()) return -1;
    return nodes_.rbegin()->first;
}

std::vector<int> endpoints(const RoadGraph& g) {
    std::vector<int> out;
    for (const auto& n : g.nodes()) {
        if (g.degree(n.id) < 2) out.push_back(n.id);
    }
    return out;
}

GraphProjection nearest_point_on_graph(const RoadGraph& g, const Point& p) {
    const auto& edges = g.edges();
    if (edges.empty()) throw Error("no centerline");
    GraphProjection best;
    best.distance = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < edges.size(); ++i) {
        const auto proj = project_to_segment(p, g.node_pos(edges[i].a), g.node_pos(edges[i].b));
        if (proj.dist < best.distance) {
            best.point = proj.point;
            best.edge_id = static_cast<int>(i);
            best.t = proj.t;
            best.distance = proj.dist;
        }
    }
    return best;
}

std::optional<int> check_node_connection(const RoadGraph& g, const Point& p, double tol) {
    std::optional<int> best;
    double best_dist = std::numeric_limits<double>::infinity();
    for (const auto& n : g.nodes()) {
        const double d = distance(n.pos, p);
        if (d <= tol && d < best_dist) {
            best = n.id;
            best_dist = d;
        }
    }
    return best;
}

RoadGraph merge_graphs(const RoadGraph& a, const RoadGraph& b, double snap_tol) {
    const double w = std::max(a.width(), b.width());
    const double h = std::max(a.height(), b.height());
    RoadGraph out = (w > 0.0 && h > 0.0) ? RoadGraph(w, h) : RoadGraph();
    for (const auto& n : a.nodes()) out.add_node_with_id(n.id, n.pos.x, n.pos.y);
    for (const auto& e : a.edges()) out.add_edge(e.a, e.b);

    std::map<int, int> remap;  // b id -> result id
    for (const auto& n : b.nodes()) {
        const auto hit = a.node_count() > 0 ? check_node_connection(a, n.pos, snap_tol)
                                            : std::optional<int>{};
        if (hit.has_value()) {
            remap[n.id] = *hit;
        } else {
            int id = n.id;
            if (out.has_node(id)) id = out.max_node_id() + 1;
            out.add_node_with_id(id, n.pos.x, n.pos.y);
            remap[n.id] = id;
        }
    }
    for (const auto& e : b.edges()) {
        const int ra = remap.at(e.a);
        const int rb = remap.at(e.b);
        if (ra == rb) continue;  // unification collapsed the edge
        out.add_edge(ra, rb);
    }
    return out;
}

}  // namespace roadnet
