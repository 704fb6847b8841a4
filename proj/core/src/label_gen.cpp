#include "roadnet/label_gen.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <queue>
#include <set>
#include <sstream>

#include <json.hpp>

#include "roadnet/error.hpp"

namespace roadnet {

ValidNodeFilter filter_valid_nodes(const std::vector<Point>& pred_nodes, const RoadGraph& gt,
                                   double width) {
    if (gt.edge_count() == 0) throw Error("ground truth has no edges");
    const double radius = width / 2.0;
    ValidNodeFilter out;
    for (std::size_t i = 0; i < pred_nodes.size(); ++i) {
        const auto proj = nearest_point_on_graph(gt, pred_nodes[i]);
        if (proj.distance <= radius) {
            out.kept.push_back(static_cast<int>(i));
        } else {
            out.discarded.push_back(static_cast<int>(i));
        }
    }
    return out;
}

std::vector<GtProjection> project_to_gt(const std::vector<int>& valid_ids,
                                        const std::vector<Point>& pred_nodes,
                                        const RoadGraph& gt) {
    std::vector<GtProjection> out;
    out.reserve(valid_ids.size());
    for (const int id : valid_ids) {
        const auto proj = nearest_point_on_graph(gt, pred_nodes.at(id));
        out.push_back(GtProjection{id, pred_nodes.at(id), proj.point, proj.edge_id, proj.t});
    }
    return out;
}

std::vector<CandidateList> candidate_pairs(const std::vector<Node>& nodes, double range_r,
                                           int n_pt) {
    if (range_r <= 0.0) throw Error("range must be positive");
    if (n_pt < 1) throw Error("candidate cap must be at least 1");
    std::vector<CandidateList> out;
    out.reserve(nodes.size());
    for (const auto& v : nodes) {
        std::vector<std::pair<double, int>> near;
        for (const auto& n : nodes) {
            if (n.id == v.id) continue;
            const double d = distance(v.pos, n.pos);
            if (d <= range_r) near.emplace_back(d, n.id);
        }
        std::sort(near.begin(), near.end());
        CandidateList cl{v.id, {}};
        for (std::size_t i = 0; i < near.size() && i < static_cast<std::size_t>(n_pt); ++i) {
            cl.candidates.push_back(near[i].second);
        }
        out.push_back(std::move(cl));
    }
    return out;
}

namespace {

// Graph of gt nodes plus one vertex per projection point, with each owning
// edge split at the sorted projection parameters. Projections within eps of
// a gt node are identified with that node.
struct AugmentedGraph {
    std::map<int, std::vector<int>> adj;          // vertex -> neighbors
    std::map<int, int> projection_vertex;         // predicted node index -> vertex
    int next_vertex = 0;

    void add_edge(int a, int b) {
        if (a == b) return;
        adj[a].push_back(b);
        adj[b].push_back(a);
    }
};

AugmentedGraph build_augmented(const std::vector<GtProjection>& projections, const RoadGraph& gt,
                               double node_occupancy) {
    AugmentedGraph ag;
    ag.next_vertex = gt.max_node_id() + 1;

    // Projections grouped per owning edge, ordered along the edge. A
    // projection landing within the occupancy radius of a gt node is
    // identified with that node, so it blocks paths through it.
    std::map<int, std::vector<const GtProjection*>> per_edge;
    const auto& edges = gt.edges();
    for (const auto& p : projections) {
        const Point a = gt.node_pos(edges[p.edge_id].a);
        const Point b = gt.node_pos(edges[p.edge_id].b);
        const double da = distance(p.point, a);
        const double db = distance(p.point, b);
        if (da <= node_occupancy && da <= db) {
            ag.projection_vertex[p.node] = edges[p.edge_id].a;
        } else if (db <= node_occupancy) {
            ag.projection_vertex[p.node] = edges[p.edge_id].b;
        } else {
            per_edge[p.edge_id].push_back(&p);
        }
    }

    std::set<int> split_edges;
    for (auto& [edge_id, list] : per_edge) {
        std::sort(list.begin(), list.end(), [](const GtProjection* x, const GtProjection* y) {
            return x->t < y->t || (x->t == y->t && x->node < y->node);
        });
        split_edges.insert(edge_id);
        int prev = edges[edge_id].a;
        double prev_t = 0.0;
        for (const auto* p : list) {
            int vtx;
            if (p->t == prev_t && prev != edges[edge_id].a) {
                vtx = prev;  // coincident projections share a vertex
            } else {
                vtx = ag.next_vertex++;
                ag.add_edge(prev, vtx);
            }
            ag.projection_vertex[p->node] = vtx;
            prev = vtx;
            prev_t = p->t;
        }
        ag.add_edge(prev, edges[edge_id].b);
    }
    for (std::size_t i = 0; i < edges.size(); ++i) {
        if (split_edges.count(static_cast<int>(i)) == 0) {
            ag.add_edge(edges[i].a, edges[i].b);
        }
    }
    return ag;
}

// Connectivity between two vertices with every vertex in `blocked` removed.
bool connected_avoiding(const AugmentedGraph& ag, int from, int to, const std::set<int>& blocked) {
    if (from == to) return true;
    std::set<int> seen{from};
    std::queue<int> q;
    q.push(from);
    while (!q.empty()) {
        const int v = q.front();
        q.pop();
        const auto it = ag.adj.find(v);
        if (it == ag.adj.end()) continue;
        for (const int nb : it->second) {
            if (nb == to) return true;
            if (blocked.count(nb) > 0 || seen.count(nb) > 0) continue;
            seen.insert(nb);
            q.push(nb);
        }
    }
    return false;
}

}  // namespace

ConnectionLabelSet derive_connections(const std::vector<GtProjection>& projections,
                                      const RoadGraph& gt, double range_r, int n_pt,
                                      double node_occupancy) {
    ConnectionLabelSet out;
    std::vector<Node> as_nodes;
    for (const auto& p : projections) {
        out.valid_nodes.push_back(p.node);
        as_nodes.push_back(Node{p.node, p.original});
    }
    const AugmentedGraph ag = build_augmented(projections, gt, node_occupancy);

    // Vertices occupied by some projection, for the interposition test.
    std::set<int> occupied;
    for (const auto& [node, vtx] : ag.projection_vertex) occupied.insert(vtx);

    const auto candidates = candidate_pairs(as_nodes, range_r, n_pt);
    std::set<std::pair<int, int>> emitted;
    std::map<std::pair<int, int>, int> label_of;
    for (const auto& cl : candidates) {
        for (const int n : cl.candidates) {
            const auto key = std::minmax(cl.node, n);
            if (label_of.count(key) == 0) {
                const int va = ag.projection_vertex.at(cl.node);
                const int vb = ag.projection_vertex.at(n);
                std::set<int> blocked = occupied;
                blocked.erase(va);
                blocked.erase(vb);
                label_of[key] = connected_avoiding(ag, va, vb, blocked) ? 1 : 0;
            }
            for (const auto& [v, w] : {std::pair{cl.node, n}, std::pair{n, cl.node}}) {
                if (emitted.insert({v, w}).second) {
                    out.pairs.push_back(PairLabel{v, w, label_of[key]});
                }
            }
        }
    }
    return out;
}

void save_labels_jsonl(const ConnectionLabelSet& labels, const std::string& path) {
    std::ofstream outf(path, std::ios::binary);
    if (!outf) throw Error("cannot write labels file: " + path);
    for (const auto& p : labels.pairs) {
        nlohmann::json j{{"v", p.v}, {"n", p.n}, {"label", p.label}};
        outf << j.dump() << "\n";
    }
}

ConnectionLabelSet load_labels_jsonl(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open labels file: " + path);
    ConnectionLabelSet out;
    std::set<int> nodes;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(line);
        } catch (const nlohmann::json::parse_error& e) {
            throw Error("labels line " + std::to_string(line_no) + ": " + e.what());
        }
        if (!j.contains("v") || !j.contains("n") || !j.contains("label")) {
            throw Error("labels line " + std::to_string(line_no) +
                        ": missing one of keys 'v', 'n', 'label'");
        }
        const PairLabel p{j["v"].get<int>(), j["n"].get<int>(), j["label"].get<int>()};
        if (p.label != 0 && p.label != 1) {
            throw Error("labels line " + std::to_string(line_no) + ": label must be 0 or 1");
        }
        out.pairs.push_back(p);
        nodes.insert(p.v);
        nodes.insert(p.n);
    }
    out.valid_nodes.assign(nodes.begin(), nodes.end());
    return out;
}

}  // namespace roadnet
