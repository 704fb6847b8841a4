#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "roadnet/road_graph.hpp"

namespace roadnet {

namespace {

using nlohmann::json;

// Line number for a byte offset, for parse diagnostics.
int line_of_offset(const std::string& text, std::size_t byte) {
    int line = 1;
    for (std::size_t i = 0; i < byte && i < text.size(); ++i) {
        if (text[i] == '\n') ++line;
    }
    return line;
}

json parse_or_throw(const std::string& text) {
    try {
        return json::parse(text);
    } catch (const json::parse_error& e) {
        throw Error("JSON parse error at line " + std::to_string(line_of_offset(text, e.byte)) +
                    ": " + e.what());
    }
}

Point parse_coord_key(const std::string& key) {
    const auto comma = key.find(',');
    if (comma == std::string::npos) throw Error("adjacency key '" + key + "' is not 'x,y'");
    try {
        return Point{std::stod(key.substr(0, comma)), std::stod(key.substr(comma + 1))};
    } catch (const std::exception&) {
        throw Error("adjacency key '" + key + "' has non-numeric coordinates");
    }
}

RoadGraph from_edge_list(const json& j) {
    double w = 0.0, h = 0.0;
    if (j.contains("extent")) {
        if (!j["extent"].is_array() || j["extent"].size() != 2) {
            throw Error("key 'extent' must be [width, height]");
        }
        w = j["extent"][0].get<double>();
        h = j["extent"][1].get<double>();
    }
    RoadGraph g = (w > 0.0 && h > 0.0) ? RoadGraph(w, h) : RoadGraph();
    if (!j.contains("nodes") || !j["nodes"].is_array()) throw Error("missing key 'nodes'");
    for (const auto& n : j["nodes"]) {
        if (!n.contains("id") || !n.contains("x") || !n.contains("y")) {
            throw Error("node entry missing one of keys 'id', 'x', 'y'");
        }
        g.add_node_with_id(n["id"].get<int>(), n["x"].get<double>(), n["y"].get<double>());
    }
    if (j.contains("edges")) {
        for (const auto& e : j["edges"]) {
            if (!e.is_array() || e.size() != 2) throw Error("edge entry must be [a, b]");
            const int a = e[0].get<int>();
            const int b = e[1].get<int>();
            if (!g.has_node(a) || !g.has_node(b)) {
                throw Error("edge references unknown node id " +
                            std::to_string(g.has_node(a) ? b : a));
            }
            g.add_edge(a, b);
        }
    }
    return g;
}

std::string coord_id(const Point& p) {
    std::ostringstream os;
    os.precision(17);
    os << p.x << "," << p.y;
    return os.str();
}

RoadGraph from_adjacency(const json& j, std::vector<std::string>* warnings) {
    // Dataset-style dictionary: keys are "x,y" node coordinates, values list
    // the adjacent coordinates. Ids are assigned in sorted key order, then in
    // order of first appearance for coordinates seen only as neighbors.
    std::map<std::string, Point> points;
    for (auto it = j.begin(); it != j.end(); ++it) {
        points[it.key()] = parse_coord_key(it.key());
    }
    std::map<std::string, std::vector<std::string>> adj;
    double max_x = 0.0, max_y = 0.0;
    for (auto it = j.begin(); it != j.end(); ++it) {
        if (!it.value().is_array()) throw Error("adjacency value for key '" + it.key() + "' must be a list");
        for (const auto& nb : it.value()) {
            if (!nb.is_array() || nb.size() != 2) {
                throw Error("neighbor entry under key '" + it.key() + "' must be [x, y]");
            }
            const Point p{nb[0].get<double>(), nb[1].get<double>()};
            const std::string key = coord_id(p);
            if (points.count(key) == 0) points[key] = p;
            adj[it.key()].push_back(key);
        }
    }
    for (const auto& [key, p] : points) {
        max_x = std::max(max_x, p.x);
        max_y = std::max(max_y, p.y);
    }
    RoadGraph g(std::floor(max_x) + 1.0, std::floor(max_y) + 1.0);
    std::map<std::string, int> ids;
    int next = 0;
    for (const auto& [key, p] : points) {
        ids[key] = next;
        g.add_node_with_id(next, p.x, p.y);
        ++next;
    }
    for (const auto& [key, nbrs] : adj) {
        for (const auto& nb_key : nbrs) {
            const auto rev = adj.find(nb_key);
            const bool symmetric =
                rev != adj.end() &&
                std::find(rev->second.begin(), rev->second.end(), key) != rev->second.end();
            if (!symmetric && warnings) {
                warnings->push_back("asymmetric adjacency: '" + key + "' lists '" + nb_key +
                                    "' but not vice versa; normalized to undirected edge");
            }
            if (ids.at(key) != ids.at(nb_key)) g.add_edge(ids.at(key), ids.at(nb_key));
        }
    }
    return g;
}

}  // namespace

RoadGraph parse_graph_json(const std::string& text, GraphFormat format,
                           std::vector<std::string>* warnings) {
    const json j = parse_or_throw(text);
    if (!j.is_object()) throw Error("top-level JSON value must be an object");
    GraphFormat f = format;
    if (f == GraphFormat::auto_detect) {
        f = j.contains("nodes") ? GraphFormat::edge_list : GraphFormat::adjacency;
    }
    return f == GraphFormat::edge_list ? from_edge_list(j) : from_adjacency(j, warnings);
}

std::string graph_to_json(const RoadGraph& g) {
    json j;
    j["extent"] = {g.width(), g.height()};
    j["nodes"] = json::array();
    for (const auto& n : g.nodes()) {
        j["nodes"].push_back({{"id", n.id}, {"x", n.pos.x}, {"y", n.pos.y}});
    }
    j["edges"] = json::array();
    for (const auto& e : g.edges()) {
        j["edges"].push_back({e.a, e.b});
    }
    return j.dump(2) + "\n";
}

RoadGraph load_graph(const std::string& path, GraphFormat format,
                     std::vector<std::string>* warnings) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open graph file: " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_graph_json(ss.str(), format, warnings);
}

void save_graph(const RoadGraph& g, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write graph file: " + path);
    out << graph_to_json(g);
}

}  // namespace roadnet
