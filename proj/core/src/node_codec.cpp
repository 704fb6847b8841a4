#include "roadnet/node_codec.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "roadnet/error.hpp"

namespace roadnet {

NodeDescriptor encode_directions(const Point& node, const std::vector<Point>& neighbors,
                                 int bin_count) {
    if (bin_count < 1) throw Error("descriptor bin count must be positive");
    NodeDescriptor d;
    d.coord = node;
    d.bins.assign(bin_count, 0.0);
    const double interval = 360.0 / bin_count;
    for (const auto& nb : neighbors) {
        if (nb.x == node.x && nb.y == node.y) throw Error("zero-length direction");
        const double deg = direction_angle_deg(node, nb);
        const int bin = static_cast<int>(std::lround(deg / interval)) % bin_count;
        d.bins[bin] = 1.0;
    }
    return d;
}

std::vector<double> decode_directions(const NodeDescriptor& d, double threshold) {
    if (threshold <= 0.0 || threshold >= 1.0) throw Error("decode threshold must be in (0,1)");
    std::vector<double> out;
    const double interval = 360.0 / d.bin_count();
    for (int k = 0; k < d.bin_count(); ++k) {
        if (d.bins[k] >= threshold) out.push_back(k * interval);
    }
    return out;
}

std::vector<double> node_feature(const NodeDescriptor& d, double extent_w, double extent_h) {
    if (extent_w <= 0.0 || extent_h <= 0.0) throw Error("extent must be positive");
    if (d.coord.x < 0.0 || d.coord.x > extent_w || d.coord.y < 0.0 || d.coord.y > extent_h) {
        throw Error("node coordinate outside extent");
    }
    std::vector<double> out;
    out.reserve(2 + d.bins.size());
    out.push_back(d.coord.x / extent_w);
    out.push_back(d.coord.y / extent_h);
    out.insert(out.end(), d.bins.begin(), d.bins.end());
    return out;
}

NodeDescriptor descriptor_from_graph(const RoadGraph& g, int node_id, int bin_count) {
    std::vector<Point> nbrs;
    for (const int nb : g.neighbors(node_id)) nbrs.push_back(g.node_pos(nb));
    return encode_directions(g.node_pos(node_id), nbrs, bin_count);
}

void save_descriptors(const DescriptorSet& set, const std::string& path) {
    if (set.ids.size() != set.descriptors.size()) {
        throw Error("descriptor set ids and descriptors differ in length");
    }
    nlohmann::json j;
    j["extent"] = {set.extent_w, set.extent_h};
    j["nodes"] = nlohmann::json::array();
    for (std::size_t i = 0; i < set.ids.size(); ++i) {
        const auto& d = set.descriptors[i];
        j["nodes"].push_back(
            {{"id", set.ids[i]}, {"x", d.coord.x}, {"y", d.coord.y}, {"bins", d.bins}});
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write descriptor file: " + path);
    out << j.dump(2) << "\n";
}

DescriptorSet load_descriptors(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open descriptor file: " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(ss.str());
    } catch (const nlohmann::json::parse_error& e) {
        throw Error(std::string("descriptor parse error: ") + e.what());
    }
    DescriptorSet set;
    if (!j.contains("extent") || !j.contains("nodes")) {
        throw Error("descriptor file missing 'extent' or 'nodes'");
    }
    set.extent_w = j["extent"][0].get<double>();
    set.extent_h = j["extent"][1].get<double>();
    for (const auto& n : j["nodes"]) {
        set.ids.push_back(n.at("id").get<int>());
        NodeDescriptor d;
        d.coord = {n.at("x").get<double>(), n.at("y").get<double>()};
        d.bins = n.at("bins").get<std::vector<double>>();
        set.descriptors.push_back(std::move(d));
    }
    return set;
}

}  // namespace roadnet
