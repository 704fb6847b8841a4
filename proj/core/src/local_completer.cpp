#include "roadnet/local_completer.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <fstream>

#include <json.hpp>

#include "roadnet/error.hpp"

namespace roadnet {

std::vector<int> build_query_centers(const RoadGraph& g) {
    return endpoints(g);
}

ProposerPatch crop_patch(const Image& image, const RasterMap& raster, const Point& center,
                         int size) {
    if (size < 2) throw Error("patch size too small");
    if (center.x < 0.0 || center.y < 0.0 || center.x > raster.width() ||
        center.y > raster.height()) {
        throw Error("patch center outside canvas");
    }
    ProposerPatch patch;
    patch.center = center;
    patch.size = size;
    patch.origin_x = static_cast<int>(std::lround(center.x)) - size / 2;
    patch.origin_y = static_cast<int>(std::lround(center.y)) - size / 2;

    const int channels = image.width > 0 ? image.channels : 1;
    patch.image_crop = Image(size, size, channels);
    patch.raster_crop = Image(size, size, 1);
    for (int y = 0; y < size; ++y) {
        const int gy = patch.origin_y + y;
        for (int x = 0; x < size; ++x) {
            const int gx = patch.origin_x + x;
            if (image.width > 0 && image.in_bounds(gx, gy)) {
                for (int c = 0; c < channels; ++c) {
                    patch.image_crop.at(c, x, y) = image.at(c, gx, gy);
                }
            }
            if (raster.get(gx, gy)) patch.raster_crop.at(0, x, y) = 1.0;
        }
    }
    return patch;
}

namespace {

void validate_proposals(const std::vector<Proposal>& raw, int patch_size,
                        const std::string& proposer_name) {
    if (raw.size() > 4) {
        throw Error("proposer '" + proposer_name + "' returned " + std::to_string(raw.size()) +
                    " nodes, contract allows at most 4");
    }
    for (const auto& p : raw) {
        if (p.patch_pos.x < 0.0 || p.patch_pos.x >= patch_size || p.patch_pos.y < 0.0 ||
            p.patch_pos.y >= patch_size) {
            throw Error("proposer '" + proposer_name + "' returned coordinates (" +
                        std::to_string(p.patch_pos.x) + "," + std::to_string(p.patch_pos.y) +
                        ") outside the patch");
        }
        if (p.prob < 0.0 || p.prob > 1.0) {
            throw Error("proposer '" + proposer_name + "' returned probability " +
                        std::to_string(p.prob) + " outside [0,1]");
        }
    }
}

}  // namespace

std::pair<RoadGraph, CompletionTrace> complete(const RoadGraph& g, const Image& image,
                                               NodeProposer& proposer,
                                               const CompletionOptions& opts, Rng& rng) {
    if (opts.max_steps < 1) throw Error("max_steps must be at least 1");
    RoadGraph result = g;
    CompletionTrace trace;

    const int canvas_w =
        image.width > 0 ? image.width : static_cast<int>(std::ceil(result.width()));
    const int canvas_h =
        image.height > 0 ? image.height : static_cast<int>(std::ceil(result.height()));

    std::deque<int> frontier;
    for (const int id : build_query_centers(g)) frontier.push_back(id);

    int walk_index = 0;
    while (!frontier.empty() && !trace.budget_exhausted) {
        const int start = frontier.front();
        frontier.pop_front();
        ++walk_index;
        int vk = start;

        for (int step = 1; step <= opts.max_steps; ++step) {
            if (trace.invocations >= opts.max_invocations) {
                trace.budget_exhausted = true;
                break;
            }
            const RasterMap raster = rasterize(result, opts.raster_width, canvas_w, canvas_h);
            const ProposerPatch patch =
                crop_patch(image, raster, result.node_pos(vk), opts.patch_size);
            const auto raw = proposer.propose(patch);
            ++trace.invocations;
            validate_proposals(raw, opts.patch_size, proposer.name());

            TraceRow row;
            row.walk = walk_index;
            row.step = step;
            row.center = result.node_pos(vk);
            std::vector<Point> accepted;
            for (const auto& p : raw) {
                const Point global = patch.to_global(p.patch_pos);
                row.proposed.emplace_back(global, p.prob);
                const bool inside = global.x >= 0.0 && global.y >= 0.0 &&
                                    global.x <= result.width() && global.y <= result.height();
                if (p.prob >= opts.accept_threshold && inside) accepted.push_back(global);
            }

            bool walk_done = false;
            if (accepted.empty()) {
                row.action = "stop";
                row.reason = "no_proposals";
                walk_done = true;
            } else if (accepted.size() == 1) {
                const Point n = accepted[0];
                const auto hit = check_node_connection(result, n, opts.snap_tol);
                if (hit.has_value() && *hit != vk) {
                    if (!result.has_edge(vk, *hit)) {
                        result.add_edge(vk, *hit);
                        row.added_edges.push_back(
                            GraphEdge{std::min(vk, *hit), std::max(vk, *hit)});
                    }
                    row.action = "bridge";
                    row.reason = "snapped_to_existing";
                    walk_done = true;
                } else if (hit.has_value()) {
                    row.action = "stop";
                    row.reason = "proposal_on_center";
                    walk_done = true;
                } else {
                    const int id = result.add_node(n.x, n.y);
                    result.add_edge(vk, id);
                    row.added_nodes.push_back(id);
                    row.added_edges.push_back(GraphEdge{std::min(vk, id), std::max(vk, id)});
                    row.action = "extend";
                    row.reason = step == opts.max_steps ? "step_cap" : "continue";
                    vk = id;
                }
            } else {
                std::vector<int> new_ids;
                for (const auto& n : accepted) {
                    const int id = result.add_node(n.x, n.y);
                    result.add_edge(vk, id);
                    new_ids.push_back(id);
                    row.added_nodes.push_back(id);
                    row.added_edges.push_back(GraphEdge{std::min(vk, id), std::max(vk, id)});
                }
                const std::size_t pick = rng.uniform_index(new_ids.size());
                for (std::size_t i = 0; i < new_ids.size(); ++i) {
                    if (i != pick) frontier.push_back(new_ids[i]);
                }
                row.action = "extend";
                row.reason = "branch";
                walk_done = true;
            }
            trace.rows.push_back(std::move(row));
            if (walk_done) break;
        }
    }
    return {std::move(result), std::move(trace)};
}

// ---------------------------------------------------------------------------
// Oracle proposer

OracleProposer::OracleProposer(RoadGraph gt, double sigma, double stride, std::uint64_t seed)
    : gt_(std::move(gt)), sigma_(sigma), stride_(stride), rng_(seed) {
    if (stride <= 1.0) throw Error("oracle stride must exceed 1 pixel");
    if (sigma < 0.0) throw Error("oracle noise sigma must be non-negative");
}

namespace {

struct WalkStart {
    Point from;
    int toward;  // node id the walk heads to first
    int back;    // node id behind the start, for turn decisions
    double bearing;
};

}  // namespace

std::vector<Proposal> OracleProposer::propose(const ProposerPatch& patch) {
    if (gt_.edge_count() == 0) return {};
    const auto proj = nearest_point_on_graph(gt_, patch.center);
    if (proj.distance > 2.5) return {};  // no road here

    constexpr double kNodeEps = 1e-6;
    const auto& owner = gt_.edges()[proj.edge_id];
    std::vector<WalkStart> starts;
    auto node_start = [&](int node_id) {
        const Point p = gt_.node_pos(node_id);
        for (const int nb : gt_.neighbors(node_id)) {
            starts.push_back(
                WalkStart{p, nb, node_id, direction_angle_deg(p, gt_.node_pos(nb))});
        }
    };
    if (distance(proj.point, gt_.node_pos(owner.a)) <= kNodeEps) {
        node_start(owner.a);
    } else if (distance(proj.point, gt_.node_pos(owner.b)) <= kNodeEps) {
        node_start(owner.b);
    } else {
        starts.push_back(WalkStart{proj.point, owner.b, owner.a,
                                   direction_angle_deg(proj.point, gt_.node_pos(owner.b))});
        starts.push_back(WalkStart{proj.point, owner.a, owner.b,
                                   direction_angle_deg(proj.point, gt_.node_pos(owner.a))});
    }
    std::sort(starts.begin(), starts.end(),
              [](const WalkStart& x, const WalkStart& y) { return x.bearing < y.bearing; });

    const double blob_skip = std::min(2.0, stride_ / 2.0);
    constexpr double kSampleStep = 0.5;

    std::vector<Proposal> out;
    for (const auto& ws : starts) {
        if (out.size() >= 4) break;
        Point cur = ws.from;
        int next = ws.toward;
        int prev = ws.back;
        double arc = 0.0;
        bool seen_gap = false;
        bool emitted = false;
        Point proposal;

        while (arc < stride_ - 1e-9) {
            double d_node = distance(cur, gt_.node_pos(next));
            const double step = std::min({kSampleStep, d_node, stride_ - arc});
            if (d_node > 1e-12) {
                cur = cur + (gt_.node_pos(next) - cur) * (step / d_node);
                arc += step;
                d_node -= step;
            }
            const bool at_node = d_node <= 1e-9;
            if (at_node) cur = gt_.node_pos(next);

            if (arc > blob_skip) {
                const Point local = patch.to_patch(cur);
                if (local.x < 0.0 || local.y < 0.0 || local.x >= patch.size ||
                    local.y >= patch.size) {
                    break;  // walk left the visible patch
                }
                const bool covered = patch.raster_at_global(cur);
                if (!seen_gap) {
                    if (!covered) seen_gap = true;
                } else if (covered) {
                    proposal = cur;  // re-entry onto existing road
                    emitted = true;
                    break;
                }
            }
            if (at_node) {
                if (gt_.degree(next) != 2) {
                    if (seen_gap) {
                        proposal = cur;  // junction or terminus
                        emitted = true;
                    }
                    break;
                }
                const auto& nbrs = gt_.neighbors(next);
                const int nxt = nbrs[0] == prev ? nbrs[1] : nbrs[0];
                prev = next;
                next = nxt;
            }
        }
        if (!emitted && seen_gap && arc >= stride_ - 1e-9) {
            proposal = cur;
            emitted = true;
        }
        if (!emitted) continue;

        if (sigma_ > 0.0) {
            proposal.x += rng_.normal(0.0, sigma_);
            proposal.y += rng_.normal(0.0, sigma_);
        }
        Point local = patch.to_patch(proposal);
        local.x = std::clamp(local.x, 0.0, patch.size - 1e-6);
        local.y = std::clamp(local.y, 0.0, patch.size - 1e-6);
        out.push_back(Proposal{local, 1.0});
    }
    return out;
}

// ---------------------------------------------------------------------------
// Heuristic proposer

HeuristicProposer::HeuristicProposer(double stride, double intensity_threshold)
    : stride_(stride), intensity_threshold_(intensity_threshold) {
    if (stride <= 1.0) throw Error("heuristic stride must exceed 1 pixel");
}

std::vector<Proposal> HeuristicProposer::propose(const ProposerPatch& patch) {
    const Point center_local = patch.to_patch(patch.center);
    const int cx = static_cast<int>(std::lround(center_local.x));
    const int cy = static_cast<int>(std::lround(center_local.y));

    // Incident direction from the raster blob around the endpoint.
    constexpr int kOrientRadius = 16;
    Point sum{0.0, 0.0};
    for (int dy = -kOrientRadius; dy <= kOrientRadius; ++dy) {
        for (int dx = -kOrientRadius; dx <= kOrientRadius; ++dx) {
            const int x = cx + dx;
            const int y = cy + dy;
            if (x < 0 || y < 0 || x >= patch.size || y >= patch.size) continue;
            if (patch.raster_crop.at(0, x, y) <= 0.5) continue;
            const Point off{x + 0.5 - center_local.x, y + 0.5 - center_local.y};
            if (off.norm() < 1e-9) continue;
            sum = sum + off;
        }
    }
    if (sum.norm() < 1e-6) return {};  // cannot orient

    // Probe straight ahead, away from the incident road.
    const Point dir = Point{-sum.x, -sum.y} * (1.0 / sum.norm());
    double intensity_sum = 0.0;
    int samples = 0;
    for (double t = 3.0; t <= stride_; t += 1.0) {
        const Point p = center_local + dir * t;
        const int x = static_cast<int>(std::floor(p.x));
        const int y = static_cast<int>(std::floor(p.y));
        if (x < 0 || y < 0 || x >= patch.size || y >= patch.size) return {};
        intensity_sum += patch.image_crop.at(0, x, y);
        ++samples;
    }
    if (samples == 0) return {};
    const double mean = intensity_sum / samples;
    if (mean < intensity_threshold_) return {};

    Point local = center_local + dir * stride_;
    local.x = std::clamp(local.x, 0.0, patch.size - 1e-6);
    local.y = std::clamp(local.y, 0.0, patch.size - 1e-6);
    return {Proposal{local, std::clamp(mean, 0.0, 1.0)}};
}

void save_trace_jsonl(const CompletionTrace& trace, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write trace file: " + path);
    for (const auto& row : trace.rows) {
        nlohmann::json j;
        j["walk"] = row.walk;
        j["step"] = row.step;
        j["center"] = {row.center.x, row.center.y};
        nlohmann::json proposed = nlohmann::json::array();
        for (const auto& [p, prob] : row.proposed) proposed.push_back({p.x, p.y, prob});
        j["proposed"] = std::move(proposed);
        j["action"] = row.action;
        j["reason"] = row.reason;
        j["added_nodes"] = row.added_nodes;
        nlohmann::json edges = nlohmann::json::array();
        for (const auto& e : row.added_edges) edges.push_back({e.a, e.b});
        j["added_edges"] = std::move(edges);
        out << j.dump() << "\n";
    }
}

}  // namespace roadnet
