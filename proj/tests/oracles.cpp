#include "oracles.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <map>
#include <set>

#include "roadnet/error.hpp"

namespace oracle {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();

double euclid(const Point& a, const Point& b) {
    return std::hypot(a.x - b.x, a.y - b.y);
}
}  // namespace

double segment_distance(const Point& p, const Point& a, const Point& b) {
    double lo = 0.0, hi = 1.0;
    for (int it = 0; it < 200; ++it) {
        const double m1 = lo + (hi - lo) / 3.0;
        const double m2 = hi - (hi - lo) / 3.0;
        const Point q1{a.x + (b.x - a.x) * m1, a.y + (b.y - a.y) * m1};
        const Point q2{a.x + (b.x - a.x) * m2, a.y + (b.y - a.y) * m2};
        if (euclid(p, q1) < euclid(p, q2)) {
            hi = m2;
        } else {
            lo = m1;
        }
    }
    const double t = (lo + hi) / 2.0;
    return euclid(p, {a.x + (b.x - a.x) * t, a.y + (b.y - a.y) * t});
}

RasterMap rasterize_brute(const RoadGraph& g, double line_width, int w, int h) {
    RasterMap out(w, h);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const Point c{x + 0.5, y + 0.5};
            for (const auto& e : g.edges()) {
                if (segment_distance(c, g.node_pos(e.a), g.node_pos(e.b)) <= line_width / 2.0) {
                    out.set(x, y);
                    break;
                }
            }
        }
    }
    return out;
}

NearestHit nearest_brute(const RoadGraph& g, const Point& p) {
    NearestHit best;
    best.dist = kInf;
    const auto& edges = g.edges();
    for (std::size_t i = 0; i < edges.size(); ++i) {
        const Point a = g.node_pos(edges[i].a);
        const Point b = g.node_pos(edges[i].b);
        const double d = segment_distance(p, a, b);
        if (d < best.dist) {
            best.dist = d;
            best.edge_id = static_cast<int>(i);
            // Dense parameter scan for the witness point.
            double bt = 0.0, bd = kInf;
            for (int s = 0; s <= 4096; ++s) {
                const double t = s / 4096.0;
                const Point q{a.x + (b.x - a.x) * t, a.y + (b.y - a.y) * t};
                const double dd = euclid(p, q);
                if (dd < bd) {
                    bd = dd;
                    bt = t;
                }
            }
            best.point = {a.x + (b.x - a.x) * bt, a.y + (b.y - a.y) * bt};
        }
    }
    return best;
}

std::vector<int> knn_brute(const std::vector<roadnet::Node>& nodes, int center_id, double range,
                           int k) {
    Point center;
    for (const auto& n : nodes) {
        if (n.id == center_id) center = n.pos;
    }
    std::vector<std::pair<double, int>> cands;
    for (const auto& n : nodes) {
        if (n.id == center_id) continue;
        const double d = euclid(center, n.pos);
        if (d <= range) cands.emplace_back(d, n.id);
    }
    std::sort(cands.begin(), cands.end());
    std::vector<int> out;
    for (std::size_t i = 0; i < cands.size() && i < static_cast<std::size_t>(k); ++i) {
        out.push_back(cands[i].second);
    }
    return out;
}

std::vector<std::vector<double>> floyd_warshall(const RoadGraph& g, std::vector<int>& ids_out) {
    ids_out = g.node_ids();
    std::map<int, int> idx;
    for (std::size_t i = 0; i < ids_out.size(); ++i) idx[ids_out[i]] = static_cast<int>(i);
    const std::size_t n = ids_out.size();
    std::vector<std::vector<double>> d(n, std::vector<double>(n, kInf));
    for (std::size_t i = 0; i < n; ++i) d[i][i] = 0.0;
    for (const auto& e : g.edges()) {
        const double len = euclid(g.node_pos(e.a), g.node_pos(e.b));
        const int ia = idx[e.a], ib = idx[e.b];
        d[ia][ib] = std::min(d[ia][ib], len);
        d[ib][ia] = std::min(d[ib][ia], len);
    }
    for (std::size_t k = 0; k < n; ++k) {
        for (std::size_t i = 0; i < n; ++i) {
            if (d[i][k] == kInf) continue;
            for (std::size_t j = 0; j < n; ++j) {
                if (d[k][j] == kInf) continue;
                d[i][j] = std::min(d[i][j], d[i][k] + d[k][j]);
            }
        }
    }
    return d;
}

namespace {
void enumerate_paths(const RoadGraph& g, int cur, int goal, double len, std::set<int>& seen,
                     double& best) {
    if (cur == goal) {
        best = std::min(best, len);
        return;
    }
    if (len >= best) return;
    for (const int nb : g.neighbors(cur)) {
        if (seen.count(nb) > 0) continue;
        seen.insert(nb);
        enumerate_paths(g, nb, goal, len + euclid(g.node_pos(cur), g.node_pos(nb)), seen, best);
        seen.erase(nb);
    }
}
}  // namespace

double shortest_path_enumerate(const RoadGraph& g, int u, int v) {
    double best = kInf;
    std::set<int> seen{u};
    enumerate_paths(g, u, v, 0.0, seen, best);
    return best;
}

namespace {

// Re-coded densification: same contract, separate implementation.
RoadGraph densify_oracle(const RoadGraph& g, double spacing) {
    RoadGraph out = (g.width() > 0.0) ? RoadGraph(g.width(), g.height()) : RoadGraph();
    for (const auto& n : g.nodes()) out.add_node_with_id(n.id, n.pos.x, n.pos.y);
    int next = g.max_node_id() + 1;
    for (const auto& e : g.edges()) {
        const Point a = g.node_pos(e.a);
        const Point b = g.node_pos(e.b);
        const double len = euclid(a, b);
        int pieces = 1;
        while (len / pieces > spacing) ++pieces;
        int prev = e.a;
        for (int i = 1; i < pieces; ++i) {
            const double t = static_cast<double>(i) / pieces;
            out.add_node_with_id(next, a.x + (b.x - a.x) * t, a.y + (b.y - a.y) * t);
            out.add_edge(prev, next);
            prev = next++;
        }
        out.add_edge(prev, e.b);
    }
    return out;
}

}  // namespace

double apls_directional_oracle(const RoadGraph& a, const RoadGraph& b, const AplsConfig& cfg) {
    std::vector<int> a_ids, b_ids;
    const auto da = floyd_warshall(a, a_ids);
    const auto db = floyd_warshall(b, b_ids);
    std::map<int, int> a_idx, b_idx;
    for (std::size_t i = 0; i < a_ids.size(); ++i) a_idx[a_ids[i]] = static_cast<int>(i);
    for (std::size_t i = 0; i < b_ids.size(); ++i) b_idx[b_ids[i]] = static_cast<int>(i);

    // Canonical coordinate order, as the module defines it.
    std::vector<int> order = a_ids;
    std::sort(order.begin(), order.end(), [&](int x, int y) {
        const Point p = a.node_pos(x), q = a.node_pos(y);
        return p.x < q.x || (p.x == q.x && (p.y < q.y || (p.y == q.y && a_idx[x] < a_idx[y])));
    });

    auto match = [&](int a_id) -> int {
        const Point p = a.node_pos(a_id);
        int best = -1;
        double bd = kInf;
        Point bp;
        for (const int bid : b_ids) {
            const Point q = b.node_pos(bid);
            const double d = euclid(p, q);
            if (d > cfg.snap_radius) continue;
            if (d < bd || (d == bd && (q.x < bp.x || (q.x == bp.x && q.y < bp.y)))) {
                bd = d;
                best = bid;
                bp = q;
            }
        }
        return best;
    };

    double sum = 0.0;
    std::size_t count = 0;
    for (std::size_t i = 0; i < order.size(); ++i) {
        for (std::size_t j = i + 1; j < order.size(); ++j) {
            const double la = da[a_idx[order[i]]][a_idx[order[j]]];
            if (!(la < kInf) || la <= 1e-9) continue;
            const int mu = match(order[i]);
            const int mv = match(order[j]);
            double penalty = 1.0;
            if (mu >= 0 && mv >= 0) {
                const double lb = db[b_idx[mu]][b_idx[mv]];
                if (lb < kInf) penalty = std::min(1.0, std::abs(la - lb) / la);
            }
            sum += penalty;
            ++count;
        }
    }
    if (count == 0) throw roadnet::Error("oracle: degenerate source graph");
    return 1.0 - sum / count;
}

double apls_oracle(const RoadGraph& gt, const RoadGraph& pred, const AplsConfig& cfg) {
    const RoadGraph gt_d = densify_oracle(gt, cfg.densify_spacing);
    const RoadGraph pred_d = densify_oracle(pred, cfg.densify_spacing);
    auto dir = [&cfg](const RoadGraph& a, const RoadGraph& b) {
        try {
            return apls_directional_oracle(a, b, cfg);
        } catch (const roadnet::Error&) {
            return 0.0;
        }
    };
    const double s1 = dir(pred_d, gt_d);
    const double s2 = dir(gt_d, pred_d);
    if (s1 + s2 <= 0.0) return 0.0;
    return cfg.combine == roadnet::AplsCombine::harmonic ? 2.0 * s1 * s2 / (s1 + s2)
                                                         : s1 * s2 / (s1 + s2);
}

namespace {

// Vertex-list graph with the probe point spliced in; Bellman-Ford distances.
struct SplitGraph {
    std::vector<Point> pos;
    std::vector<std::array<int, 2>> edges;
    int source = -1;
};

SplitGraph build_split(const RoadGraph& g, const Point& probe) {
    SplitGraph sg;
    std::map<int, int> idx;
    for (const auto& n : g.nodes()) {
        idx[n.id] = static_cast<int>(sg.pos.size());
        sg.pos.push_back(n.pos);
    }
    // Owning edge by ternary-search distance.
    const auto hit = nearest_brute(g, probe);
    const auto& edges = g.edges();
    for (std::size_t i = 0; i < edges.size(); ++i) {
        if (static_cast<int>(i) == hit.edge_id) continue;
        sg.edges.push_back({idx[edges[i].a], idx[edges[i].b]});
    }
    const auto& owner = edges[hit.edge_id];
    if (euclid(hit.point, g.node_pos(owner.a)) <= 1e-9) {
        sg.source = idx[owner.a];
        sg.edges.push_back({idx[owner.a], idx[owner.b]});
    } else if (euclid(hit.point, g.node_pos(owner.b)) <= 1e-9) {
        sg.source = idx[owner.b];
        sg.edges.push_back({idx[owner.a], idx[owner.b]});
    } else {
        sg.source = static_cast<int>(sg.pos.size());
        sg.pos.push_back(hit.point);
        sg.edges.push_back({idx[owner.a], sg.source});
        sg.edges.push_back({sg.source, idx[owner.b]});
    }
    return sg;
}

std::vector<double> bellman_ford(const SplitGraph& sg) {
    std::vector<double> dist(sg.pos.size(), kInf);
    dist[sg.source] = 0.0;
    for (std::size_t round = 0; round + 1 < sg.pos.size(); ++round) {
        bool changed = false;
        for (const auto& e : sg.edges) {
            const double len = euclid(sg.pos[e[0]], sg.pos[e[1]]);
            if (dist[e[0]] + len < dist[e[1]] - 1e-15) {
                dist[e[1]] = dist[e[0]] + len;
                changed = true;
            }
            if (dist[e[1]] + len < dist[e[0]] - 1e-15) {
                dist[e[0]] = dist[e[1]] + len;
                changed = true;
            }
        }
        if (!changed) break;
    }
    return dist;
}

std::vector<Point> holes_oracle(const RoadGraph& g, const Point& probe, const TopoConfig& cfg) {
    if (g.edge_count() == 0) return {};
    const SplitGraph sg = build_split(g, probe);
    const auto dist = bellman_ford(sg);

    std::set<std::pair<long long, long long>> dedupe;
    std::vector<Point> out;
    auto emit = [&](const Point& p) {
        const std::pair<long long, long long> key{std::llround(p.x * 1e6),
                                                  std::llround(p.y * 1e6)};
        if (dedupe.insert(key).second) out.push_back(p);
    };
    for (const auto& e : sg.edges) {
        const Point& pu = sg.pos[e[0]];
        const Point& pv = sg.pos[e[1]];
        const double len = euclid(pu, pv);
        if (dist[e[0]] == kInf && dist[e[1]] == kInf) continue;
        for (int k = 0; k * cfg.hole_spacing <= cfg.propagation_radius + 1e-9; ++k) {
            const double target = k * cfg.hole_spacing;
            const double su = target - dist[e[0]];
            if (su >= -1e-9 && su <= len + 1e-9 &&
                dist[e[0]] + su <= dist[e[1]] + (len - su) + 1e-9) {
                const double t = std::clamp(su / len, 0.0, 1.0);
                emit({pu.x + (pv.x - pu.x) * t, pu.y + (pv.y - pu.y) * t});
            }
            const double sv = target - dist[e[1]];
            if (sv >= -1e-9 && sv <= len + 1e-9 &&
                dist[e[1]] + sv < dist[e[0]] + (len - sv) - 1e-9) {
                const double t = std::clamp(sv / len, 0.0, 1.0);
                emit({pv.x + (pu.x - pv.x) * t, pv.y + (pu.y - pv.y) * t});
            }
        }
    }
    return out;
}

}  // namespace

TopoScores topo_oracle(const RoadGraph& gt, const RoadGraph& pred, const TopoConfig& cfg) {
    const auto seeds = roadnet::sample_seeds(gt, cfg.seed_spacing);
    long long total_gt = 0, total_pred = 0, total_matched = 0;
    for (const auto& seed : seeds) {
        bool matched = false;
        Point matched_pos;
        double best[3] = {kInf, kInf, kInf};
        for (const auto& e : pred.edges()) {
            const Point a = pred.node_pos(e.a);
            const Point b = pred.node_pos(e.b);
            double lo = 0.0, hi = 1.0;
            for (int it = 0; it < 200; ++it) {
                const double m1 = lo + (hi - lo) / 3.0;
                const double m2 = hi - (hi - lo) / 3.0;
                const Point q1{a.x + (b.x - a.x) * m1, a.y + (b.y - a.y) * m1};
                const Point q2{a.x + (b.x - a.x) * m2, a.y + (b.y - a.y) * m2};
                if (euclid(seed.pos, q1) < euclid(seed.pos, q2)) {
                    hi = m2;
                } else {
                    lo = m1;
                }
            }
            const double t = (lo + hi) / 2.0;
            const Point q{a.x + (b.x - a.x) * t, a.y + (b.y - a.y) * t};
            const double d = euclid(seed.pos, q);
            if (d > cfg.match_radius) continue;
            double ang = roadnet::direction_angle_deg(a, b);
            if (ang >= 180.0) ang -= 180.0;
            if (roadnet::tangent_difference_deg(seed.tangent_deg, ang) > cfg.angle_tolerance) {
                continue;
            }
            const double key[3] = {d, q.x, q.y};
            if (std::lexicographical_compare(key, key + 3, best, best + 3)) {
                std::copy(key, key + 3, best);
                matched = true;
                matched_pos = q;
            }
        }
        const auto gt_holes = holes_oracle(gt, seed.pos, cfg);
        total_gt += static_cast<long long>(gt_holes.size());
        if (!matched) continue;
        const auto pred_holes = holes_oracle(pred, matched_pos, cfg);
        total_pred += static_cast<long long>(pred_holes.size());

        // Greedy one-to-one by ascending distance, re-coded: candidate list
        // built pred-major and stably sorted.
        struct Cand {
            double d;
            std::size_t gi, pi;
        };
        std::vector<Cand> cands;
        for (std::size_t pi = 0; pi < pred_holes.size(); ++pi) {
            for (std::size_t gi = 0; gi < gt_holes.size(); ++gi) {
                const double d = euclid(gt_holes[gi], pred_holes[pi]);
                if (d <= cfg.match_radius) cands.push_back({d, gi, pi});
            }
        }
        std::stable_sort(cands.begin(), cands.end(), [](const Cand& a, const Cand& b) {
            if (a.d != b.d) return a.d < b.d;
            if (a.gi != b.gi) return a.gi < b.gi;
            return a.pi < b.pi;
        });
        std::set<std::size_t> gu, pu;
        for (const auto& c : cands) {
            if (gu.count(c.gi) || pu.count(c.pi)) continue;
            gu.insert(c.gi);
            pu.insert(c.pi);
            ++total_matched;
        }
    }
    TopoScores s;
    s.precision = total_pred > 0 ? static_cast<double>(total_matched) / total_pred : 0.0;
    s.recall = total_gt > 0 ? static_cast<double>(total_matched) / total_gt : 0.0;
    s.f1 = (s.precision + s.recall) > 0.0
               ? 2.0 * s.precision * s.recall / (s.precision + s.recall)
               : 0.0;
    return s;
}

double gradient_check(ConnectNet& net, const ConnectBatch& batch, const std::vector<int>& labels,
                      int samples_per_tensor, std::uint64_t seed) {
    const auto analytic = roadnet::backward(net, batch, labels);
    auto net_params = roadnet::parameters(net);
    auto grad_params = roadnet::parameters(const_cast<ConnectNet&>(analytic.grads));

    Rng rng(seed);
    constexpr double kStep = 1e-5;
    double max_rel = 0.0;
    for (std::size_t t = 0; t < net_params.size(); ++t) {
        auto& data = net_params[t].mat->d;
        const auto& grad = grad_params[t].mat->d;
        const int n = static_cast<int>(data.size());
        for (int s = 0; s < samples_per_tensor; ++s) {
            const int i = static_cast<int>(rng.uniform_index(n));
            const double saved = data[i];
            data[i] = saved + kStep;
            const double lp = roadnet::backward(net, batch, labels).loss;
            data[i] = saved - kStep;
            const double lm = roadnet::backward(net, batch, labels).loss;
            data[i] = saved;
            const double fd = (lp - lm) / (2.0 * kStep);
            const double rel =
                std::abs(fd - grad[i]) / std::max({std::abs(fd), std::abs(grad[i]), 1e-6});
            max_rel = std::max(max_rel, rel);
        }
    }
    return max_rel;
}

RoadGraph random_graph(Rng& rng, int n_nodes, double extent, int extra_edges) {
    RoadGraph g(extent, extent);
    for (int i = 0; i < n_nodes; ++i) {
        g.add_node_with_id(i, rng.uniform(1.0, extent - 1.0), rng.uniform(1.0, extent - 1.0));
    }
    // Spanning chain plus random extras.
    for (int i = 1; i < n_nodes; ++i) {
        g.add_edge(static_cast<int>(rng.uniform_index(i)), i);
    }
    for (int e = 0; e < extra_edges; ++e) {
        const int a = static_cast<int>(rng.uniform_index(n_nodes));
        const int b = static_cast<int>(rng.uniform_index(n_nodes));
        if (a != b && !g.has_edge(a, b)) g.add_edge(a, b);
    }
    return g;
}

}  // namespace oracle
