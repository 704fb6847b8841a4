#include "roadnet/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <queue>
#include <set>
#include <sstream>

#include <json.hpp>

#include "roadnet/error.hpp"
#include "roadnet/rng.hpp"

namespace roadnet {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Index-based adjacency for shortest-path work.
struct FlatGraph {
    std::vector<Point> pos;
    std::vector<std::vector<std::pair<int, double>>> adj;  // (target, length)

    int add_vertex(const Point& p) {
        pos.push_back(p);
        adj.emplace_back();
        return static_cast<int>(pos.size()) - 1;
    }
    void add_edge(int a, int b) {
        const double len = distance(pos[a], pos[b]);
        adj[a].emplace_back(b, len);
        adj[b].emplace_back(a, len);
    }
};

struct FlatView {
    FlatGraph flat;
    std::map<int, int> index_of;  // graph node id -> flat index
};

FlatView flatten(const RoadGraph& g) {
    FlatView v;
    for (const auto& n : g.nodes()) v.index_of[n.id] = v.flat.add_vertex(n.pos);
    for (const auto& e : g.edges()) v.flat.add_edge(v.index_of[e.a], v.index_of[e.b]);
    return v;
}

std::vector<double> dijkstra(const FlatGraph& g, int source) {
    std::vector<double> dist(g.pos.size(), kInf);
    using Entry = std::pair<double, int>;
    std::priority_queue<Entry, std::vector<Entry>, std::greater<>> heap;
    dist[source] = 0.0;
    heap.emplace(0.0, source);
    while (!heap.empty()) {
        const auto [d, u] = heap.top();
        heap.pop();
        if (d > dist[u]) continue;
        for (const auto& [to, len] : g.adj[u]) {
            const double nd = d + len;
            if (nd < dist[to]) {
                dist[to] = nd;
                heap.emplace(nd, to);
            }
        }
    }
    return dist;
}

// Chains: maximal polylines whose interior nodes all have degree 2.
struct Chain {
    std::vector<Point> pts;
    double length() const {
        double s = 0.0;
        for (std::size_t i = 1; i < pts.size(); ++i) s += distance(pts[i - 1], pts[i]);
        return s;
    }
};

std::vector<Chain> decompose_chains(const RoadGraph& g) {
    std::vector<Chain> chains;
    std::set<std::pair<int, int>> visited;
    auto mark = [&visited](int a, int b) {
        visited.insert({std::min(a, b), std::max(a, b)});
    };
    auto seen = [&visited](int a, int b) {
        return visited.count({std::min(a, b), std::max(a, b)}) > 0;
    };

    auto walk = [&](int start, int next) {
        Chain c;
        c.pts.push_back(g.node_pos(start));
        int prev = start;
        int cur = next;
        mark(prev, cur);
        c.pts.push_back(g.node_pos(cur));
        while (g.degree(cur) == 2 && cur != start) {
            const auto& nbrs = g.neighbors(cur);
            const int nxt = nbrs[0] == prev ? nbrs[1] : nbrs[0];
            mark(cur, nxt);
            c.pts.push_back(g.node_pos(nxt));
            prev = cur;
            cur = nxt;
        }
        return c;
    };

    for (const auto& n : g.nodes()) {
        if (g.degree(n.id) == 2) continue;
        for (const int nb : g.neighbors(n.id)) {
            if (!seen(n.id, nb)) chains.push_back(walk(n.id, nb));
        }
    }
    // Leftover pure cycles.
    for (const auto& n : g.nodes()) {
        for (const int nb : g.neighbors(n.id)) {
            if (!seen(n.id, nb)) chains.push_back(walk(n.id, nb));
        }
    }
    return chains;
}

struct ChainPoint {
    Point pos;
    double tangent_deg;
};

ChainPoint point_at_arc(const Chain& c, double arc) {
    double acc = 0.0;
    for (std::size_t i = 1; i < c.pts.size(); ++i) {
        const double seg = distance(c.pts[i - 1], c.pts[i]);
        if (acc + seg >= arc - 1e-9) {
            const double t = seg > 0.0 ? std::clamp((arc - acc) / seg, 0.0, 1.0) : 0.0;
            const Point p = c.pts[i - 1] + (c.pts[i] - c.pts[i - 1]) * t;
            double ang = direction_angle_deg(c.pts[i - 1], c.pts[i]);
            if (ang >= 180.0) ang -= 180.0;
            return {p, ang};
        }
        acc += seg;
    }
    double ang = direction_angle_deg(c.pts[c.pts.size() - 2], c.pts.back());
    if (ang >= 180.0) ang -= 180.0;
    return {c.pts.back(), ang};
}

std::pair<long long, long long> pos_key(const Point& p) {
    return {std::llround(p.x * 1e6), std::llround(p.y * 1e6)};
}

// Hole points: graph-distance level sets at multiples of `spacing` from
// `source`, out to `radius`. The source is spliced into its owning edge so
// distances along that edge are exact.
std::vector<Point> propagation_holes(const RoadGraph& g, const Point& source, double radius,
                                     double spacing) {
    if (g.edge_count() == 0) return {};
    FlatView view = flatten(g);
    FlatGraph& fg = view.flat;

    const auto proj = nearest_point_on_graph(g, source);
    const auto& owner = g.edges()[proj.edge_id];
    int src_idx;
    constexpr double kNodeEps = 1e-9;
    if (distance(proj.point, g.node_pos(owner.a)) <= kNodeEps) {
        src_idx = view.index_of[owner.a];
    } else if (distance(proj.point, g.node_pos(owner.b)) <= kNodeEps) {
        src_idx = view.index_of[owner.b];
    } else {
        src_idx = fg.add_vertex(proj.point);
        const int ia = view.index_of[owner.a];
        const int ib = view.index_of[owner.b];
        // Remove the owning edge and replace it with the two halves.
        auto drop = [&fg](int from, int to) {
            auto& lst = fg.adj[from];
            for (auto it = lst.begin(); it != lst.end(); ++it) {
                if (it->first == to) {
                    lst.erase(it);
                    break;
                }
            }
        };
        drop(ia, ib);
        drop(ib, ia);
        fg.add_edge(ia, src_idx);
        fg.add_edge(src_idx, ib);
    }

    const auto dist = dijkstra(fg, src_idx);

    std::set<std::pair<long long, long long>> dedupe;
    std::vector<Point> holes;
    auto emit = [&](const Point& p) {
        if (dedupe.insert(pos_key(p)).second) holes.push_back(p);
    };

    const int max_k = static_cast<int>(std::floor(radius / spacing + 1e-9));
    for (int u = 0; u < static_cast<int>(fg.pos.size()); ++u) {
        for (const auto& [v, len] : fg.adj[u]) {
            if (u > v) continue;  // one orientation per edge
            if (dist[u] == kInf && dist[v] == kInf) continue;
            for (int k = 0; k <= max_k; ++k) {
                const double target = k * spacing;
                // Crossing measured from u while the u-side is the shorter
                // approach, and symmetrically from v.
                const double su = target - dist[u];
                if (su >= -1e-9 && su <= len + 1e-9 && dist[u] + su <= dist[v] + (len - su) + 1e-9) {
                    const double t = std::clamp(su / len, 0.0, 1.0);
                    emit(fg.pos[u] + (fg.pos[v] - fg.pos[u]) * t);
                }
                const double sv = target - dist[v];
                if (sv >= -1e-9 && sv <= len + 1e-9 && dist[v] + sv < dist[u] + (len - sv) - 1e-9) {
                    const double t = std::clamp(sv / len, 0.0, 1.0);
                    emit(fg.pos[v] + (fg.pos[u] - fg.pos[v]) * t);
                }
            }
        }
    }
    std::sort(holes.begin(), holes.end(), [](const Point& a, const Point& b) {
        return a.x < b.x || (a.x == b.x && a.y < b.y);
    });
    return holes;
}

// One-to-one greedy matching by ascending distance; returns matched count.
int match_holes(const std::vector<Point>& gt_holes, const std::vector<Point>& pred_holes,
                double radius) {
    struct Cand {
        double dist;
        std::size_t gi, pi;
    };
    std::vector<Cand> cands;
    for (std::size_t gi = 0; gi < gt_holes.size(); ++gi) {
        for (std::size_t pi = 0; pi < pred_holes.size(); ++pi) {
            const double d = distance(gt_holes[gi], pred_holes[pi]);
            if (d <= radius) cands.push_back({d, gi, pi});
        }
    }
    std::sort(cands.begin(), cands.end(), [](const Cand& a, const Cand& b) {
        if (a.dist != b.dist) return a.dist < b.dist;
        if (a.gi != b.gi) return a.gi < b.gi;
        return a.pi < b.pi;
    });
    std::vector<char> g_used(gt_holes.size(), 0), p_used(pred_holes.size(), 0);
    int matched = 0;
    for (const auto& c : cands) {
        if (g_used[c.gi] || p_used[c.pi]) continue;
        g_used[c.gi] = 1;
        p_used[c.pi] = 1;
        ++matched;
    }
    return matched;
}

}  // namespace

std::vector<SeedSample> sample_seeds(const RoadGraph& g, double spacing) {
    if (spacing <= 0.0) throw Error("seed spacing must be positive");
    std::vector<SeedSample> out;
    std::set<std::pair<long long, long long>> dedupe;
    for (const auto& chain : decompose_chains(g)) {
        const double len = chain.length();
        std::vector<double> arcs;
        for (int k = 0; k * spacing <= len + 1e-9; ++k) arcs.push_back(k * spacing);
        if (arcs.empty() || arcs.back() < len - 1e-9) arcs.push_back(len);
        for (const double arc : arcs) {
            const auto cp = point_at_arc(chain, arc);
            if (dedupe.insert(pos_key(cp.pos)).second) {
                out.push_back(SeedSample{cp.pos, cp.tangent_deg});
            }
        }
    }
    return out;
}

TopoResult topo(const RoadGraph& gt, const RoadGraph& pred, const TopoConfig& cfg) {
    TopoResult result;
    const auto seeds = sample_seeds(gt, cfg.seed_spacing);
    long long total_gt = 0, total_pred = 0, total_matched = 0;

    for (const auto& seed : seeds) {
        SeedDetail detail;
        detail.seed = seed;

        // Best pred location within radius and angle tolerance; ties broken
        // by coordinates so the result is independent of id labels.
        double best_key[3] = {kInf, kInf, kInf};
        for (const auto& e : pred.edges()) {
            const Point a = pred.node_pos(e.a);
            const Point b = pred.node_pos(e.b);
            const auto proj = project_to_segment(seed.pos, a, b);
            if (proj.dist > cfg.match_radius) continue;
            double ang = direction_angle_deg(a, b);
            if (ang >= 180.0) ang -= 180.0;
            if (tangent_difference_deg(seed.tangent_deg, ang) > cfg.angle_tolerance) continue;
            const double key[3] = {proj.dist, proj.point.x, proj.point.y};
            if (std::lexicographical_compare(key, key + 3, best_key, best_key + 3)) {
                std::copy(key, key + 3, best_key);
                detail.matched = true;
                detail.matched_pos = proj.point;
            }
        }

        const auto gt_holes =
            propagation_holes(gt, seed.pos, cfg.propagation_radius, cfg.hole_spacing);
        detail.gt_holes = static_cast<int>(gt_holes.size());
        if (detail.matched) {
            const auto pred_holes =
                propagation_holes(pred, detail.matched_pos, cfg.propagation_radius, cfg.hole_spacing);
            detail.pred_holes = static_cast<int>(pred_holes.size());
            detail.matched_holes = match_holes(gt_holes, pred_holes, cfg.match_radius);
        }
        total_gt += detail.gt_holes;
        total_pred += detail.pred_holes;
        total_matched += detail.matched_holes;
        result.per_seed.push_back(std::move(detail));
    }

    result.precision = total_pred > 0 ? static_cast<double>(total_matched) / total_pred : 0.0;
    result.recall = total_gt > 0 ? static_cast<double>(total_matched) / total_gt : 0.0;
    result.f1 = (result.precision + result.recall) > 0.0
                    ? 2.0 * result.precision * result.recall / (result.precision + result.recall)
                    : 0.0;
    return result;
}

double shortest_path_length(const RoadGraph& g, int u, int v) {
    if (!g.has_node(u) || !g.has_node(v)) {
        throw Error("unknown node id " + std::to_string(g.has_node(u) ? v : u));
    }
    const FlatView view = flatten(g);
    const auto dist = dijkstra(view.flat, view.index_of.at(u));
    return dist[view.index_of.at(v)];
}

RoadGraph densify(const RoadGraph& g, double spacing) {
    if (spacing <= 0.0) throw Error("densify spacing must be positive");
    RoadGraph out = (g.width() > 0.0) ? RoadGraph(g.width(), g.height()) : RoadGraph();
    for (const auto& n : g.nodes()) out.add_node_with_id(n.id, n.pos.x, n.pos.y);
    int next = g.max_node_id() + 1;
    for (const auto& e : g.edges()) {
        const Point a = g.node_pos(e.a);
        const Point b = g.node_pos(e.b);
        const double len = distance(a, b);
        const int pieces = std::max(1, static_cast<int>(std::ceil(len / spacing)));
        int prev = e.a;
        for (int i = 1; i < pieces; ++i) {
            const Point p = a + (b - a) * (static_cast<double>(i) / pieces);
            out.add_node_with_id(next, p.x, p.y);
            out.add_edge(prev, next);
            prev = next;
            ++next;
        }
        out.add_edge(prev, e.b);
    }
    return out;
}

DirectionalApls apls_directional(const RoadGraph& a, const RoadGraph& b, const AplsConfig& cfg) {
    const FlatView va = flatten(a);
    const FlatView vb = flatten(b);

    // Canonical node order by coordinates keeps sampling and matching
    // independent of id labels.
    std::vector<int> order(va.flat.pos.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
    std::sort(order.begin(), order.end(), [&](int x, int y) {
        const Point& p = va.flat.pos[x];
        const Point& q = va.flat.pos[y];
        return p.x < q.x || (p.x == q.x && (p.y < q.y || (p.y == q.y && x < y)));
    });

    std::map<int, std::vector<double>> dist_cache_a, dist_cache_b;
    auto dist_a = [&](int idx) -> const std::vector<double>& {
        auto it = dist_cache_a.find(idx);
        if (it == dist_cache_a.end()) it = dist_cache_a.emplace(idx, dijkstra(va.flat, idx)).first;
        return it->second;
    };
    auto dist_b = [&](int idx) -> const std::vector<double>& {
        auto it = dist_cache_b.find(idx);
        if (it == dist_cache_b.end()) it = dist_cache_b.emplace(idx, dijkstra(vb.flat, idx)).first;
        return it->second;
    };

    // Nearest b vertex within the snap radius, ties by coordinates.
    std::map<int, int> match_cache;
    auto match_into_b = [&](int a_idx) -> int {
        auto it = match_cache.find(a_idx);
        if (it != match_cache.end()) return it->second;
        const Point& p = va.flat.pos[a_idx];
        int best = -1;
        double best_key[3] = {kInf, kInf, kInf};
        for (std::size_t j = 0; j < vb.flat.pos.size(); ++j) {
            const double d = distance(p, vb.flat.pos[j]);
            if (d > cfg.snap_radius) continue;
            const double key[3] = {d, vb.flat.pos[j].x, vb.flat.pos[j].y};
            if (std::lexicographical_compare(key, key + 3, best_key, best_key + 3)) {
                std::copy(key, key + 3, best_key);
                best = static_cast<int>(j);
            }
        }
        match_cache[a_idx] = best;
        return best;
    };

    DirectionalApls result;
    double penalty_sum = 0.0;
    std::size_t count = 0;
    auto eval_pair = [&](int ui, int vi) {
        const double la = dist_a(ui)[vi];
        if (!(la < kInf) || la <= 1e-9) return false;
        PairDetail d;
        d.u = ui;
        d.v = vi;
        d.len_a = la;
        const int mu = match_into_b(ui);
        const int mv = match_into_b(vi);
        if (mu < 0 || mv < 0) {
            d.len_b = kInf;
            d.penalty = 1.0;
            d.matched = false;
        } else {
            d.matched = true;
            d.len_b = dist_b(mu)[mv];
            d.penalty = d.len_b < kInf ? std::min(1.0, std::abs(la - d.len_b) / la) : 1.0;
        }
        penalty_sum += d.penalty;
        ++count;
        result.pairs.push_back(d);
        return true;
    };

    const std::size_t n = order.size();
    if (static_cast<int>(n) <= cfg.exhaustive_cap) {
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = i + 1; j < n; ++j) eval_pair(order[i], order[j]);
        }
    } else {
        Rng rng(cfg.seed);
        const std::size_t max_attempts = static_cast<std::size_t>(cfg.samples) * 50;
        std::size_t attempts = 0;
        while (count < static_cast<std::size_t>(cfg.samples) && attempts < max_attempts) {
            ++attempts;
            const int i = static_cast<int>(rng.uniform_index(n));
            const int j = static_cast<int>(rng.uniform_index(n));
            if (i == j) continue;
            eval_pair(order[std::min(i, j)], order[std::max(i, j)]);
        }
    }

    if (count == 0) throw Error("degenerate ground truth: no connected vertex pair");
    result.score = 1.0 - penalty_sum / count;
    return result;
}

double apls(const RoadGraph& gt, const RoadGraph& pred, const AplsConfig& cfg) {
    const RoadGraph gt_d = densify(gt, cfg.densify_spacing);
    const RoadGraph pred_d = densify(pred, cfg.densify_spacing);
    auto direction = [&cfg](const RoadGraph& a, const RoadGraph& b) {
        try {
            return apls_directional(a, b, cfg).score;
        } catch (const Error&) {
            return 0.0;  // no valid pair in the source graph
        }
    };
    const double s_p2t = direction(pred_d, gt_d);
    const double s_t2p = direction(gt_d, pred_d);
    if (s_p2t + s_t2p <= 0.0) return 0.0;
    const double prod = s_p2t * s_t2p;
    return cfg.combine == AplsCombine::harmonic ? 2.0 * prod / (s_p2t + s_t2p)
                                                : prod / (s_p2t + s_t2p);
}

MetricReport evaluate(const RoadGraph& gt, const RoadGraph& pred, const TopoConfig& tcfg,
                      const AplsConfig& acfg) {
    MetricReport report;
    report.topo = topo(gt, pred, tcfg);
    report.topo_config = tcfg;
    report.apls_config = acfg;

    const RoadGraph gt_d = densify(gt, acfg.densify_spacing);
    const RoadGraph pred_d = densify(pred, acfg.densify_spacing);
    auto direction = [&acfg](const RoadGraph& a, const RoadGraph& b) {
        try {
            return apls_directional(a, b, acfg);
        } catch (const Error&) {
            return DirectionalApls{};
        }
    };
    const auto p2t = direction(pred_d, gt_d);
    const auto t2p = direction(gt_d, pred_d);
    report.s_pred_to_gt = p2t.score;
    report.s_gt_to_pred = t2p.score;
    report.per_pair = t2p.pairs;
    if (report.s_pred_to_gt + report.s_gt_to_pred > 0.0) {
        const double prod = report.s_pred_to_gt * report.s_gt_to_pred;
        const double sum = report.s_pred_to_gt + report.s_gt_to_pred;
        report.apls =
            acfg.combine == AplsCombine::harmonic ? 2.0 * prod / sum : prod / sum;
    }
    return report;
}

std::string metric_report_to_json(const MetricReport& report) {
    nlohmann::json j;
    j["topo"] = {{"precision", report.topo.precision},
                 {"recall", report.topo.recall},
                 {"f1", report.topo.f1}};
    j["apls"] = report.apls;
    j["s_pred_to_gt"] = report.s_pred_to_gt;
    j["s_gt_to_pred"] = report.s_gt_to_pred;
    nlohmann::json seeds = nlohmann::json::array();
    for (const auto& s : report.topo.per_seed) {
        seeds.push_back({{"pos", {s.seed.pos.x, s.seed.pos.y}},
                         {"tangent_deg", s.seed.tangent_deg},
                         {"matched", s.matched},
                         {"gt_holes", s.gt_holes},
                         {"pred_holes", s.pred_holes},
                         {"matched_holes", s.matched_holes}});
    }
    j["per_seed"] = std::move(seeds);
    nlohmann::json pairs = nlohmann::json::array();
    for (const auto& p : report.per_pair) {
        pairs.push_back({{"u", p.u},
                         {"v", p.v},
                         {"len_a", p.len_a},
                         {"len_b", p.len_b < kInf ? p.len_b : -1.0},
                         {"penalty", p.penalty},
                         {"matched", p.matched}});
    }
    j["per_pair"] = std::move(pairs);
    j["config"] = {{"topo",
                    {{"seed_spacing", report.topo_config.seed_spacing},
                     {"match_radius", report.topo_config.match_radius},
                     {"angle_tolerance", report.topo_config.angle_tolerance},
                     {"propagation_radius", report.topo_config.propagation_radius},
                     {"hole_spacing", report.topo_config.hole_spacing}}},
                   {"apls",
                    {{"snap_radius", report.apls_config.snap_radius},
                     {"densify_spacing", report.apls_config.densify_spacing},
                     {"exhaustive_cap", report.apls_config.exhaustive_cap},
                     {"samples", report.apls_config.samples},
                     {"seed", report.apls_config.seed},
                     {"combine", report.apls_config.combine == AplsCombine::harmonic
                                     ? "harmonic"
                                     : "paper_verbatim"}}}};
    return j.dump(2) + "\n";
}

std::string format_metric_table(const MetricReport& report) {
    std::ostringstream os;
    os << "TOPO-P   TOPO-R   TOPO-F1  APLS\n";
    auto pct = [&os](double v) {
        os.setf(std::ios::fixed);
        os.precision(2);
        os.width(8);
        os.setf(std::ios::left, std::ios::adjustfield);
        os << v * 100.0;
        os << " ";
    };
    pct(report.topo.precision);
    pct(report.topo.recall);
    pct(report.topo.f1);
    os.setf(std::ios::fixed);
    os.precision(2);
    os << report.apls * 100.0 << "\n";
    return os.str();
}

}  // namespace roadnet
