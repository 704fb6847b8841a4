#include "roadnet/synth.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "roadnet/error.hpp"

namespace roadnet {

namespace {

// splitmix64, for per-pixel background texture.
std::uint64_t hash64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

double texture01(int x, int y, std::uint64_t seed) {
    const std::uint64_t h =
        hash64(seed ^ (static_cast<std::uint64_t>(x) << 32) ^ static_cast<std::uint64_t>(y));
    return static_cast<double>(h >> 11) * 0x1.0p-53;
}

}  // namespace

Scene generate_scene(const SceneSpec& spec) {
    if (spec.width <= 0.0 || spec.height <= 0.0) throw Error("scene extent must be positive");
    if (spec.pitch <= 0.0) throw Error("grid pitch must be positive");
    if (spec.drop_rate < 0.0 || spec.drop_rate >= 1.0) throw Error("drop rate must be in [0,1)");

    Rng rng(spec.seed);
    const int nx = static_cast<int>(std::floor(spec.width / spec.pitch));
    const int ny = static_cast<int>(std::floor(spec.height / spec.pitch));
    if (nx < 2 || ny < 2) throw Error("extent too small for the grid pitch");

    RoadGraph g(spec.width, spec.height);
    auto grid_id = [nx](int i, int j) { return j * nx + i; };
    for (int j = 0; j < ny; ++j) {
        for (int i = 0; i < nx; ++i) {
            double x = spec.pitch / 2.0 + i * spec.pitch;
            double y = spec.pitch / 2.0 + j * spec.pitch;
            if (spec.jitter_sigma > 0.0) {
                const double cap = 4.0 * spec.jitter_sigma;
                x += std::clamp(rng.normal(0.0, spec.jitter_sigma), -cap, cap);
                y += std::clamp(rng.normal(0.0, spec.jitter_sigma), -cap, cap);
            }
            x = std::clamp(x, 1.0, spec.width - 1.0);
            y = std::clamp(y, 1.0, spec.height - 1.0);
            g.add_node_with_id(grid_id(i, j), x, y);
        }
    }

    struct Lat {
        int a, b;
    };
    std::vector<Lat> lattice;
    for (int j = 0; j < ny; ++j) {
        for (int i = 0; i < nx; ++i) {
            if (i + 1 < nx) lattice.push_back({grid_id(i, j), grid_id(i + 1, j)});
            if (j + 1 < ny) lattice.push_back({grid_id(i, j), grid_id(i, j + 1)});
        }
    }

    int next_id = nx * ny;
    for (const auto& e : lattice) {
        if (spec.drop_rate > 0.0 && rng.uniform01() < spec.drop_rate) continue;
        if (spec.curve_amplitude <= 0.0) {
            g.add_edge(e.a, e.b);
            continue;
        }
        // Bowed edge: subdivide with a perpendicular sinusoidal offset.
        const Point a = g.node_pos(e.a);
        const Point b = g.node_pos(e.b);
        const Point dir = b - a;
        const double len = dir.norm();
        const Point perp{-dir.y / len, dir.x / len};
        constexpr int kPieces = 4;
        int prev = e.a;
        for (int s = 1; s < kPieces; ++s) {
            const double t = static_cast<double>(s) / kPieces;
            const double off = spec.curve_amplitude * std::sin(M_PI * t);
            Point p = a + dir * t + perp * off;
            p.x = std::clamp(p.x, 0.0, spec.width);
            p.y = std::clamp(p.y, 0.0, spec.height);
            g.add_node_with_id(next_id, p.x, p.y);
            g.add_edge(prev, next_id);
            prev = next_id;
            ++next_id;
        }
        g.add_edge(prev, e.b);
    }

    // Drop nodes isolated by edge removal.
    RoadGraph clean(spec.width, spec.height);
    for (const auto& n : g.nodes()) {
        if (g.degree(n.id) > 0) clean.add_node_with_id(n.id, n.pos.x, n.pos.y);
    }
    for (const auto& e : g.edges()) clean.add_edge(e.a, e.b);

    // Render: anti-aliased strokes with a 1-pixel linear ramp.
    const int iw = static_cast<int>(spec.width);
    const int ih = static_cast<int>(spec.height);
    Image img(iw, ih, std::max(1, spec.channels));
    for (int y = 0; y < ih; ++y) {
        for (int x = 0; x < iw; ++x) {
            img.at(0, x, y) =
                spec.background_brightness * (0.85 + 0.3 * texture01(x, y, spec.seed));
        }
    }
    constexpr double kRenderHalfWidth = 1.5;
    for (const auto& e : clean.edges()) {
        const Point a = clean.node_pos(e.a);
        const Point b = clean.node_pos(e.b);
        const int x0 = std::max(0, static_cast<int>(std::floor(std::min(a.x, b.x) - 3.0)));
        const int x1 = std::min(iw - 1, static_cast<int>(std::ceil(std::max(a.x, b.x) + 3.0)));
        const int y0 = std::max(0, static_cast<int>(std::floor(std::min(a.y, b.y) - 3.0)));
        const int y1 = std::min(ih - 1, static_cast<int>(std::ceil(std::max(a.y, b.y) + 3.0)));
        for (int y = y0; y <= y1; ++y) {
            for (int x = x0; x <= x1; ++x) {
                const double d = point_segment_distance({x + 0.5, y + 0.5}, a, b);
                const double cov = std::clamp(kRenderHalfWidth + 0.5 - d, 0.0, 1.0);
                if (cov <= 0.0) continue;
                const double base = img.at(0, x, y);
                img.at(0, x, y) = std::max(base, base + (spec.road_brightness - base) * cov);
            }
        }
    }
    for (int c = 1; c < img.channels; ++c) {
        for (int y = 0; y < ih; ++y) {
            for (int x = 0; x < iw; ++x) {
                img.at(c, x, y) = texture01(x, y, spec.seed + 0x5eed + c);
            }
        }
    }
    return Scene{std::move(clean), std::move(img)};
}

Fragmentation fragment(const RoadGraph& gt, int n_breaks, double gap_len, Rng& rng) {
    if (n_breaks < 0) throw Error("break count must be non-negative");
    if (gap_len <= 0.0) throw Error("gap length must be positive");

    std::vector<int> eligible;  // indices into gt.edges()
    const auto& edges = gt.edges();
    for (std::size_t i = 0; i < edges.size(); ++i) {
        if (gt.degree(edges[i].a) < 2 || gt.degree(edges[i].b) < 2) continue;
        const double len = distance(gt.node_pos(edges[i].a), gt.node_pos(edges[i].b));
        if (len > gap_len + 4.0) eligible.push_back(static_cast<int>(i));
    }
    if (static_cast<int>(eligible.size()) < n_breaks) {
        throw Error("insufficient interior edges: need " + std::to_string(n_breaks) + ", have " +
                    std::to_string(eligible.size()));
    }
    // Seeded partial shuffle picks the break edges.
    for (int i = 0; i < n_breaks; ++i) {
        const std::size_t j = i + rng.uniform_index(eligible.size() - i);
        std::swap(eligible[i], eligible[j]);
    }
    std::map<int, bool> breaking;
    for (int i = 0; i < n_breaks; ++i) breaking[eligible[i]] = true;

    Fragmentation out;
    out.residual = (gt.width() > 0.0) ? RoadGraph(gt.width(), gt.height()) : RoadGraph();
    for (const auto& n : gt.nodes()) out.residual.add_node_with_id(n.id, n.pos.x, n.pos.y);
    int next_id = gt.max_node_id() + 1;
    for (std::size_t i = 0; i < edges.size(); ++i) {
        const auto& e = edges[i];
        if (!breaking.count(static_cast<int>(i))) {
            out.residual.add_edge(e.a, e.b);
            continue;
        }
        const Point a = gt.node_pos(e.a);
        const Point b = gt.node_pos(e.b);
        const double len = distance(a, b);
        const double t0 = (len - gap_len) / (2.0 * len);
        const double t1 = (len + gap_len) / (2.0 * len);
        const Point p = a + (b - a) * t0;
        const Point q = a + (b - a) * t1;
        const int pid = next_id++;
        const int qid = next_id++;
        out.residual.add_node_with_id(pid, p.x, p.y);
        out.residual.add_node_with_id(qid, q.x, q.y);
        out.residual.add_edge(e.a, pid);
        out.residual.add_edge(qid, e.b);
        out.gaps.push_back(GapRecord{e.a, e.b, pid, qid, p, q, gap_len});
    }
    return out;
}

}  // namespace roadnet
