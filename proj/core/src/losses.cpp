#include "roadnet/losses.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "roadnet/error.hpp"

namespace roadnet {

LossWeights schedule(int epoch) {
    if (epoch < 0) throw Error("epoch must be non-negative");
    LossWeights w;
    w.epoch = epoch;
    const double ramp = std::exp(static_cast<double>(std::min(epoch, 100) - 100));
    w.direct = 2.0 * ramp;
    w.connect = 5.0 * ramp;
    return w;
}

double l1_loss(const std::vector<Point>& pred, const std::vector<Point>& target) {
    if (pred.size() != target.size()) throw Error("coordinate list length mismatch");
    if (pred.empty()) return 0.0;
    double sum = 0.0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        sum += std::abs(pred[i].x - target[i].x) + std::abs(pred[i].y - target[i].y);
    }
    return sum / (2.0 * pred.size());
}

double l1_loss(const std::vector<double>& pred, const std::vector<double>& target) {
    if (pred.size() != target.size()) throw Error("value list length mismatch");
    if (pred.empty()) return 0.0;
    double sum = 0.0;
    for (std::size_t i = 0; i < pred.size(); ++i) sum += std::abs(pred[i] - target[i]);
    return sum / pred.size();
}

double focal_loss(const std::vector<double>& pred, const std::vector<int>& target, double gamma,
                  double alpha) {
    if (pred.size() != target.size()) throw Error("focal loss shape mismatch");
    if (pred.empty()) return 0.0;
    constexpr double kEps = 1e-12;
    double sum = 0.0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        const double p = std::clamp(pred[i], kEps, 1.0 - kEps);
        const double pt = target[i] == 1 ? p : 1.0 - p;
        sum += -alpha * std::pow(1.0 - pt, gamma) * std::log(pt);
    }
    return sum / pred.size();
}

double binary_cross_entropy(const std::vector<double>& pred, const std::vector<int>& target) {
    if (pred.size() != target.size()) throw Error("bce shape mismatch");
    if (pred.empty()) return 0.0;
    constexpr double kEps = 1e-12;
    double sum = 0.0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        const double p = std::clamp(pred[i], kEps, 1.0 - kEps);
        sum += target[i] == 1 ? -std::log(p) : -std::log(1.0 - p);
    }
    return sum / pred.size();
}

double combined_global_loss(const GlobalLossParts& parts, const LossWeights& w) {
    return w.g_coord * parts.coord + w.direct * parts.direct + w.connect * parts.connect +
           w.g_reconstruction * parts.reconstruction;
}

double combined_local_loss(const LocalLossParts& parts, const LossWeights& w) {
    return w.l_coord * parts.coord + w.prob * parts.prob + w.l_reconstruction * parts.reconstruction;
}

namespace {

void assign_exhaustive(const std::vector<std::vector<double>>& cost, std::size_t row,
                       std::vector<bool>& used, std::vector<int>& current, double running,
                       std::vector<int>& best, double& best_cost) {
    if (row == cost.size()) {
        if (running < best_cost) {
            best_cost = running;
            best = current;
        }
        return;
    }
    if (running >= best_cost) return;
    for (std::size_t c = 0; c < cost[row].size(); ++c) {
        if (used[c]) continue;
        used[c] = true;
        current[row] = static_cast<int>(c);
        assign_exhaustive(cost, row + 1, used, current, running + cost[row][c], best, best_cost);
        used[c] = false;
    }
}

}  // namespace

std::vector<int> assign_matches(const std::vector<std::vector<double>>& cost) {
    if (cost.empty()) return {};
    const std::size_t rows = cost.size();
    const std::size_t cols = cost[0].size();
    for (const auto& r : cost) {
        if (r.size() != cols) throw Error("cost matrix must be rectangular");
    }
    if (cols < rows) throw Error("cost matrix needs at least as many columns as rows");

    if (rows <= 10) {
        std::vector<bool> used(cols, false);
        std::vector<int> current(rows, -1), best(rows, -1);
        double best_cost = std::numeric_limits<double>::infinity();
        assign_exhaustive(cost, 0, used, current, 0.0, best, best_cost);
        return best;
    }

    // Greedy: repeatedly take the globally cheapest unassigned (row, col).
    std::vector<int> out(rows, -1);
    std::vector<bool> row_done(rows, false), col_done(cols, false);
    for (std::size_t k = 0; k < rows; ++k) {
        double best_cost = std::numeric_limits<double>::infinity();
        std::size_t br = 0, bc = 0;
        for (std::size_t r = 0; r < rows; ++r) {
            if (row_done[r]) continue;
            for (std::size_t c = 0; c < cols; ++c) {
                if (col_done[c]) continue;
                if (cost[r][c] < best_cost) {
                    best_cost = cost[r][c];
                    br = r;
                    bc = c;
                }
            }
        }
        out[br] = static_cast<int>(bc);
        row_done[br] = true;
        col_done[bc] = true;
    }
    return out;
}

}  // namespace roadnet
