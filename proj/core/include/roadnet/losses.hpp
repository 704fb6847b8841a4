#pragma once

#include <vector>

#include "roadnet/geometry.hpp"

namespace roadnet {

// Loss balance coefficients. Coordinate, probability and reconstruction
// weights are constants; the direction and connection weights ramp up with
// the epoch and are clamped at their epoch-100 values.
struct LossWeights {
    double g_coord = 2.0;
    double direct = 0.0;
    double connect = 0.0;
    double g_reconstruction = 1.0;
    double l_coord = 2.0;
    double prob = 5.0;
    double l_reconstruction = 1.0;
    int epoch = 0;
};

// direct = 2*e^(epoch-100), connect = 5*e^(epoch-100), both clamped for
// epoch > 100.
LossWeights schedule(int epoch);

// Mean absolute deviation per coordinate component.
double l1_loss(const std::vector<Point>& pred, const std::vector<Point>& target);
double l1_loss(const std::vector<double>& pred, const std::vector<double>& target);

// Mean over bins of -alpha*(1-p_t)^gamma*log(p_t), p_t being the probability
// assigned to the true class. Predictions clamped to [1e-12, 1-1e-12].
double focal_loss(const std::vector<double>& pred, const std::vector<int>& target,
                  double gamma = 2.0, double alpha = 0.25);

double binary_cross_entropy(const std::vector<double>& pred, const std::vector<int>& target);

struct GlobalLossParts {
    double coord = 0.0;
    double direct = 0.0;
    double connect = 0.0;
    double reconstruction = 0.0;
};
double combined_global_loss(const GlobalLossParts& parts, const LossWeights& w);

struct LocalLossParts {
    double coord = 0.0;
    double prob = 0.0;
    double reconstruction = 0.0;
};
double combined_local_loss(const LocalLossParts& parts, const LossWeights& w);

// Row->column assignment minimizing total cost: exhaustive optimal for up to
// 10 rows, greedy nearest-neighbor beyond. cost must be rectangular with
// cols >= rows. Returns the matched column per row.
std::vector<int> assign_matches(const std::vector<std::vector<double>>& cost);

}  // namespace roadnet
