#pragma once

#include <string>
#include <vector>

#include "roadnet/node_codec.hpp"
#include "roadnet/rng.hpp"
#include "roadnet/road_graph.hpp"

namespace roadnet {

// Minimal row-major dense matrix used by the network numerics.
struct Mat {
    int rows = 0;
    int cols = 0;
    std::vector<double> d;

    Mat() = default;
    Mat(int r, int c) : rows(r), cols(c), d(static_cast<std::size_t>(r) * c, 0.0) {}

    double& at(int r, int c) { return d[static_cast<std::size_t>(r) * cols + c]; }
    double at(int r, int c) const { return d[static_cast<std::size_t>(r) * cols + c]; }
};

enum class PairMode { concat, sum };

struct ConnectConfig {
    int descriptor_bins = 36;
    int n_pt = 8;        // candidate rows per query node
    int hidden1 = 38;    // width after the first projection
    int hidden2 = 64;    // attention width
    int heads = 4;
    int layers = 3;
    PairMode pair_mode = PairMode::concat;

    int feature_dim() const { return 2 + descriptor_bins; }
    int input_dim() const {
        return pair_mode == PairMode::concat ? 2 * feature_dim() : feature_dim();
    }
};

struct LinearLayer {
    Mat weight;  // in x out
    Mat bias;    // 1 x out
};

struct AttentionLayer {
    LinearLayer query, key, value, output;
};

// Link predictor: pair projection -> ReLU -> projection to the attention
// width -> stacked residual multi-head self-attention over the candidate
// rows -> linear head -> per-entry sigmoid, giving an (N_pt, 2) probability
// tensor whose channel 1 is the "connected" probability.
struct ConnectNet {
    ConnectConfig cfg;
    // Fixed affine input preprocessing x' = (x - shift) * scale, fitted from
    // training data; identity by default. Not part of the trained parameters.
    Mat input_shift;  // 1 x input_dim
    Mat input_scale;  // 1 x input_dim
    LinearLayer proj1, proj2, head;
    std::vector<AttentionLayer> attn;
};

ConnectNet init_connect_net(const ConnectConfig& cfg, Rng& rng);

// Named views over every parameter tensor, in a fixed order shared by the
// optimizer, serialization and gradient checks.
struct ParamRef {
    std::string name;
    Mat* mat;
};
std::vector<ParamRef> parameters(ConnectNet& net);

// Candidate rows for one query node. Padded rows are masked out of both the
// attention and the loss.
struct ConnectBatch {
    Mat rows;                 // N x input_dim
    std::vector<char> valid;  // N flags
};

// Builds a batch from the query node's feature and its candidates' features,
// combining each pair per cfg.pair_mode and padding with masked rows up to
// cfg.n_pt (more candidates than n_pt is an error).
ConnectBatch make_batch(const ConnectConfig& cfg, const std::vector<double>& center_feature,
                        const std::vector<std::vector<double>>& candidate_features);

// Probabilities, shape N x 2, every entry in (0,1).
Mat forward(const ConnectNet& net, const ConnectBatch& batch);

struct BackwardResult {
    double loss = 0.0;
    ConnectNet grads;  // same shapes as the net, holding d(loss)/d(param)
};

// Mean binary cross-entropy (with logits) over the unmasked rows against
// two-channel targets (1-y, y), plus exact gradients for every parameter.
BackwardResult backward(const ConnectNet& net, const ConnectBatch& batch,
                        const std::vector<int>& labels);

struct TrainSample {
    ConnectBatch batch;
    std::vector<int> labels;  // one per row; masked rows ignored
};

struct TrainResult {
    std::vector<double> loss_curve;  // mean loss per epoch
};

// Sets input_shift/input_scale to the per-dimension mean and inverse
// standard deviation over the unmasked rows of the dataset.
void fit_input_normalization(ConnectNet& net, const std::vector<TrainSample>& dataset);

// Gradient descent with a fixed learning rate and classical momentum,
// samples visited in order. Throws if the loss goes non-finite, naming the
// epoch.
TrainResult train(ConnectNet& net, const std::vector<TrainSample>& dataset, int epochs, double lr,
                  double momentum = 0.9);

// Runs candidate search + forward over every node and adds an undirected
// edge whenever the class-1 probability reaches the threshold in either
// direction of a pair. Node ids are the descriptor indices.
RoadGraph predict_edges(const ConnectNet& net, const std::vector<NodeDescriptor>& nodes,
                        double extent_w, double extent_h, double range_r, int n_pt,
                        double threshold);

void save_weights(const ConnectNet& net, const std::string& path);
ConnectNet load_weights(const std::string& path);

}  // namespace roadnet
