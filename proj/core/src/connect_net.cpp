#include "roadnet/connect_net.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include <json.hpp>

#include "roadnet/error.hpp"
#include "roadnet/label_gen.hpp"

namespace roadnet {

namespace {

Mat matmul(const Mat& a, const Mat& b) {
    Mat out(a.rows, b.cols);
    for (int i = 0; i < a.rows; ++i) {
        for (int k = 0; k < a.cols; ++k) {
            const double v = a.at(i, k);
            if (v == 0.0) continue;
            for (int j = 0; j < b.cols; ++j) out.at(i, j) += v * b.at(k, j);
        }
    }
    return out;
}

// a^T * b
Mat matmul_tn(const Mat& a, const Mat& b) {
    Mat out(a.cols, b.cols);
    for (int k = 0; k < a.rows; ++k) {
        for (int i = 0; i < a.cols; ++i) {
            const double v = a.at(k, i);
            if (v == 0.0) continue;
            for (int j = 0; j < b.cols; ++j) out.at(i, j) += v * b.at(k, j);
        }
    }
    return out;
}

// a * b^T
Mat matmul_nt(const Mat& a, const Mat& b) {
    Mat out(a.rows, b.rows);
    for (int i = 0; i < a.rows; ++i) {
        for (int j = 0; j < b.rows; ++j) {
            double s = 0.0;
            for (int k = 0; k < a.cols; ++k) s += a.at(i, k) * b.at(j, k);
            out.at(i, j) = s;
        }
    }
    return out;
}

Mat add_bias(Mat x, const Mat& bias) {
    for (int i = 0; i < x.rows; ++i) {
        for (int j = 0; j < x.cols; ++j) x.at(i, j) += bias.at(0, j);
    }
    return x;
}

Mat col_sums(const Mat& x) {
    Mat out(1, x.cols);
    for (int i = 0; i < x.rows; ++i) {
        for (int j = 0; j < x.cols; ++j) out.at(0, j) += x.at(i, j);
    }
    return out;
}

LinearLayer init_linear(int in, int out, Rng& rng) {
    LinearLayer l;
    l.weight = Mat(in, out);
    l.bias = Mat(1, out);
    const double limit = std::sqrt(6.0 / (in + out));
    for (auto& v : l.weight.d) v = rng.uniform(-limit, limit);
    return l;
}

struct LinearCache {
    Mat input;
};

Mat linear_forward(const LinearLayer& l, const Mat& x, LinearCache* cache) {
    if (cache) cache->input = x;
    return add_bias(matmul(x, l.weight), l.bias);
}

Mat linear_backward(const LinearLayer& l, const LinearCache& cache, const Mat& d_out,
                    LinearLayer& grads) {
    grads.weight = matmul_tn(cache.input, d_out);
    grads.bias = col_sums(d_out);
    return matmul_nt(d_out, l.weight);
}

struct AttnCache {
    LinearCache q_in, k_in, v_in, o_in;
    Mat q, k, v;
    std::vector<Mat> attn_weights;  // softmax per head, N x N
    Mat concat;                     // heads concatenated, N x hidden2
};

Mat attention_forward(const AttentionLayer& layer, const Mat& x, const std::vector<char>& valid,
                      int heads, AttnCache* cache) {
    const int n = x.rows;
    const int width = layer.query.weight.cols;
    const int head_dim = width / heads;
    const double scale = 1.0 / std::sqrt(static_cast<double>(head_dim));

    AttnCache local;
    AttnCache& c = cache ? *cache : local;
    c.q = linear_forward(layer.query, x, cache ? &c.q_in : nullptr);
    c.k = linear_forward(layer.key, x, cache ? &c.k_in : nullptr);
    c.v = linear_forward(layer.value, x, cache ? &c.v_in : nullptr);

    c.concat = Mat(n, width);
    c.attn_weights.assign(heads, Mat(n, n));
    for (int h = 0; h < heads; ++h) {
        const int off = h * head_dim;
        Mat& p = c.attn_weights[h];
        for (int i = 0; i < n; ++i) {
            double max_s = -std::numeric_limits<double>::infinity();
            std::vector<double> scores(n, 0.0);
            for (int j = 0; j < n; ++j) {
                if (!valid[j]) continue;
                double s = 0.0;
                for (int d = 0; d < head_dim; ++d) s += c.q.at(i, off + d) * c.k.at(j, off + d);
                scores[j] = s * scale;
                max_s = std::max(max_s, scores[j]);
            }
            double denom = 0.0;
            for (int j = 0; j < n; ++j) {
                if (!valid[j]) continue;
                scores[j] = std::exp(scores[j] - max_s);
                denom += scores[j];
            }
            for (int j = 0; j < n; ++j) {
                p.at(i, j) = valid[j] ? scores[j] / denom : 0.0;
            }
            for (int d = 0; d < head_dim; ++d) {
                double s = 0.0;
                for (int j = 0; j < n; ++j) s += p.at(i, j) * c.v.at(j, off + d);
                c.concat.at(i, off + d) = s;
            }
        }
    }
    return linear_forward(layer.output, c.concat, cache ? &c.o_in : nullptr);
}

Mat attention_backward(const AttentionLayer& layer, const AttnCache& c,
                       const std::vector<char>& valid, int heads, const Mat& d_out,
                       AttentionLayer& grads) {
    const int n = c.q.rows;
    const int width = c.q.cols;
    const int head_dim = width / heads;
    const double scale = 1.0 / std::sqrt(static_cast<double>(head_dim));

    const Mat d_concat = linear_backward(layer.output, c.o_in, d_out, grads.output);

    Mat dq(n, width), dk(n, width), dv(n, width);
    for (int h = 0; h < heads; ++h) {
        const int off = h * head_dim;
        const Mat& p = c.attn_weights[h];
        for (int i = 0; i < n; ++i) {
            // dP and the softmax Jacobian, restricted to valid keys.
            std::vector<double> dp(n, 0.0);
            for (int j = 0; j < n; ++j) {
                if (!valid[j]) continue;
                double s = 0.0;
                for (int d = 0; d < head_dim; ++d) s += d_concat.at(i, off + d) * c.v.at(j, off + d);
                dp[j] = s;
            }
            double inner = 0.0;
            for (int j = 0; j < n; ++j) inner += dp[j] * p.at(i, j);
            for (int j = 0; j < n; ++j) {
                if (!valid[j]) continue;
                const double ds = p.at(i, j) * (dp[j] - inner) * scale;
                for (int d = 0; d < head_dim; ++d) {
                    dq.at(i, off + d) += ds * c.k.at(j, off + d);
                    dk.at(j, off + d) += ds * c.q.at(i, off + d);
                }
                for (int d = 0; d < head_dim; ++d) {
                    dv.at(j, off + d) += p.at(i, j) * d_concat.at(i, off + d);
                }
            }
        }
    }

    Mat dx = linear_backward(layer.query, c.q_in, dq, grads.query);
    const Mat dxk = linear_backward(layer.key, c.k_in, dk, grads.key);
    const Mat dxv = linear_backward(layer.value, c.v_in, dv, grads.value);
    for (std::size_t i = 0; i < dx.d.size(); ++i) dx.d[i] += dxk.d[i] + dxv.d[i];
    return dx;
}

struct ForwardCache {
    LinearCache proj1_in, proj2_in, head_in;
    Mat z1;  // pre-ReLU
    std::vector<AttnCache> attn;
    Mat logits;
};

Mat forward_impl(const ConnectNet& net, const ConnectBatch& batch, ForwardCache* cache) {
    const auto& cfg = net.cfg;
    if (batch.rows.cols != cfg.input_dim()) {
        throw Error("batch feature dimension " + std::to_string(batch.rows.cols) +
                    " does not match configured input dimension " +
                    std::to_string(cfg.input_dim()));
    }
    if (batch.rows.rows == 0) throw Error("empty batch");
    if (static_cast<int>(batch.valid.size()) != batch.rows.rows) {
        throw Error("mask length does not match row count");
    }
    if (std::count(batch.valid.begin(), batch.valid.end(), 1) == 0) throw Error("empty batch");

    Mat x0 = batch.rows;
    for (int i = 0; i < x0.rows; ++i) {
        for (int j = 0; j < x0.cols; ++j) {
            x0.at(i, j) = (x0.at(i, j) - net.input_shift.at(0, j)) * net.input_scale.at(0, j);
        }
    }
    Mat z1 = linear_forward(net.proj1, x0, cache ? &cache->proj1_in : nullptr);
    if (cache) cache->z1 = z1;
    Mat a1 = z1;
    for (auto& v : a1.d) v = std::max(0.0, v);
    Mat x = linear_forward(net.proj2, a1, cache ? &cache->proj2_in : nullptr);
    if (cache) cache->attn.resize(net.attn.size());
    for (std::size_t l = 0; l < net.attn.size(); ++l) {
        const Mat y = attention_forward(net.attn[l], x, batch.valid, cfg.heads,
                                        cache ? &cache->attn[l] : nullptr);
        for (std::size_t i = 0; i < x.d.size(); ++i) x.d[i] += y.d[i];  // residual
    }
    Mat logits = linear_forward(net.head, x, cache ? &cache->head_in : nullptr);
    if (cache) cache->logits = logits;
    Mat probs = logits;
    for (auto& v : probs.d) v = 1.0 / (1.0 + std::exp(-v));
    return probs;
}

ConnectNet zeros_like(const ConnectNet& net) {
    ConnectNet g;
    g.cfg = net.cfg;
    g.input_shift = Mat(1, net.cfg.input_dim());
    g.input_scale = Mat(1, net.cfg.input_dim());
    auto zero_linear = [](const LinearLayer& l) {
        LinearLayer z;
        z.weight = Mat(l.weight.rows, l.weight.cols);
        z.bias = Mat(l.bias.rows, l.bias.cols);
        return z;
    };
    g.proj1 = zero_linear(net.proj1);
    g.proj2 = zero_linear(net.proj2);
    g.head = zero_linear(net.head);
    for (const auto& a : net.attn) {
        g.attn.push_back(AttentionLayer{zero_linear(a.query), zero_linear(a.key),
                                        zero_linear(a.value), zero_linear(a.output)});
    }
    return g;
}

}  // namespace

ConnectNet init_connect_net(const ConnectConfig& cfg, Rng& rng) {
    if (cfg.hidden2 % cfg.heads != 0) throw Error("attention width must be divisible by head count");
    if (cfg.layers < 1 || cfg.n_pt < 1) throw Error("invalid network configuration");
    ConnectNet net;
    net.cfg = cfg;
    net.input_shift = Mat(1, cfg.input_dim());
    net.input_scale = Mat(1, cfg.input_dim());
    for (auto& v : net.input_scale.d) v = 1.0;
    net.proj1 = init_linear(cfg.input_dim(), cfg.hidden1, rng);
    net.proj2 = init_linear(cfg.hidden1, cfg.hidden2, rng);
    for (int l = 0; l < cfg.layers; ++l) {
        AttentionLayer layer{init_linear(cfg.hidden2, cfg.hidden2, rng),
                             init_linear(cfg.hidden2, cfg.hidden2, rng),
                             init_linear(cfg.hidden2, cfg.hidden2, rng),
                             init_linear(cfg.hidden2, cfg.hidden2, rng)};
        // Residual blocks start close to the identity map.
        for (auto& v : layer.output.weight.d) v *= 0.1;
        net.attn.push_back(std::move(layer));
    }
    net.head = init_linear(cfg.hidden2, 2, rng);
    return net;
}

std::vector<ParamRef> parameters(ConnectNet& net) {
    std::vector<ParamRef> out;
    auto add = [&out](const std::string& name, LinearLayer& l) {
        out.push_back({name + ".weight", &l.weight});
        out.push_back({name + ".bias", &l.bias});
    };
    add("proj1", net.proj1);
    add("proj2", net.proj2);
    for (std::size_t i = 0; i < net.attn.size(); ++i) {
        const std::string prefix = "attn" + std::to_string(i);
        add(prefix + ".query", net.attn[i].query);
        add(prefix + ".key", net.attn[i].key);
        add(prefix + ".value", net.attn[i].value);
        add(prefix + ".output", net.attn[i].output);
    }
    add("head", net.head);
    return out;
}

ConnectBatch make_batch(const ConnectConfig& cfg, const std::vector<double>& center_feature,
                        const std::vector<std::vector<double>>& candidate_features) {
    const int feat = cfg.feature_dim();
    if (static_cast<int>(center_feature.size()) != feat) {
        throw Error("center feature length " + std::to_string(center_feature.size()) +
                    " does not match feature dimension " + std::to_string(feat));
    }
    if (static_cast<int>(candidate_features.size()) > cfg.n_pt) {
        throw Error("more candidates than configured N_pt");
    }
    ConnectBatch batch;
    batch.rows = Mat(cfg.n_pt, cfg.input_dim());
    batch.valid.assign(cfg.n_pt, 0);
    for (std::size_t i = 0; i < candidate_features.size(); ++i) {
        const auto& cand = candidate_features[i];
        if (static_cast<int>(cand.size()) != feat) {
            throw Error("candidate feature length mismatch at row " + std::to_string(i));
        }
        if (cfg.pair_mode == PairMode::concat) {
            for (int j = 0; j < feat; ++j) batch.rows.at(static_cast<int>(i), j) = center_feature[j];
            for (int j = 0; j < feat; ++j) batch.rows.at(static_cast<int>(i), feat + j) = cand[j];
        } else {
            for (int j = 0; j < feat; ++j) {
                batch.rows.at(static_cast<int>(i), j) = center_feature[j] + cand[j];
            }
        }
        batch.valid[i] = 1;
    }
    return batch;
}

Mat forward(const ConnectNet& net, const ConnectBatch& batch) {
    return forward_impl(net, batch, nullptr);
}

BackwardResult backward(const ConnectNet& net, const ConnectBatch& batch,
                        const std::vector<int>& labels) {
    if (labels.size() != batch.valid.size()) throw Error("label count does not match row count");
    ForwardCache cache;
    forward_impl(net, batch, &cache);

    const int n = cache.logits.rows;
    int n_valid = 0;
    for (const auto v : batch.valid) n_valid += v;

    BackwardResult result;
    result.grads = zeros_like(net);

    // BCE with logits over two channels (1-y, y), averaged over unmasked
    // rows and channels.
    Mat d_logits(n, 2);
    double loss = 0.0;
    const double inv = 1.0 / (2.0 * n_valid);
    for (int i = 0; i < n; ++i) {
        if (!batch.valid[i]) continue;
        if (labels[i] != 0 && labels[i] != 1) throw Error("labels must be 0 or 1");
        const double targets[2] = {1.0 - labels[i], static_cast<double>(labels[i])};
        for (int c = 0; c < 2; ++c) {
            const double z = cache.logits.at(i, c);
            // max(z,0) - z*t + log(1+exp(-|z|))
            loss += (std::max(z, 0.0) - z * targets[c] + std::log1p(std::exp(-std::abs(z)))) * inv;
            const double sig = 1.0 / (1.0 + std::exp(-z));
            d_logits.at(i, c) = (sig - targets[c]) * inv;
        }
    }
    result.loss = loss;

    Mat dx = linear_backward(net.head, cache.head_in, d_logits, result.grads.head);
    for (int l = static_cast<int>(net.attn.size()) - 1; l >= 0; --l) {
        const Mat d_attn = attention_backward(net.attn[l], cache.attn[l], batch.valid,
                                              net.cfg.heads, dx, result.grads.attn[l]);
        for (std::size_t i = 0; i < dx.d.size(); ++i) dx.d[i] += d_attn.d[i];  // residual
    }
    Mat d_a1 = linear_backward(net.proj2, cache.proj2_in, dx, result.grads.proj2);
    for (std::size_t i = 0; i < d_a1.d.size(); ++i) {
        if (cache.z1.d[i] <= 0.0) d_a1.d[i] = 0.0;
    }
    linear_backward(net.proj1, cache.proj1_in, d_a1, result.grads.proj1);
    return result;
}

void fit_input_normalization(ConnectNet& net, const std::vector<TrainSample>& dataset) {
    const int dim = net.cfg.input_dim();
    std::vector<double> sum(dim, 0.0), sum_sq(dim, 0.0);
    std::size_t count = 0;
    for (const auto& s : dataset) {
        for (int i = 0; i < s.batch.rows.rows; ++i) {
            if (!s.batch.valid[i]) continue;
            ++count;
            for (int j = 0; j < dim; ++j) {
                const double v = s.batch.rows.at(i, j);
                sum[j] += v;
                sum_sq[j] += v * v;
            }
        }
    }
    if (count == 0) throw Error("empty training dataset");
    for (int j = 0; j < dim; ++j) {
        const double mean = sum[j] / count;
        const double var = std::max(0.0, sum_sq[j] / count - mean * mean);
        const double sd = std::sqrt(var);
        net.input_shift.at(0, j) = mean;
        net.input_scale.at(0, j) = sd > 1e-9 ? 1.0 / sd : 1.0;
    }
}

TrainResult train(ConnectNet& net, const std::vector<TrainSample>& dataset, int epochs, double lr,
                  double momentum) {
    if (dataset.empty()) throw Error("empty training dataset");
    if (momentum < 0.0 || momentum >= 1.0) throw Error("momentum must be in [0,1)");
    TrainResult result;
    auto params = parameters(net);
    std::vector<std::vector<double>> velocity(params.size());
    for (std::size_t p = 0; p < params.size(); ++p) {
        velocity[p].assign(params[p].mat->d.size(), 0.0);
    }
    for (int epoch = 0; epoch < epochs; ++epoch) {
        double epoch_loss = 0.0;
        for (const auto& sample : dataset) {
            auto back = backward(net, sample.batch, sample.labels);
            if (!std::isfinite(back.loss)) {
                throw Error("training diverged at epoch " + std::to_string(epoch));
            }
            epoch_loss += back.loss;
            auto grad_params = parameters(back.grads);
            for (std::size_t p = 0; p < params.size(); ++p) {
                auto& dst = params[p].mat->d;
                const auto& src = grad_params[p].mat->d;
                auto& vel = velocity[p];
                for (std::size_t i = 0; i < dst.size(); ++i) {
                    vel[i] = momentum * vel[i] + src[i];
                    dst[i] -= lr * vel[i];
                }
            }
        }
        result.loss_curve.push_back(epoch_loss / dataset.size());
    }
    return result;
}

RoadGraph predict_edges(const ConnectNet& net, const std::vector<NodeDescriptor>& nodes,
                        double extent_w, double extent_h, double range_r, int n_pt,
                        double threshold) {
    if (threshold <= 0.0 || threshold >= 1.0) throw Error("connect threshold must be in (0,1)");
    RoadGraph out(extent_w, extent_h);
    std::vector<Node> id_points;
    for (std::size_t i = 0; i < nodes.size(); ++i) {
        out.add_node_with_id(static_cast<int>(i), nodes[i].coord.x, nodes[i].coord.y);
        id_points.push_back(Node{static_cast<int>(i), nodes[i].coord});
    }
    if (nodes.empty()) return out;

    std::vector<std::vector<double>> features;
    features.reserve(nodes.size());
    for (const auto& d : nodes) features.push_back(node_feature(d, extent_w, extent_h));

    const int cap = std::min(n_pt, net.cfg.n_pt);
    const auto candidates = candidate_pairs(id_points, range_r, cap);
    for (const auto& cl : candidates) {
        if (cl.candidates.empty()) continue;
        std::vector<std::vector<double>> cand_feats;
        for (const int c : cl.candidates) cand_feats.push_back(features[c]);
        const auto batch = make_batch(net.cfg, features[cl.node], cand_feats);
        const Mat probs = forward(net, batch);
        for (std::size_t i = 0; i < cl.candidates.size(); ++i) {
            if (probs.at(static_cast<int>(i), 1) >= threshold) {
                out.add_edge(cl.node, cl.candidates[i]);
            }
        }
    }
    return out;
}

void save_weights(const ConnectNet& net, const std::string& path) {
    nlohmann::json j;
    j["format_version"] = 1;
    j["config"] = {{"descriptor_bins", net.cfg.descriptor_bins},
                   {"n_pt", net.cfg.n_pt},
                   {"hidden1", net.cfg.hidden1},
                   {"hidden2", net.cfg.hidden2},
                   {"heads", net.cfg.heads},
                   {"layers", net.cfg.layers},
                   {"pair_mode", net.cfg.pair_mode == PairMode::concat ? "concat" : "sum"}};
    nlohmann::json tensors;
    auto params = parameters(const_cast<ConnectNet&>(net));
    for (const auto& p : params) {
        tensors[p.name] = {{"shape", {p.mat->rows, p.mat->cols}}, {"data", p.mat->d}};
    }
    tensors["input.shift"] = {{"shape", {1, net.cfg.input_dim()}}, {"data", net.input_shift.d}};
    tensors["input.scale"] = {{"shape", {1, net.cfg.input_dim()}}, {"data", net.input_scale.d}};
    j["tensors"] = std::move(tensors);
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write weights file: " + path);
    out << j.dump() << "\n";
}

ConnectNet load_weights(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open weights file: " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(ss.str());
    } catch (const nlohmann::json::parse_error& e) {
        throw Error(std::string("weights parse error: ") + e.what());
    }
    if (!j.contains("format_version")) throw Error("weights file missing format_version");
    if (j["format_version"].get<int>() != 1) {
        throw Error("unsupported weights format_version " + j["format_version"].dump());
    }
    const auto& c = j.at("config");
    ConnectConfig cfg;
    cfg.descriptor_bins = c.at("descriptor_bins").get<int>();
    cfg.n_pt = c.at("n_pt").get<int>();
    cfg.hidden1 = c.at("hidden1").get<int>();
    cfg.hidden2 = c.at("hidden2").get<int>();
    cfg.heads = c.at("heads").get<int>();
    cfg.layers = c.at("layers").get<int>();
    cfg.pair_mode = c.at("pair_mode").get<std::string>() == "sum" ? PairMode::sum : PairMode::concat;

    Rng rng(0);
    ConnectNet net = init_connect_net(cfg, rng);
    auto params = parameters(net);
    params.push_back({"input.shift", &net.input_shift});
    params.push_back({"input.scale", &net.input_scale});
    const auto& tensors = j.at("tensors");
    for (auto& p : params) {
        if (!tensors.contains(p.name)) throw Error("weights file missing tensor " + p.name);
        const auto& t = tensors.at(p.name);
        const auto shape = t.at("shape");
        if (shape[0].get<int>() != p.mat->rows || shape[1].get<int>() != p.mat->cols) {
            throw Error("tensor " + p.name + " has shape [" + shape[0].dump() + "," +
                        shape[1].dump() + "], expected [" + std::to_string(p.mat->rows) + "," +
                        std::to_string(p.mat->cols) + "]");
        }
        const auto data = t.at("data").get<std::vector<double>>();
        if (data.size() != p.mat->d.size()) throw Error("tensor " + p.name + " has wrong length");
        p.mat->d = data;
    }
    return net;
}

}  // namespace roadnet
