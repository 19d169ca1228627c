#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

#include "dbn/config.hpp"
#include "dbn/errors.hpp"
#include "dbn/head.hpp"
#include "dbn/rbm.hpp"
#include "dbn/rng.hpp"

namespace dbn {

// Stack of greedily trained RBMs plus an optional supervised head.
struct DbnStack {
    std::vector<RbmParams> layers;
    std::optional<SoftmaxHead> head;

    std::vector<int> layer_sizes() const {
        std::vector<int> sizes;
        if (layers.empty()) return sizes;
        sizes.push_back(layers.front().num_visible());
        for (const auto& l : layers) sizes.push_back(l.num_hidden());
        return sizes;
    }

    int input_size() const { return layers.empty() ? 0 : layers.front().num_visible(); }
    int top_size() const { return layers.empty() ? 0 : layers.back().num_hidden(); }

    void check_chain() const {
        for (std::size_t k = 1; k < layers.size(); ++k)
            if (layers[k].num_visible() != layers[k - 1].num_hidden())
                throw std::invalid_argument("DbnStack: layer sizes do not chain");
    }
};

struct PropagationMode {
    enum class Kind { MeanField, Sampled };
    Kind kind = Kind::MeanField;
    std::uint64_t seed = 0;

    static PropagationMode mean_field() { return {Kind::MeanField, 0}; }
    static PropagationMode sampled(std::uint64_t seed) { return {Kind::Sampled, seed}; }
};

// Flip a machine upside down: W' = W^T, biases swapped. Stacking this on top
// of the original leaves the modeled visible distribution unchanged.
inline RbmParams transpose_init(const RbmParams& lower) {
    return {lower.w.transpose(), lower.b, lower.a};
}

inline Vector propagate_up(const Vector& v, const DbnStack& stack, PropagationMode mode) {
    if (stack.layers.empty())
        throw std::invalid_argument("propagate_up: empty stack");
    if (v.size() != stack.input_size())
        throw std::invalid_argument("propagate_up: input length does not match stack");
    Rng rng(mode.seed);
    Vector cur = v;
    for (const auto& layer : stack.layers) {
        cur = hidden_conditional(cur, layer);
        if (mode.kind == PropagationMode::Kind::Sampled)
            cur = bernoulli_sample(cur, rng);
    }
    return cur;
}

inline Matrix propagate_up_batch(const Matrix& v_rows, const DbnStack& stack, PropagationMode mode) {
    if (stack.layers.empty())
        throw std::invalid_argument("propagate_up: empty stack");
    if (v_rows.cols() != stack.input_size())
        throw std::invalid_argument("propagate_up: input width does not match stack");
    Rng rng(mode.seed);
    Matrix cur = v_rows;
    for (const auto& layer : stack.layers) {
        cur = hidden_conditional_batch(cur, layer);
        if (mode.kind == PropagationMode::Kind::Sampled)
            cur = bernoulli_sample(cur, rng);
    }
    return cur;
}

// Initializer for layer k of a stack being built: transpose of the layer below
// when the shapes line up, small Gaussian otherwise.
inline RbmParams init_stack_layer(const std::vector<RbmParams>& below,
                                  int g_v, int g_h, Rng& layer_rng) {
    if (!below.empty()) {
        const RbmParams& lower = below.back();
        if (lower.num_hidden() == g_v && lower.num_visible() == g_h)
            return transpose_init(lower);
    }
    return RbmParams::gaussian_init(g_v, g_h, layer_rng);
}

// Greedy layer-wise pretraining: train layer 1 on the data, freeze it, train
// each next layer on the propagated representation of the one below.
inline DbnStack greedy_pretrain(const Matrix& data, const std::vector<int>& layer_sizes,
                                const TrainConfig& config, Rng& rng,
                                PropagationMode propagation = PropagationMode::mean_field()) {
    config.validate();
    if (layer_sizes.size() < 2)
        throw std::invalid_argument("greedy_pretrain: need at least one hidden layer");
    for (int s : layer_sizes)
        if (s < 1) throw std::invalid_argument("greedy_pretrain: layer sizes must be >= 1");
    if (data.cols() != layer_sizes.front())
        throw std::invalid_argument("greedy_pretrain: data width does not match layer_sizes[0]");
    if (!data.allFinite())
        throw std::invalid_argument("greedy_pretrain: data contains non-finite values");

    DbnStack stack;
    Matrix layer_input = data;
    for (std::size_t k = 0; k + 1 < layer_sizes.size(); ++k) {
        Rng layer_rng = rng.fork(k);
        RbmParams params = init_stack_layer(stack.layers, layer_sizes[k], layer_sizes[k + 1], layer_rng);
        auto [trained, trace] = train_rbm(layer_input, std::move(params), config, layer_rng);
        stack.layers.push_back(std::move(trained));

        if (k + 2 < layer_sizes.size()) {
            layer_input = hidden_conditional_batch(layer_input, stack.layers.back());
            if (propagation.kind == PropagationMode::Kind::Sampled) {
                Rng sample_rng(detail::splitmix64(propagation.seed) ^ detail::splitmix64(k));
                layer_input = bernoulli_sample(layer_input, sample_rng);
            }
        }
    }
    stack.check_chain();
    return stack;
}

// Gradients of mean cross-entropy (+L2 on head weights) with respect to every
// stack parameter, treating each RBM layer as a deterministic sigmoid layer.
struct StackGradient {
    std::vector<Matrix> d_w;
    std::vector<Vector> d_b;
    Matrix d_w_out;
    Vector d_b_out;
};

inline StackGradient stack_gradient(const DbnStack& stack, const Matrix& batch,
                                    const std::vector<int>& labels, double l2) {
    const int n_layers = static_cast<int>(stack.layers.size());
    const int rows = static_cast<int>(batch.rows());

    std::vector<Matrix> acts;
    acts.reserve(static_cast<std::size_t>(n_layers) + 1);
    acts.push_back(batch);
    for (const auto& layer : stack.layers)
        acts.push_back(hidden_conditional_batch(acts.back(), layer));

    Matrix probs = predict_proba_batch(acts.back(), *stack.head);
    for (int r = 0; r < rows; ++r)
        probs(r, labels[static_cast<std::size_t>(r)]) -= 1.0;
    double m = static_cast<double>(rows);

    StackGradient g;
    g.d_w.resize(static_cast<std::size_t>(n_layers));
    g.d_b.resize(static_cast<std::size_t>(n_layers));
    g.d_w_out = acts.back().transpose() * probs / m + l2 * stack.head->w_out;
    g.d_b_out = probs.colwise().sum().transpose() / m;

    Matrix delta = probs * stack.head->w_out.transpose();
    for (int k = n_layers - 1; k >= 0; --k) {
        const Matrix& out = acts[static_cast<std::size_t>(k) + 1];
        Matrix pre = delta.cwiseProduct(out.cwiseProduct(Matrix::Ones(out.rows(), out.cols()) - out));
        g.d_w[static_cast<std::size_t>(k)] = acts[static_cast<std::size_t>(k)].transpose() * pre / m;
        g.d_b[static_cast<std::size_t>(k)] = pre.colwise().sum().transpose() / m;
        if (k > 0)
            delta = pre * stack.layers[static_cast<std::size_t>(k)].w.transpose();
    }
    return g;
}

// End-to-end training objective used by fine_tune.
inline double stack_objective(const DbnStack& stack, const Matrix& data,
                              const std::vector<int>& labels, double l2) {
    Matrix feats = propagate_up_batch(data, stack, PropagationMode::mean_field());
    return detail::head_objective(feats, labels, *stack.head, l2);
}

// Backpropagation of cross-entropy through the mean-field stack and the head.
// Epoch updates that raise the training objective are reverted with the
// learning rate halved.
inline DbnStack fine_tune(DbnStack stack, const Matrix& data, const std::vector<int>& labels,
                          const TrainConfig& config, Rng& rng) {
    config.validate();
    if (!stack.head)
        throw std::invalid_argument("fine_tune: stack has no trained head");
    if (data.rows() == 0)
        throw std::invalid_argument("fine_tune: empty dataset");
    detail::check_labels(labels, data.rows(), stack.head->num_classes());

    const int n = static_cast<int>(data.rows());
    std::vector<int> order(n);
    for (int i = 0; i < n; ++i) order[i] = i;

    double lr = config.learning_rate;
    double prev_obj = stack_objective(stack, data, labels, config.l2);

    for (int epoch = 0; epoch < config.fine_tune_epochs; ++epoch) {
        DbnStack snapshot = stack;
        for (int i = n - 1; i > 0; --i) {
            int j = static_cast<int>(rng.next_u64() % static_cast<std::uint64_t>(i + 1));
            std::swap(order[i], order[j]);
        }
        for (int start = 0; start < n; start += config.batch_size) {
            int rows = std::min(config.batch_size, n - start);
            Matrix batch(rows, data.cols());
            std::vector<int> batch_labels(static_cast<std::size_t>(rows));
            for (int r = 0; r < rows; ++r) {
                batch.row(r) = data.row(order[start + r]);
                batch_labels[static_cast<std::size_t>(r)] = labels[static_cast<std::size_t>(order[start + r])];
            }

            StackGradient g = stack_gradient(stack, batch, batch_labels, config.l2);
            for (std::size_t k = 0; k < stack.layers.size(); ++k) {
                stack.layers[k].w -= lr * g.d_w[k];
                stack.layers[k].b -= lr * g.d_b[k];
            }
            stack.head->w_out -= lr * g.d_w_out;
            stack.head->b_out -= lr * g.d_b_out;
        }
        double obj = stack_objective(stack, data, labels, config.l2);
        if (obj > prev_obj) {
            stack = std::move(snapshot);
            lr *= 0.5;
            obj = prev_obj;
        }
        prev_obj = obj;
    }
    return stack;
}

} // namespace dbn
