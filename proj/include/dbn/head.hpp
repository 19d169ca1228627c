#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <utility>
#include <vector>

#include "dbn/config.hpp"
#include "dbn/errors.hpp"
#include "dbn/rbm.hpp"
#include "dbn/rng.hpp"

namespace dbn {

// Multinomial logistic layer mapping top-level features to class probabilities.
struct SoftmaxHead {
    Matrix w_out; // top_size x n_classes
    Vector b_out; // length n_classes

    int num_features() const { return static_cast<int>(w_out.rows()); }
    int num_classes() const { return static_cast<int>(w_out.cols()); }

    static SoftmaxHead zeros(int top_size, int n_classes) {
        if (top_size < 1 || n_classes < 1)
            throw std::invalid_argument("SoftmaxHead sizes must be >= 1");
        return {Matrix::Zero(top_size, n_classes), Vector::Zero(n_classes)};
    }
};

// Shift-stabilized softmax over logits.
inline Vector softmax(const Vector& logits) {
    Vector shifted = logits.array() - logits.maxCoeff();
    Vector e = shifted.array().exp();
    return e / e.sum();
}

inline Vector predict_proba(const Vector& features, const SoftmaxHead& head) {
    if (features.size() != head.num_features())
        throw std::invalid_argument("predict_proba: feature length does not match head");
    return softmax(head.w_out.transpose() * features + head.b_out);
}

// Rows are samples; returns n x n_classes probabilities.
inline Matrix predict_proba_batch(const Matrix& features, const SoftmaxHead& head) {
    if (features.cols() != head.num_features())
        throw std::invalid_argument("predict_proba: feature column count does not match head");
    Matrix logits = (features * head.w_out).rowwise() + head.b_out.transpose();
    Matrix out(logits.rows(), logits.cols());
    for (Eigen::Index r = 0; r < logits.rows(); ++r)
        out.row(r) = softmax(logits.row(r).transpose()).transpose();
    return out;
}

namespace detail {

inline void check_labels(const std::vector<int>& labels, Eigen::Index n_rows, int n_classes) {
    if (static_cast<Eigen::Index>(labels.size()) != n_rows)
        throw std::invalid_argument("label count does not match feature row count");
    for (int y : labels)
        if (y < 0 || y >= n_classes)
            throw std::invalid_argument("label out of range [0, n_classes)");
}

// Mean cross-entropy plus L2 penalty on the weights.
inline double head_objective(const Matrix& features, const std::vector<int>& labels,
                             const SoftmaxHead& head, double l2) {
    Matrix probs = predict_proba_batch(features, head);
    double ce = 0.0;
    for (Eigen::Index r = 0; r < probs.rows(); ++r)
        ce -= std::log(std::max(probs(r, labels[static_cast<std::size_t>(r)]), 1e-300));
    ce /= static_cast<double>(probs.rows());
    return ce + 0.5 * l2 * head.w_out.squaredNorm();
}

// Gradient of the objective above with respect to w_out and b_out.
inline std::pair<Matrix, Vector>
head_gradient(const Matrix& features, const std::vector<int>& labels,
              const SoftmaxHead& head, double l2) {
    Matrix probs = predict_proba_batch(features, head);
    for (Eigen::Index r = 0; r < probs.rows(); ++r)
        probs(r, labels[static_cast<std::size_t>(r)]) -= 1.0;
    double m = static_cast<double>(features.rows());
    Matrix d_w = features.transpose() * probs / m + l2 * head.w_out;
    Vector d_b = probs.colwise().sum().transpose() / m;
    return {std::move(d_w), std::move(d_b)};
}

} // namespace detail

// Mini-batch gradient descent on mean cross-entropy (+L2). If the full
// training objective increases after an epoch, that epoch's updates are
// reverted and the learning rate is halved, so the returned trace is
// non-increasing.
inline std::pair<SoftmaxHead, std::vector<double>>
train_head(const Matrix& features, const std::vector<int>& labels,
           SoftmaxHead head, const TrainConfig& config, Rng& rng) {
    config.validate();
    if (features.rows() == 0)
        throw std::invalid_argument("train_head: empty dataset");
    detail::check_labels(labels, features.rows(), head.num_classes());
    if (features.cols() != head.num_features())
        throw std::invalid_argument("train_head: feature dimension does not match head");

    const int n = static_cast<int>(features.rows());
    std::vector<int> order(n);
    for (int i = 0; i < n; ++i) order[i] = i;

    double lr = config.head_learning_rate;
    double prev_obj = detail::head_objective(features, labels, head, config.l2);
    std::vector<double> trace;
    trace.reserve(static_cast<std::size_t>(config.head_epochs));

    for (int epoch = 0; epoch < config.head_epochs; ++epoch) {
        SoftmaxHead snapshot = head;
        for (int i = n - 1; i > 0; --i) {
            int j = static_cast<int>(rng.next_u64() % static_cast<std::uint64_t>(i + 1));
            std::swap(order[i], order[j]);
        }
        for (int start = 0; start < n; start += config.batch_size) {
            int rows = std::min(config.batch_size, n - start);
            Matrix batch(rows, features.cols());
            std::vector<int> batch_labels(static_cast<std::size_t>(rows));
            for (int r = 0; r < rows; ++r) {
                batch.row(r) = features.row(order[start + r]);
                batch_labels[static_cast<std::size_t>(r)] = labels[static_cast<std::size_t>(order[start + r])];
            }
            auto [d_w, d_b] = detail::head_gradient(batch, batch_labels, head, config.l2);
            head.w_out -= lr * d_w;
            head.b_out -= lr * d_b;
        }
        double obj = detail::head_objective(features, labels, head, config.l2);
        if (obj > prev_obj) {
            head = std::move(snapshot);
            lr *= 0.5;
            obj = prev_obj;
        }
        if (!head.w_out.allFinite() || !head.b_out.allFinite())
            throw numeric_error("train_head: non-finite parameters at epoch " + std::to_string(epoch));
        trace.push_back(obj);
        prev_obj = obj;
    }
    return {std::move(head), std::move(trace)};
}

// train_head on z-scored features, with the standardization folded back into
// the returned head so it consumes raw features. Top-level stack activations
// can sit many orders of magnitude below unit scale, which stalls plain
// gradient descent; standardizing is a pure reparameterization, so folding it
// into w_out and b_out afterwards leaves the model unchanged:
//   w_zᵀ·(f - mean)/sd + b_z  ==  w_rawᵀ·f + b_raw
// with w_raw = w_z/sd (row-wise) and b_raw = b_z - w_rawᵀ·mean.
inline std::pair<SoftmaxHead, std::vector<double>>
train_head_standardized(const Matrix& features, const std::vector<int>& labels,
                        SoftmaxHead head, const TrainConfig& config, Rng& rng) {
    if (features.rows() == 0)
        throw std::invalid_argument("train_head: empty dataset");
    Vector mean = features.colwise().mean().transpose();
    Matrix centered = features.rowwise() - mean.transpose();
    Vector sd = centered.array().square().colwise().mean().sqrt().transpose();
    for (Eigen::Index i = 0; i < sd.size(); ++i)
        if (sd(i) < 1e-12) sd(i) = 1.0; // constant feature: leave it unscaled
    Matrix z = centered.array().rowwise() / sd.transpose().array();

    auto [trained, trace] = train_head(z, labels, std::move(head), config, rng);

    SoftmaxHead folded = trained;
    for (Eigen::Index i = 0; i < sd.size(); ++i) folded.w_out.row(i) /= sd(i);
    folded.b_out = trained.b_out - folded.w_out.transpose() * mean;
    return {std::move(folded), std::move(trace)};
}

} // namespace dbn
