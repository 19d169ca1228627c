#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "dbn/config.hpp"
#include "dbn/errors.hpp"
#include "dbn/rng.hpp"

namespace dbn {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// Overflow guard for exp(); sigma(+-500) is already 1 or 0 to machine precision.
inline double sigmoid(double x) {
    if (x > 500.0) x = 500.0;
    if (x < -500.0) x = -500.0;
    return 1.0 / (1.0 + std::exp(-x));
}

// One restricted Boltzmann machine: weights w (visible x hidden), visible bias
// a, hidden bias b. All entries are kept finite; training aborts otherwise.
struct RbmParams {
    Matrix w; // g_v x g_h
    Vector a; // visible bias, length g_v
    Vector b; // hidden bias, length g_h

    int num_visible() const { return static_cast<int>(w.rows()); }
    int num_hidden() const { return static_cast<int>(w.cols()); }

    static RbmParams zeros(int g_v, int g_h) {
        check_sizes(g_v, g_h);
        return {Matrix::Zero(g_v, g_h), Vector::Zero(g_v), Vector::Zero(g_h)};
    }

    // Small symmetric start: N(0, sigma^2) weights, zero biases.
    static RbmParams gaussian_init(int g_v, int g_h, Rng& rng, double sigma = 0.01) {
        check_sizes(g_v, g_h);
        RbmParams p = zeros(g_v, g_h);
        for (int i = 0; i < g_v; ++i)
            for (int j = 0; j < g_h; ++j)
                p.w(i, j) = sigma * rng.gaussian();
        return p;
    }

    bool finite() const {
        return w.allFinite() && a.allFinite() && b.allFinite();
    }

private:
    static void check_sizes(int g_v, int g_h) {
        if (g_v < 1 || g_h < 1)
            throw std::invalid_argument("RBM unit counts must be >= 1");
    }
};

struct BinaryState {
    Vector v; // entries in {0,1}
    Vector h;
};

struct GradientEstimate {
    Matrix d_w;
    Vector d_a;
    Vector d_b;
};

inline void check_visible_dim(const Vector& v, const RbmParams& p) {
    if (v.size() != p.num_visible())
        throw std::invalid_argument("visible vector length " + std::to_string(v.size()) +
                                    " does not match g_v=" + std::to_string(p.num_visible()));
}

inline void check_hidden_dim(const Vector& h, const RbmParams& p) {
    if (h.size() != p.num_hidden())
        throw std::invalid_argument("hidden vector length " + std::to_string(h.size()) +
                                    " does not match g_h=" + std::to_string(p.num_hidden()));
}

// E(v,h) = -v'Wh - a'v - b'h.
inline double energy_restricted(const BinaryState& s, const RbmParams& p) {
    check_visible_dim(s.v, p);
    check_hidden_dim(s.h, p);
    return -s.v.dot(p.w * s.h) - p.a.dot(s.v) - p.b.dot(s.h);
}

// General Boltzmann machine energy with within-layer couplings and no bias:
// E(v,h) = -1/2 v'Lv - 1/2 h'Jh - v'Wh.
inline double energy_general(const BinaryState& s, const RbmParams& p,
                             const Matrix& l_couplings, const Matrix& j_couplings) {
    check_visible_dim(s.v, p);
    check_hidden_dim(s.h, p);
    auto check_coupling = [](const Matrix& c, int n, const char* name) {
        if (c.rows() != n || c.cols() != n)
            throw std::invalid_argument(std::string(name) + " coupling matrix has wrong shape");
        for (int i = 0; i < n; ++i) {
            if (c(i, i) != 0.0)
                throw std::invalid_argument(std::string(name) + " coupling diagonal must be zero");
            for (int j = i + 1; j < n; ++j)
                if (c(i, j) != c(j, i))
                    throw std::invalid_argument(std::string(name) + " coupling matrix must be symmetric");
        }
    };
    check_coupling(l_couplings, p.num_visible(), "visible");
    check_coupling(j_couplings, p.num_hidden(), "hidden");
    return -0.5 * s.v.dot(l_couplings * s.v) - 0.5 * s.h.dot(j_couplings * s.h) - s.v.dot(p.w * s.h);
}

// P(h_j = 1 | v) = sigma(b_j + sum_i W_ij v_i), elementwise.
inline Vector hidden_conditional(const Vector& v, const RbmParams& p) {
    check_visible_dim(v, p);
    Vector act = p.b + p.w.transpose() * v;
    return act.unaryExpr([](double x) { return sigmoid(x); });
}

// P(v_i = 1 | h) = sigma(a_i + sum_j W_ij h_j), elementwise.
inline Vector visible_conditional(const Vector& h, const RbmParams& p) {
    check_hidden_dim(h, p);
    Vector act = p.a + p.w * h;
    return act.unaryExpr([](double x) { return sigmoid(x); });
}

// Batched versions; rows are samples.
inline Matrix hidden_conditional_batch(const Matrix& v_rows, const RbmParams& p) {
    if (v_rows.cols() != p.num_visible())
        throw std::invalid_argument("batch column count does not match g_v");
    Matrix act = (v_rows * p.w).rowwise() + p.b.transpose();
    return act.unaryExpr([](double x) { return sigmoid(x); });
}

inline Matrix visible_conditional_batch(const Matrix& h_rows, const RbmParams& p) {
    if (h_rows.cols() != p.num_hidden())
        throw std::invalid_argument("batch column count does not match g_h");
    Matrix act = (h_rows * p.w.transpose()).rowwise() + p.a.transpose();
    return act.unaryExpr([](double x) { return sigmoid(x); });
}

// Row-major elementwise Bernoulli draws; iteration order is fixed so seeded
// runs are bit-reproducible.
inline Matrix bernoulli_sample(const Matrix& probs, Rng& rng) {
    Matrix out(probs.rows(), probs.cols());
    for (Eigen::Index i = 0; i < probs.rows(); ++i)
        for (Eigen::Index j = 0; j < probs.cols(); ++j)
            out(i, j) = rng.bernoulli(probs(i, j)) ? 1.0 : 0.0;
    return out;
}

inline Vector bernoulli_sample(const Vector& probs, Rng& rng) {
    Vector out(probs.size());
    for (Eigen::Index i = 0; i < probs.size(); ++i)
        out(i) = rng.bernoulli(probs(i)) ? 1.0 : 0.0;
    return out;
}

struct GibbsStepResult {
    Vector h_sample;
    Vector v_reconstruction;
    Vector h_probs_at_reconstruction;
};

// One block Gibbs sweep v -> h -> v' plus the hidden probabilities at v'.
inline GibbsStepResult gibbs_step(const Vector& v, const RbmParams& p, Rng& rng) {
    Vector h = bernoulli_sample(hidden_conditional(v, p), rng);
    Vector v_rec = bernoulli_sample(visible_conditional(h, p), rng);
    Vector h_probs = hidden_conditional(v_rec, p);
    return {std::move(h), std::move(v_rec), std::move(h_probs)};
}

// CD-k estimate of the log-likelihood gradient. Positive statistics use hidden
// probabilities at the data. The negative chain samples hidden states but keeps
// visible units at their conditional probabilities (mean-field reconstruction),
// with probabilities again at the final hidden step. Keeping the visible side
// mean-field matters for real-valued inputs in [0,1]: a sampled binary
// reconstruction has per-unit variance up to 0.25, and when the data's variance
// is below that the negative phase systematically out-weighs the positive one
// and drives every coupling to zero.
inline GradientEstimate cd_gradient(const Matrix& batch, const RbmParams& p, int k, Rng& rng) {
    if (batch.rows() == 0)
        throw std::invalid_argument("cd_gradient: empty batch");
    if (batch.cols() != p.num_visible())
        throw std::invalid_argument("cd_gradient: batch column count does not match g_v");
    if (k < 1)
        throw std::invalid_argument("cd_gradient: k must be >= 1");

    const double m = static_cast<double>(batch.rows());
    Matrix pos_h_probs = hidden_conditional_batch(batch, p);
    Matrix h = bernoulli_sample(pos_h_probs, rng);
    Matrix v_neg;
    Matrix neg_h_probs;
    for (int step = 0; step < k; ++step) {
        v_neg = visible_conditional_batch(h, p);
        neg_h_probs = hidden_conditional_batch(v_neg, p);
        if (step + 1 < k)
            h = bernoulli_sample(neg_h_probs, rng);
    }

    GradientEstimate g;
    g.d_w = (batch.transpose() * pos_h_probs - v_neg.transpose() * neg_h_probs) / m;
    g.d_a = (batch.colwise().sum() - v_neg.colwise().sum()).transpose() / m;
    g.d_b = (pos_h_probs.colwise().sum() - neg_h_probs.colwise().sum()).transpose() / m;
    return g;
}

// CD-k ascent with momentum over shuffled mini-batches. Returns the trained
// parameters and the per-epoch mean reconstruction error.
inline std::pair<RbmParams, std::vector<double>>
train_rbm(const Matrix& data, RbmParams params, const TrainConfig& config, Rng& rng) {
    config.validate();
    if (data.rows() == 0)
        throw std::invalid_argument("train_rbm: empty dataset");
    if (data.cols() != params.num_visible())
        throw std::invalid_argument("train_rbm: data column count does not match g_v");
    if (!data.allFinite())
        throw std::invalid_argument("train_rbm: data contains non-finite values");

    const int n = static_cast<int>(data.rows());
    Matrix vel_w = Matrix::Zero(params.num_visible(), params.num_hidden());
    Vector vel_a = Vector::Zero(params.num_visible());
    Vector vel_b = Vector::Zero(params.num_hidden());

    std::vector<int> order(n);
    for (int i = 0; i < n; ++i) order[i] = i;

    std::vector<double> recon_trace;
    recon_trace.reserve(static_cast<std::size_t>(config.epochs));

    for (int epoch = 0; epoch < config.epochs; ++epoch) {
        // Fisher-Yates on the sample order, driven by the training stream.
        for (int i = n - 1; i > 0; --i) {
            int j = static_cast<int>(rng.next_u64() % static_cast<std::uint64_t>(i + 1));
            std::swap(order[i], order[j]);
        }

        double recon_sum = 0.0;
        int batch_index = 0;
        for (int start = 0; start < n; start += config.batch_size, ++batch_index) {
            int rows = std::min(config.batch_size, n - start);
            Matrix batch(rows, data.cols());
            for (int r = 0; r < rows; ++r)
                batch.row(r) = data.row(order[start + r]);

            GradientEstimate g = cd_gradient(batch, params, config.cd_k, rng);
            vel_w = config.momentum * vel_w + config.learning_rate * g.d_w;
            vel_a = config.momentum * vel_a + config.learning_rate * g.d_a;
            vel_b = config.momentum * vel_b + config.learning_rate * g.d_b;
            params.w += vel_w;
            params.a += vel_a;
            params.b += vel_b;

            if (!params.finite())
                throw numeric_error("train_rbm: non-finite parameter at epoch " +
                                    std::to_string(epoch) + ", batch " + std::to_string(batch_index));

            // Mean-field reconstruction error for the trace.
            Matrix h_probs = hidden_conditional_batch(batch, params);
            Matrix v_probs = visible_conditional_batch(h_probs, params);
            recon_sum += (batch - v_probs).squaredNorm();
        }
        recon_trace.push_back(recon_sum / static_cast<double>(n));
    }
    return {std::move(params), std::move(recon_trace)};
}

} // namespace dbn
