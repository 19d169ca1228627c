#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "dbn/rbm.hpp"
#include "dbn/stack.hpp"

namespace dbn {

// Guards the 2^(g_v+g_h) enumeration cost.
struct EnumerationBudget {
    int max_total_units = 20;
};

namespace detail {

inline void check_budget(int total_units, const EnumerationBudget& budget, const char* op) {
    if (total_units > budget.max_total_units)
        throw std::invalid_argument(std::string(op) + ": machine has " + std::to_string(total_units) +
                                    " units, exceeding the enumeration budget of " +
                                    std::to_string(budget.max_total_units));
}

inline Vector bits_to_vector(std::uint64_t bits, int n) {
    Vector v(n);
    for (int i = 0; i < n; ++i)
        v(i) = static_cast<double>((bits >> i) & 1ULL);
    return v;
}

// Streaming log-sum-exp accumulator.
struct LogSumExp {
    double max = -std::numeric_limits<double>::infinity();
    double sum = 0.0;

    void add(double log_term) {
        if (log_term <= max) {
            sum += std::exp(log_term - max);
        } else {
            sum = sum * std::exp(max - log_term) + 1.0;
            max = log_term;
        }
    }
    double value() const { return max + std::log(sum); }
};

} // namespace detail

// log Z = log sum_{v,h} exp(-E(v,h)), by full state enumeration in log space.
inline double log_partition_exact(const RbmParams& p, const EnumerationBudget& budget = {}) {
    const int g_v = p.num_visible();
    const int g_h = p.num_hidden();
    detail::check_budget(g_v + g_h, budget, "log_partition_exact");
    detail::LogSumExp acc;
    for (std::uint64_t vb = 0; vb < (1ULL << g_v); ++vb) {
        Vector v = detail::bits_to_vector(vb, g_v);
        for (std::uint64_t hb = 0; hb < (1ULL << g_h); ++hb) {
            Vector h = detail::bits_to_vector(hb, g_h);
            acc.add(-energy_restricted({v, h}, p));
        }
    }
    return acc.value();
}

inline double partition_function_exact(const RbmParams& p, const EnumerationBudget& budget = {}) {
    return std::exp(log_partition_exact(p, budget));
}

// P(v,h) = exp(-E(v,h)) / Z.
inline double joint_prob_exact(const BinaryState& state, const RbmParams& p,
                               const EnumerationBudget& budget = {}) {
    double log_z = log_partition_exact(p, budget);
    return std::exp(-energy_restricted(state, p) - log_z);
}

// P(v) = (1/Z) sum_h exp(-E(v,h)).
inline double marginal_prob_exact(const Vector& v, const RbmParams& p,
                                  const EnumerationBudget& budget = {}) {
    check_visible_dim(v, p);
    const int g_h = p.num_hidden();
    detail::check_budget(p.num_visible() + g_h, budget, "marginal_prob_exact");
    double log_z = log_partition_exact(p, budget);
    detail::LogSumExp acc;
    for (std::uint64_t hb = 0; hb < (1ULL << g_h); ++hb) {
        Vector h = detail::bits_to_vector(hb, g_h);
        acc.add(-energy_restricted({v, h}, p));
    }
    return std::exp(acc.value() - log_z);
}

// Mean log-likelihood (1/m) sum_l log P(x_l).
inline double exact_loglik(const Matrix& dataset, const RbmParams& p,
                           const EnumerationBudget& budget = {}) {
    if (dataset.rows() == 0)
        throw std::invalid_argument("exact_loglik: empty dataset");
    double total = 0.0;
    for (Eigen::Index r = 0; r < dataset.rows(); ++r)
        total += std::log(marginal_prob_exact(dataset.row(r).transpose(), p, budget));
    return total / static_cast<double>(dataset.rows());
}

// Exact gradient of the mean log-likelihood: data statistics minus full model
// expectations computed by enumeration.
inline GradientEstimate exact_loglik_gradient(const Matrix& dataset, const RbmParams& p,
                                              const EnumerationBudget& budget = {}) {
    if (dataset.rows() == 0)
        throw std::invalid_argument("exact_loglik_gradient: empty dataset");
    if (dataset.cols() != p.num_visible())
        throw std::invalid_argument("exact_loglik_gradient: dataset width does not match g_v");
    const int g_v = p.num_visible();
    const int g_h = p.num_hidden();
    detail::check_budget(g_v + g_h, budget, "exact_loglik_gradient");

    const double m = static_cast<double>(dataset.rows());
    GradientEstimate g;
    g.d_w = Matrix::Zero(g_v, g_h);
    g.d_a = Vector::Zero(g_v);
    g.d_b = Vector::Zero(g_h);

    for (Eigen::Index r = 0; r < dataset.rows(); ++r) {
        Vector v = dataset.row(r).transpose();
        Vector hp = hidden_conditional(v, p);
        g.d_w += v * hp.transpose();
        g.d_a += v;
        g.d_b += hp;
    }
    g.d_w /= m;
    g.d_a /= m;
    g.d_b /= m;

    double log_z = log_partition_exact(p, budget);
    for (std::uint64_t vb = 0; vb < (1ULL << g_v); ++vb) {
        Vector v = detail::bits_to_vector(vb, g_v);
        for (std::uint64_t hb = 0; hb < (1ULL << g_h); ++hb) {
            Vector h = detail::bits_to_vector(hb, g_h);
            double prob = std::exp(-energy_restricted({v, h}, p) - log_z);
            g.d_w -= prob * (v * h.transpose());
            g.d_a -= prob * v;
            g.d_b -= prob * h;
        }
    }
    return g;
}

// Exact visible marginal of a two-layer belief net: the top RBM defines the
// prior over h1, the bottom weights define P(v | h1) as factorized Bernoullis.
inline double dbn_marginal_exact(const DbnStack& stack, const Vector& v,
                                 const EnumerationBudget& budget = {}) {
    if (stack.layers.size() != 2)
        throw std::invalid_argument("dbn_marginal_exact: only two-layer stacks are supported");
    stack.check_chain();
    const RbmParams& bottom = stack.layers[0];
    const RbmParams& top = stack.layers[1];
    check_visible_dim(v, bottom);
    const int g_v = bottom.num_visible();
    const int g_h1 = bottom.num_hidden();
    const int g_h2 = top.num_hidden();
    detail::check_budget(g_v + g_h1 + g_h2, budget, "dbn_marginal_exact");

    double log_z_top = log_partition_exact(top, budget);
    detail::LogSumExp acc;
    for (std::uint64_t h1b = 0; h1b < (1ULL << g_h1); ++h1b) {
        Vector h1 = detail::bits_to_vector(h1b, g_h1);

        // log P_top(h1) by summing the top machine's hidden states.
        detail::LogSumExp top_acc;
        for (std::uint64_t h2b = 0; h2b < (1ULL << g_h2); ++h2b) {
            Vector h2 = detail::bits_to_vector(h2b, g_h2);
            top_acc.add(-energy_restricted({h1, h2}, top));
        }
        double log_prior = top_acc.value() - log_z_top;

        // log P(v | h1) under the bottom layer's factorized conditional.
        Vector vp = visible_conditional(h1, bottom);
        double log_cond = 0.0;
        for (int i = 0; i < g_v; ++i)
            log_cond += std::log(v(i) > 0.5 ? vp(i) : 1.0 - vp(i));

        acc.add(log_prior + log_cond);
    }
    return std::exp(acc.value());
}

} // namespace dbn
