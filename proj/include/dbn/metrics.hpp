#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "dbn/errors.hpp"
#include "dbn/rbm.hpp"

namespace dbn {

struct RocPoint {
    double fpr;
    double tpr;
};

struct EvalReport {
    double accuracy = 0.0;
    double error_rate = 0.0;
    Eigen::MatrixXi confusion;                  // rows = true class, cols = predicted
    std::vector<std::vector<RocPoint>> roc;     // one curve per class
    std::vector<double> auc;                    // one value per class
    std::vector<std::string> class_names;
};

namespace detail {

// One-vs-rest ROC for a single class: sweep distinct score thresholds from
// high to low; ties share a threshold, which gives trapezoidal AUC the
// standard half-credit for tied pairs. Degenerate classes (no positives or no
// negatives) get the chance diagonal and AUC 0.5.
inline std::pair<std::vector<RocPoint>, double>
roc_one_vs_rest(const std::vector<double>& scores, const std::vector<bool>& positive) {
    const std::size_t n = scores.size();
    std::size_t n_pos = 0;
    for (bool p : positive) n_pos += p ? 1 : 0;
    std::size_t n_neg = n - n_pos;

    if (n_pos == 0 || n_neg == 0)
        return {{{0.0, 0.0}, {1.0, 1.0}}, 0.5};

    std::vector<std::size_t> idx(n);
    for (std::size_t i = 0; i < n; ++i) idx[i] = i;
    std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });

    std::vector<RocPoint> curve;
    curve.push_back({0.0, 0.0});
    std::size_t tp = 0, fp = 0;
    for (std::size_t i = 0; i < n;) {
        double thresh = scores[idx[i]];
        while (i < n && scores[idx[i]] == thresh) {
            if (positive[idx[i]]) ++tp; else ++fp;
            ++i;
        }
        curve.push_back({static_cast<double>(fp) / static_cast<double>(n_neg),
                         static_cast<double>(tp) / static_cast<double>(n_pos)});
    }
    if (curve.back().fpr != 1.0 || curve.back().tpr != 1.0)
        curve.push_back({1.0, 1.0});

    double auc = 0.0;
    for (std::size_t i = 1; i < curve.size(); ++i)
        auc += 0.5 * (curve[i].tpr + curve[i - 1].tpr) * (curve[i].fpr - curve[i - 1].fpr);
    return {std::move(curve), auc};
}

} // namespace detail

// Scores argmax decisions (ties to the lowest class index) and builds the
// confusion matrix, per-class one-vs-rest ROC curves, and trapezoidal AUC.
inline EvalReport score(const Matrix& predictions, const std::vector<int>& labels,
                        const std::vector<std::string>& class_names) {
    const Eigen::Index n = predictions.rows();
    const int n_classes = static_cast<int>(predictions.cols());
    if (n == 0)
        throw std::invalid_argument("score: no samples");
    if (static_cast<Eigen::Index>(labels.size()) != n)
        throw std::invalid_argument("score: label count does not match prediction rows");
    if (static_cast<int>(class_names.size()) != n_classes)
        throw std::invalid_argument("score: class name count does not match prediction columns");
    for (Eigen::Index r = 0; r < n; ++r) {
        if (std::abs(predictions.row(r).sum() - 1.0) > 1e-6)
            throw std::invalid_argument("score: prediction row " + std::to_string(r) + " is not normalized");
        if (labels[static_cast<std::size_t>(r)] < 0 || labels[static_cast<std::size_t>(r)] >= n_classes)
            throw std::invalid_argument("score: label out of range at row " + std::to_string(r));
    }

    EvalReport report;
    report.class_names = class_names;
    report.confusion = Eigen::MatrixXi::Zero(n_classes, n_classes);

    Eigen::Index correct = 0;
    for (Eigen::Index r = 0; r < n; ++r) {
        int best = 0;
        for (int c = 1; c < n_classes; ++c)
            if (predictions(r, c) > predictions(r, best)) best = c;
        int truth = labels[static_cast<std::size_t>(r)];
        report.confusion(truth, best) += 1;
        if (best == truth) ++correct;
    }
    report.accuracy = static_cast<double>(correct) / static_cast<double>(n);
    report.error_rate = 1.0 - report.accuracy;

    report.roc.resize(static_cast<std::size_t>(n_classes));
    report.auc.resize(static_cast<std::size_t>(n_classes));
    for (int c = 0; c < n_classes; ++c) {
        std::vector<double> scores(static_cast<std::size_t>(n));
        std::vector<bool> positive(static_cast<std::size_t>(n));
        for (Eigen::Index r = 0; r < n; ++r) {
            scores[static_cast<std::size_t>(r)] = predictions(r, c);
            positive[static_cast<std::size_t>(r)] = labels[static_cast<std::size_t>(r)] == c;
        }
        auto [curve, auc] = detail::roc_one_vs_rest(scores, positive);
        report.roc[static_cast<std::size_t>(c)] = std::move(curve);
        report.auc[static_cast<std::size_t>(c)] = auc;
    }
    return report;
}

// Writes metrics.csv, confusion.csv, and roc_class_<k>.csv into out_dir.
inline void render_report(const EvalReport& report, const std::string& out_dir) {
    namespace fs = std::filesystem;
    std::error_code ec;
    fs::create_directories(out_dir, ec);
    if (ec) throw io_error("cannot create output directory: " + out_dir);

    auto open = [](const fs::path& p) {
        std::ofstream f(p);
        if (!f) throw io_error("cannot write file: " + p.string());
        return f;
    };

    {
        auto f = open(fs::path(out_dir) / "metrics.csv");
        f << "metric,value,percent\n";
        f << std::setprecision(17);
        auto pct = [](double x) {
            std::ostringstream s;
            s << std::fixed << std::setprecision(2) << (100.0 * x) << "%";
            return s.str();
        };
        f << "accuracy," << report.accuracy << "," << pct(report.accuracy) << "\n";
        f << "error_rate," << report.error_rate << "," << pct(report.error_rate) << "\n";
        for (std::size_t c = 0; c < report.auc.size(); ++c)
            f << "auc_" << report.class_names[c] << "," << report.auc[c] << ","
              << pct(report.auc[c]) << "\n";
    }
    {
        auto f = open(fs::path(out_dir) / "confusion.csv");
        for (std::size_t c = 0; c < report.class_names.size(); ++c)
            f << (c ? "," : "") << report.class_names[c];
        f << "\n";
        for (Eigen::Index r = 0; r < report.confusion.rows(); ++r) {
            for (Eigen::Index c = 0; c < report.confusion.cols(); ++c)
                f << (c ? "," : "") << report.confusion(r, c);
            f << "\n";
        }
    }
    for (std::size_t c = 0; c < report.roc.size(); ++c) {
        auto f = open(fs::path(out_dir) / ("roc_class_" + std::to_string(c) + ".csv"));
        f << "fpr,tpr\n" << std::setprecision(17);
        for (const auto& pt : report.roc[c])
            f << pt.fpr << "," << pt.tpr << "\n";
    }
}

} // namespace dbn
