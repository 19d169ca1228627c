#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cctype>
#include <fstream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "dbn/errors.hpp"
#include "dbn/rbm.hpp"
#include "dbn/rng.hpp"

namespace dbn {

enum class SplitTag { Train, Test };

inline const std::vector<std::string>& default_class_names() {
    static const std::vector<std::string> names = {
        "WALKING",       "WALKING_UPSTAIRS", "WALKING_DOWNSTAIRS", "SITTING",
        "STANDING",      "LAYING",           "STAND_TO_SIT",       "SIT_TO_STAND",
        "SIT_TO_LIE",    "LIE_TO_SIT",       "STAND_TO_LIE",       "LIE_TO_STAND"};
    return names;
}

struct LabeledDataset {
    Matrix features;          // n x d
    std::vector<int> labels;  // 0-based, length n
    std::vector<std::string> class_names = default_class_names();
    SplitTag split_tag = SplitTag::Train;

    int num_samples() const { return static_cast<int>(features.rows()); }
    int num_features() const { return static_cast<int>(features.cols()); }
    int num_classes() const { return static_cast<int>(class_names.size()); }
};

struct DatasetSchema {
    int expected_columns = 12;
    int label_base = 1;       // labels on disk are 1-based per the activity table
    int num_classes = 12;
};

// Per-feature min/max recorded on the training split only.
struct Normalizer {
    Vector min;
    Vector max;
};

namespace detail {

inline std::vector<double> parse_numeric_line(const std::string& line, int line_no,
                                              const std::string& path) {
    std::string cleaned = line;
    std::replace(cleaned.begin(), cleaned.end(), ',', ' ');
    std::istringstream ss(cleaned);
    std::vector<double> values;
    std::string tok;
    while (ss >> tok) {
        std::size_t consumed = 0;
        double v;
        try {
            v = std::stod(tok, &consumed);
        } catch (const std::exception&) {
            throw parse_error(path + ":" + std::to_string(line_no) + ": non-numeric token '" + tok + "'");
        }
        if (consumed != tok.size())
            throw parse_error(path + ":" + std::to_string(line_no) + ": non-numeric token '" + tok + "'");
        values.push_back(v);
    }
    return values;
}

inline bool blank(const std::string& s) {
    return std::all_of(s.begin(), s.end(), [](unsigned char c) { return std::isspace(c); });
}

} // namespace detail

// Parses a feature file (one sample per line, whitespace or comma delimited)
// and a label file (one integer per line). Labels are converted to 0-based.
inline LabeledDataset load_dataset(const std::string& features_path, const std::string& labels_path,
                                   const DatasetSchema& schema = {}, SplitTag tag = SplitTag::Train) {
    std::ifstream ff(features_path);
    if (!ff) throw io_error("cannot open feature file: " + features_path);
    std::ifstream lf(labels_path);
    if (!lf) throw io_error("cannot open label file: " + labels_path);

    std::vector<std::vector<double>> rows;
    std::string line;
    int line_no = 0;
    while (std::getline(ff, line)) {
        ++line_no;
        if (detail::blank(line)) continue;
        auto values = detail::parse_numeric_line(line, line_no, features_path);
        if (static_cast<int>(values.size()) != schema.expected_columns)
            throw parse_error(features_path + ":" + std::to_string(line_no) + ": expected " +
                              std::to_string(schema.expected_columns) + " columns, got " +
                              std::to_string(values.size()));
        for (double v : values)
            if (!std::isfinite(v))
                throw parse_error(features_path + ":" + std::to_string(line_no) + ": non-finite value");
        rows.push_back(std::move(values));
    }

    std::vector<int> labels;
    line_no = 0;
    while (std::getline(lf, line)) {
        ++line_no;
        if (detail::blank(line)) continue;
        auto values = detail::parse_numeric_line(line, line_no, labels_path);
        if (values.size() != 1)
            throw parse_error(labels_path + ":" + std::to_string(line_no) + ": expected one label per line");
        double raw = values[0];
        int lab = static_cast<int>(raw);
        if (static_cast<double>(lab) != raw)
            throw parse_error(labels_path + ":" + std::to_string(line_no) + ": label is not an integer");
        int zero_based = lab - schema.label_base;
        if (zero_based < 0 || zero_based >= schema.num_classes)
            throw parse_error(labels_path + ":" + std::to_string(line_no) + ": label " + std::to_string(lab) +
                              " outside [" + std::to_string(schema.label_base) + "," +
                              std::to_string(schema.num_classes + schema.label_base - 1) + "]");
        labels.push_back(zero_based);
    }

    if (rows.size() != labels.size())
        throw parse_error("row count mismatch: " + std::to_string(rows.size()) + " feature rows vs " +
                          std::to_string(labels.size()) + " labels");
    if (rows.empty())
        throw parse_error("dataset is empty: " + features_path);

    LabeledDataset ds;
    ds.features.resize(static_cast<Eigen::Index>(rows.size()), schema.expected_columns);
    for (std::size_t r = 0; r < rows.size(); ++r)
        for (int c = 0; c < schema.expected_columns; ++c)
            ds.features(static_cast<Eigen::Index>(r), c) = rows[r][static_cast<std::size_t>(c)];
    ds.labels = std::move(labels);
    ds.split_tag = tag;
    if (schema.num_classes != 12) {
        ds.class_names.resize(static_cast<std::size_t>(schema.num_classes));
        for (int k = 0; k < schema.num_classes; ++k)
            if (ds.class_names[static_cast<std::size_t>(k)].empty())
                ds.class_names[static_cast<std::size_t>(k)] = "CLASS_" + std::to_string(k + 1);
    }
    return ds;
}

// Loads a combined CSV: d feature columns then one label column; a header row
// is detected and skipped.
inline LabeledDataset load_combined_csv(const std::string& path, const DatasetSchema& schema = {},
                                        SplitTag tag = SplitTag::Train) {
    std::ifstream f(path);
    if (!f) throw io_error("cannot open dataset file: " + path);

    std::vector<std::vector<double>> rows;
    std::string line;
    int line_no = 0;
    while (std::getline(f, line)) {
        ++line_no;
        if (detail::blank(line)) continue;
        std::vector<double> values;
        try {
            values = detail::parse_numeric_line(line, line_no, path);
        } catch (const parse_error&) {
            if (line_no == 1) continue; // header row
            throw;
        }
        if (static_cast<int>(values.size()) != schema.expected_columns + 1)
            throw parse_error(path + ":" + std::to_string(line_no) + ": expected " +
                              std::to_string(schema.expected_columns + 1) + " columns, got " +
                              std::to_string(values.size()));
        rows.push_back(std::move(values));
    }
    if (rows.empty()) throw parse_error("dataset is empty: " + path);

    LabeledDataset ds;
    ds.features.resize(static_cast<Eigen::Index>(rows.size()), schema.expected_columns);
    ds.labels.resize(rows.size());
    for (std::size_t r = 0; r < rows.size(); ++r) {
        for (int c = 0; c < schema.expected_columns; ++c)
            ds.features(static_cast<Eigen::Index>(r), c) = rows[r][static_cast<std::size_t>(c)];
        int lab = static_cast<int>(rows[r].back()) - schema.label_base;
        if (lab < 0 || lab >= schema.num_classes)
            throw parse_error(path + ": label outside the declared class range");
        ds.labels[r] = lab;
    }
    ds.split_tag = tag;
    return ds;
}

inline Normalizer fit_normalizer(const LabeledDataset& train) {
    if (train.split_tag != SplitTag::Train)
        throw std::invalid_argument("fit_normalizer: normalizer must be fitted on a Train split");
    if (train.num_samples() < 1)
        throw std::invalid_argument("fit_normalizer: empty dataset");
    Normalizer norm;
    norm.min = train.features.colwise().minCoeff().transpose();
    norm.max = train.features.colwise().maxCoeff().transpose();
    return norm;
}

// Min-max scaling into [0,1]; constant features map to 0.5 and out-of-range
// test values clamp.
inline LabeledDataset apply_normalizer(const LabeledDataset& ds, const Normalizer& norm) {
    if (ds.num_features() != norm.min.size())
        throw std::invalid_argument("apply_normalizer: feature dimension does not match normalizer");
    LabeledDataset out = ds;
    for (int c = 0; c < ds.num_features(); ++c) {
        double lo = norm.min(c);
        double hi = norm.max(c);
        for (Eigen::Index r = 0; r < out.features.rows(); ++r) {
            if (hi == lo) {
                out.features(r, c) = 0.5;
            } else {
                double x = (out.features(r, c) - lo) / (hi - lo);
                out.features(r, c) = std::clamp(x, 0.0, 1.0);
            }
        }
    }
    return out;
}

struct ClusterSpec {
    int num_classes = 12;
    int dimension = 12;
    double separation = 3.0;   // minimum distance between class means, in noise units
    double noise = 0.1;
    int train_size = 7767;
    int test_size = 3162;
};

// Gaussian clusters clipped to [0,1], one per class; a stand-in corpus with
// the activity dataset's split shape.
inline std::pair<LabeledDataset, LabeledDataset> synth_dataset(const ClusterSpec& spec, Rng& rng) {
    if (spec.train_size < 1 || spec.test_size < 1)
        throw std::invalid_argument("synth_dataset: sizes must be positive");
    if (spec.num_classes < 1 || spec.dimension < 1)
        throw std::invalid_argument("synth_dataset: class count and dimension must be positive");

    // Class means drawn away from the clipping boundary, resampled until all
    // pairwise distances meet the requested separation.
    Matrix means(spec.num_classes, spec.dimension);
    Rng mean_rng = rng.fork(1);
    double min_dist = spec.separation * spec.noise;
    for (int k = 0; k < spec.num_classes; ++k) {
        for (int attempt = 0;; ++attempt) {
            for (int d = 0; d < spec.dimension; ++d)
                means(k, d) = 0.15 + 0.7 * mean_rng.uniform();
            bool ok = true;
            for (int j = 0; j < k && ok; ++j)
                if ((means.row(k) - means.row(j)).norm() < min_dist) ok = false;
            if (ok) break;
            if (attempt > 10000)
                throw std::invalid_argument("synth_dataset: cannot place class means at the requested separation");
        }
    }

    auto make_split = [&](int size, Rng sample_rng, SplitTag tag) {
        LabeledDataset ds;
        ds.features.resize(size, spec.dimension);
        ds.labels.resize(static_cast<std::size_t>(size));
        ds.split_tag = tag;
        if (spec.num_classes != 12) {
            ds.class_names.clear();
            for (int k = 0; k < spec.num_classes; ++k)
                ds.class_names.push_back("CLASS_" + std::to_string(k + 1));
        }
        for (int r = 0; r < size; ++r) {
            int k = r % spec.num_classes;
            ds.labels[static_cast<std::size_t>(r)] = k;
            for (int d = 0; d < spec.dimension; ++d)
                ds.features(r, d) = std::clamp(means(k, d) + spec.noise * sample_rng.gaussian(), 0.0, 1.0);
        }
        return ds;
    };

    return {make_split(spec.train_size, rng.fork(2), SplitTag::Train),
            make_split(spec.test_size, rng.fork(3), SplitTag::Test)};
}

} // namespace dbn
