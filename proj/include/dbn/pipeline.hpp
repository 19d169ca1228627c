#pragma once

#include <string>
#include <utility>
#include <vector>

#include "dbn/config.hpp"
#include "dbn/data.hpp"
#include "dbn/head.hpp"
#include "dbn/metrics.hpp"
#include "dbn/model_io.hpp"
#include "dbn/stack.hpp"

namespace dbn {

// The two experimental configurations from the replication target.
inline TrainConfig preset_paper_small() {
    TrainConfig c;
    c.layer_sizes = {12, 50, 50, 10};
    c.epochs = 25;
    return c;
}

inline TrainConfig preset_paper_large() {
    TrainConfig c;
    c.layer_sizes = {12, 1000, 1000, 1000};
    c.epochs = 250;
    return c;
}

struct TrainedModel {
    Model model;
    std::vector<double> head_loss_trace;
    double train_accuracy = 0.0;
};

// Full supervised pipeline: normalize, greedily pretrain the stack, train the
// softmax head on mean-field top features, optionally fine-tune end to end.
inline TrainedModel train_full_model(const LabeledDataset& train_raw, const TrainConfig& config) {
    config.validate();
    if (config.layer_sizes.empty())
        throw std::invalid_argument("train_full_model: layer_sizes must be set");

    Rng rng(config.seed);
    Normalizer norm = fit_normalizer(train_raw);
    LabeledDataset train = apply_normalizer(train_raw, norm);

    int n_classes = train.num_classes();
    DbnStack stack = greedy_pretrain(train.features, config.layer_sizes, config, rng);

    Matrix feats = propagate_up_batch(train.features, stack, PropagationMode::mean_field());
    SoftmaxHead head = SoftmaxHead::zeros(stack.top_size(), n_classes);
    auto [trained_head, trace] =
        train_head_standardized(feats, train.labels, std::move(head), config, rng);
    stack.head = std::move(trained_head);

    if (config.fine_tune && config.fine_tune_epochs > 0)
        stack = fine_tune(std::move(stack), train.features, train.labels, config, rng);

    TrainedModel out;
    out.model.stack = std::move(stack);
    out.model.normalizer = norm;
    out.model.class_names = train.class_names;
    out.head_loss_trace = std::move(trace);

    Matrix probs = predict_proba_batch(
        propagate_up_batch(train.features, out.model.stack, PropagationMode::mean_field()),
        *out.model.stack.head);
    EvalReport report = score(probs, train.labels, train.class_names);
    out.train_accuracy = report.accuracy;
    return out;
}

// Normalizes with the stored normalizer, propagates mean-field, and returns
// class probabilities, one row per sample.
inline Matrix model_predict_proba(const Model& model, const Matrix& raw_features) {
    if (!model.stack.head)
        throw std::invalid_argument("model has no classifier head");
    if (raw_features.cols() != model.stack.input_size())
        throw std::invalid_argument("feature dimension " + std::to_string(raw_features.cols()) +
                                    " does not match model input size " +
                                    std::to_string(model.stack.input_size()));
    Matrix feats = raw_features;
    if (model.normalizer) {
        LabeledDataset tmp;
        tmp.features = feats;
        tmp.labels.assign(static_cast<std::size_t>(feats.rows()), 0);
        feats = apply_normalizer(tmp, *model.normalizer).features;
    }
    Matrix top = propagate_up_batch(feats, model.stack, PropagationMode::mean_field());
    return predict_proba_batch(top, *model.stack.head);
}

inline EvalReport evaluate_model(const Model& model, const LabeledDataset& raw) {
    Matrix probs = model_predict_proba(model, raw.features);
    return score(probs, raw.labels, model.class_names);
}

} // namespace dbn
