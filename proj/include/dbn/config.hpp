#pragma once

#include <cstdint>
#include <stdexcept>
#include <vector>

namespace dbn {

// Training knobs shared by layer-wise pretraining and the classifier head.
struct TrainConfig {
    std::vector<int> layer_sizes;      // [input, h1, h2, ...]
    int epochs = 25;
    int cd_k = 1;
    double learning_rate = 0.05;
    double momentum = 0.5;
    // Per-sample updates by default: with only a dozen input features the CD
    // signal per batch is weak, and the replication presets need every update
    // they can get within their fixed epoch budgets.
    int batch_size = 1;
    double l2 = 1e-4;
    std::uint64_t seed = 0;
    bool fine_tune = false;
    int fine_tune_epochs = 0;
    int head_epochs = 300;
    double head_learning_rate = 0.1;

    void validate() const {
        if (epochs < 1) throw std::invalid_argument("epochs must be >= 1");
        if (cd_k < 1) throw std::invalid_argument("cd_k must be >= 1");
        if (learning_rate < 0.0) throw std::invalid_argument("learning_rate must be >= 0");
        if (momentum < 0.0 || momentum >= 1.0) throw std::invalid_argument("momentum must be in [0,1)");
        if (batch_size < 1) throw std::invalid_argument("batch_size must be >= 1");
        if (l2 < 0.0) throw std::invalid_argument("l2 must be >= 0");
        if (fine_tune_epochs < 0) throw std::invalid_argument("fine_tune_epochs must be >= 0");
        for (int s : layer_sizes)
            if (s < 1) throw std::invalid_argument("layer sizes must be >= 1");
    }
};

} // namespace dbn
