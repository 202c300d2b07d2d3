#pragma once

#include <string>
#include <vector>

#include "casumm/adam.hpp"

namespace casumm {

enum class LossMode {
    convex,    // (1-lambda)*L_sent + lambda*L_tag
    additive,  // L_sent + lambda*L_tag
};

// Shared training settings for the selector and fusion models.
struct TrainConfig {
    double lambda = 0.2;  // tagging-loss weight (selector only)
    int epochs = 10;
    int batch_size = 1;  // gradients accumulate over this many instances per step
    unsigned seed = 13;
    nn::AdamConfig adam;
    LossMode loss_mode = LossMode::convex;
    std::string checkpoint_path;          // empty disables checkpoint writing
    bool keep_epoch_checkpoints = false;  // also write <path>.epochN
    bool quiet = true;                    // suppress per-epoch stderr lines
};

struct EpochLog {
    int epoch = 0;
    double loss = 0.0;
    double accuracy = 0.0;  // instance accuracy (selector) / exact-match rate (fusion, if computed)
};

void write_train_log(const std::string& path, const std::vector<EpochLog>& log);

}  // namespace casumm
