#pragma once

#include <unordered_map>

#include "casumm/graph.hpp"

namespace casumm::nn {

struct AdamConfig {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

// Adam over a ParameterStore. step() consumes the accumulated gradients of
// all trainable parameters and zeroes them afterwards.
class Adam {
public:
    explicit Adam(AdamConfig cfg = {}) : cfg_(cfg) {}

    void step(ParameterStore& params);

private:
    struct Moments {
        Tensor m;
        Tensor v;
    };
    AdamConfig cfg_;
    long step_count_ = 0;
    std::unordered_map<const Parameter*, Moments> moments_;
};

}  // namespace casumm::nn
