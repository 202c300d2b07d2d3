#include "casumm/adam.hpp"

#include <cmath>

namespace casumm::nn {

void Adam::step(ParameterStore& params) {
    ++step_count_;
    double bc1 = 1.0 - std::pow(cfg_.beta1, step_count_);
    double bc2 = 1.0 - std::pow(cfg_.beta2, step_count_);
    for (Parameter* p : params.all()) {
        if (!p->trainable) continue;
        auto it = moments_.find(p);
        if (it == moments_.end()) {
            it = moments_.emplace(p, Moments{Tensor::zeros(p->value.shape),
                                             Tensor::zeros(p->value.shape)}).first;
        }
        Moments& mo = it->second;
        for (int i = 0; i < p->value.numel(); ++i) {
            double g = p->grad.v[i];
            mo.m.v[i] = cfg_.beta1 * mo.m.v[i] + (1.0 - cfg_.beta1) * g;
            mo.v.v[i] = cfg_.beta2 * mo.v.v[i] + (1.0 - cfg_.beta2) * g * g;
            double mhat = mo.m.v[i] / bc1;
            double vhat = mo.v.v[i] / bc2;
            p->value.v[i] -= cfg_.lr * mhat / (std::sqrt(vhat) + cfg_.eps);
        }
        p->grad.fill(0.0);
    }
}

}  // namespace casumm::nn
