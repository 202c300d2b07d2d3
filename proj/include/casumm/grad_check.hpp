#pragma once

#include <functional>
#include <string>

#include "casumm/graph.hpp"

namespace casumm::nn {

struct GradCheckReport {
    double max_rel_err = 0.0;
    std::string worst_param;
    int worst_index = -1;
    bool pass = false;
};

// Compares reverse-mode gradients against central differences.
//
// `loss` must rebuild the computation from the current parameter values and
// return the scalar loss; when `with_grad` is true it must also run
// backward so gradients accumulate into the store. The error measure is
// |analytic - numeric| / max(1, |analytic|, |numeric|), i.e. absolute below
// magnitude 1 and relative above it.
GradCheckReport grad_check(ParameterStore& params,
                           const std::function<double(bool with_grad)>& loss,
                           double epsilon = 1e-5, double tolerance = 1e-4);

}  // namespace casumm::nn
