#include "casumm/grad_check.hpp"

#include <cmath>
#include <vector>

#include "casumm/errors.hpp"

namespace casumm::nn {

GradCheckReport grad_check(ParameterStore& params,
                           const std::function<double(bool)>& loss,
                           double epsilon, double tolerance) {
    detail::check(epsilon >= 1e-7 && epsilon <= 1e-3, "grad_check: epsilon out of range");
    params.zero_grads();
    double base = loss(true);
    if (!std::isfinite(base)) throw NumericError("grad_check: loss is not finite");

    // snapshot analytic gradients before finite differencing clobbers them
    std::vector<Tensor> analytic;
    auto all = params.all();
    for (Parameter* p : all) analytic.push_back(p->grad);

    GradCheckReport report;
    for (std::size_t pi = 0; pi < all.size(); ++pi) {
        Parameter* p = all[pi];
        if (!p->trainable) continue;
        for (int i = 0; i < p->value.numel(); ++i) {
            double saved = p->value.v[i];
            p->value.v[i] = saved + epsilon;
            double up = loss(false);
            p->value.v[i] = saved - epsilon;
            double down = loss(false);
            p->value.v[i] = saved;
            if (!std::isfinite(up) || !std::isfinite(down))
                throw NumericError("grad_check: non-finite loss while perturbing parameter " +
                                   p->name);
            double numeric = (up - down) / (2.0 * epsilon);
            double a = analytic[pi].v[i];
            if (!std::isfinite(a))
                throw NumericError("grad_check: non-finite gradient for parameter " + p->name);
            double err = std::fabs(a - numeric) /
                         std::max({1.0, std::fabs(a), std::fabs(numeric)});
            if (err > report.max_rel_err) {
                report.max_rel_err = err;
                report.worst_param = p->name;
                report.worst_index = i;
            }
        }
    }
    params.zero_grads();
    report.pass = report.max_rel_err < tolerance;
    return report;
}

}  // namespace casumm::nn
