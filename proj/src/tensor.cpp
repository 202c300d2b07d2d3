#include "casumm/tensor.hpp"

#include <cmath>
#include <sstream>

#include "casumm/errors.hpp"

namespace casumm::nn {

namespace {

int product(const std::vector<int>& shape) {
    int n = 1;
    for (int d : shape) {
        detail::check(d >= 0, "tensor dimension must be nonnegative");
        n *= d;
    }
    return n;
}

}  // namespace

Tensor Tensor::zeros(std::vector<int> shape) {
    Tensor t;
    int n = product(shape);
    t.shape = std::move(shape);
    t.v.assign(static_cast<std::size_t>(n), 0.0);
    return t;
}

Tensor Tensor::full(std::vector<int> shape, double value) {
    Tensor t = zeros(std::move(shape));
    t.fill(value);
    return t;
}

Tensor Tensor::scalar(double value) {
    Tensor t;
    t.shape = {1};
    t.v = {value};
    return t;
}

Tensor Tensor::vec(std::vector<double> values) {
    Tensor t;
    t.shape = {static_cast<int>(values.size())};
    t.v = std::move(values);
    return t;
}

Tensor Tensor::row(std::vector<double> values) {
    Tensor t;
    t.shape = {1, static_cast<int>(values.size())};
    t.v = std::move(values);
    return t;
}

Tensor Tensor::column(std::vector<double> values) {
    Tensor t;
    t.shape = {static_cast<int>(values.size()), 1};
    t.v = std::move(values);
    return t;
}

Tensor Tensor::from(std::vector<int> shape, std::vector<double> values) {
    detail::check(product(shape) == static_cast<int>(values.size()),
                  "Tensor::from: value count does not match shape");
    Tensor t;
    t.shape = std::move(shape);
    t.v = std::move(values);
    return t;
}

Tensor Tensor::uniform(std::vector<int> shape, double lo, double hi, Rng& rng) {
    Tensor t = zeros(std::move(shape));
    for (auto& x : t.v) x = rng.uniform(lo, hi);
    return t;
}

int Tensor::numel() const { return static_cast<int>(v.size()); }

int Tensor::rows() const {
    detail::check(shape.size() == 2, "rows(): tensor is not 2-D");
    return shape[0];
}

int Tensor::cols() const {
    detail::check(shape.size() == 2, "cols(): tensor is not 2-D");
    return shape[1];
}

void Tensor::fill(double value) {
    for (auto& x : v) x = value;
}

bool Tensor::all_finite() const {
    for (double x : v) {
        if (!std::isfinite(x)) return false;
    }
    return true;
}

std::string Tensor::shape_str() const {
    std::ostringstream os;
    os << "[";
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i) os << ",";
        os << shape[i];
    }
    os << "]";
    return os.str();
}

}  // namespace casumm::nn
