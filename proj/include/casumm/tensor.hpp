#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "casumm/rng.hpp"

namespace casumm::nn {

// Dense row-major tensor of doubles. Most of the library works with 1-D
// vectors and 2-D matrices; shapes are kept general for IO.
struct Tensor {
    std::vector<int> shape;
    std::vector<double> v;

    Tensor() = default;

    static Tensor zeros(std::vector<int> shape);
    static Tensor full(std::vector<int> shape, double value);
    static Tensor scalar(double value);
    static Tensor vec(std::vector<double> values);
    static Tensor row(std::vector<double> values);     // shape {1, n}
    static Tensor column(std::vector<double> values);  // shape {n, 1}
    static Tensor from(std::vector<int> shape, std::vector<double> values);
    static Tensor uniform(std::vector<int> shape, double lo, double hi, Rng& rng);

    int numel() const;
    int rows() const;  // 2-D only
    int cols() const;  // 2-D only

    double& at(int i) { return v[static_cast<std::size_t>(i)]; }
    double at(int i) const { return v[static_cast<std::size_t>(i)]; }
    double& at2(int r, int c) { return v[static_cast<std::size_t>(r) * cols() + c]; }
    double at2(int r, int c) const { return v[static_cast<std::size_t>(r) * cols() + c]; }

    bool same_shape(const Tensor& other) const { return shape == other.shape; }
    void fill(double value);
    bool all_finite() const;

    std::string shape_str() const;
};

}  // namespace casumm::nn
