#pragma once

#include <functional>
#include <memory>
#include <string>
#include <unordered_map>
#include <vector>

#include "casumm/tensor.hpp"

namespace casumm::nn {

// Named trainable tensor. Gradients accumulate into `grad` when a Graph
// built over this parameter is run backward.
struct Parameter {
    std::string name;
    Tensor value;
    Tensor grad;
    bool trainable = true;
};

// Owns a model's parameters. Addresses are stable for the lifetime of the
// store, so optimizers may key their state by pointer.
class ParameterStore {
public:
    Parameter& add(const std::string& name, std::vector<int> shape);
    Parameter& add_uniform(const std::string& name, std::vector<int> shape,
                           double scale, Rng& rng);
    Parameter* find(const std::string& name);
    const Parameter* find(const std::string& name) const;
    std::vector<Parameter*> all();                 // insertion order
    std::vector<const Parameter*> all() const;
    void zero_grads();
    std::size_t size() const { return params_.size(); }

private:
    std::vector<std::unique_ptr<Parameter>> params_;
    std::unordered_map<std::string, std::size_t> index_;
};

// Dynamic computation graph with eager forward evaluation and reverse-mode
// gradients. One graph per training or decoding pass; parents always have
// smaller ids than children, so backward is a reverse sweep over ids.
class Graph {
public:
    using Id = int;

    // Leaves.
    Id input(Tensor t);                 // constant, no gradient
    Id param(Parameter& p);             // gradient accumulates into p.grad

    // Elementwise and broadcast arithmetic. add() accepts equal shapes, a
    // row vector broadcast over a matrix, or a single-element broadcast;
    // mul() accepts equal shapes or a single-element broadcast either side.
    Id add(Id a, Id b);
    Id sub(Id a, Id b);
    Id mul(Id a, Id b);
    Id scale(Id a, double c);
    Id minimum(Id a, Id b);

    Id matmul(Id a, Id b);
    Id transpose(Id a);
    Id concat(const std::vector<Id>& parts, int axis);
    Id slice(Id a, int axis, int start, int len);
    Id rows(Id a, std::vector<int> idx);  // gather rows; embedding lookup when a is a table param

    Id tanh_(Id a);
    Id sigmoid_(Id a);
    Id softmax(Id a, int axis);
    Id layer_norm(Id a, Id gain, Id bias);  // normalizes over the last axis
    Id log_(Id a);

    Id pick(Id a, int flat_index);                        // -> {1}
    Id nll(Id probs, int index);                          // -log(probs[index]) -> {1}
    Id bce(Id probs, Id labels);                          // elementwise binary cross-entropy
    Id scatter_sum(Id a, std::vector<int> dst, int out_size);  // out[dst[i]] += a[i]

    Id sum(Id a);   // -> {1}
    Id mean(Id a);  // -> {1}

    const Tensor& value(Id id) const;
    const Tensor& grad(Id id) const;
    double scalar_value(Id id) const;

    // Backpropagates from a single-element node. Gradients of parameter
    // leaves accumulate into their Parameter::grad.
    void backward(Id id);

    std::size_t node_count() const { return nodes_.size(); }

private:
    struct Node {
        Tensor val;
        Tensor grad;
        std::function<void(Graph&)> back;  // empty for leaves
        Parameter* parameter = nullptr;
    };

    Id emplace(Tensor val, std::function<void(Graph&)> back);
    Node& node(Id id) { return nodes_[static_cast<std::size_t>(id)]; }
    const Node& node(Id id) const { return nodes_[static_cast<std::size_t>(id)]; }

    std::vector<Node> nodes_;
};

}  // namespace casumm::nn
