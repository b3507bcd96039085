#pragma once

#include <cstdint>
#include <deque>
#include <functional>
#include <string>
#include <unordered_map>
#include <vector>

#include "lmd/numerics/tensor.hpp"

namespace lmd::numerics {

// Trainable leaf tensor. `grad` is overwritten by Graph::backward.
struct Parameter {
    std::string name;
    Tensor value;
    Tensor grad;
};

// Parameters in declaration order; addresses are stable for the lifetime of the set.
class ParameterSet {
   public:
    Parameter& add(std::string name, Tensor value);

    std::size_t size() const { return params_.size(); }
    Parameter& operator[](std::size_t i) { return params_[i]; }
    const Parameter& operator[](std::size_t i) const { return params_[i]; }

    auto begin() { return params_.begin(); }
    auto end() { return params_.end(); }
    auto begin() const { return params_.begin(); }
    auto end() const { return params_.end(); }

    std::size_t scalar_count() const;
    void zero_grad();

   private:
    std::deque<Parameter> params_;
};

// Handle to a node of a Graph.
struct Var {
    std::uint32_t index = 0;
};

// Single-use reverse-mode tape. Nodes are appended in evaluation order, so
// reverse insertion order is a valid topological order for backward().
// With recording disabled the graph only evaluates values.
class Graph {
   public:
    explicit Graph(bool record = true) : record_(record) {}
    Graph(const Graph&) = delete;
    Graph& operator=(const Graph&) = delete;

    Var constant(Tensor value);
    // Repeated calls with the same parameter return the same node.
    Var parameter(Parameter& param);

    Var add(Var a, Var b);
    Var sub(Var a, Var b);
    Var mul(Var a, Var b);
    Var scale(Var a, float factor);
    Var affine(Var x, Var w, Var b);
    Var conv2d(Var x, Var w, Var b);
    Var silu(Var x);
    Var mean(Var x);
    Var sum_of_squares(Var x);
    Var concat_channels(Var a, Var b);
    Var mean_pool2(Var x);
    Var upsample2(Var x);
    Var add_channel_bias(Var x, Var v);

    const Tensor& value(Var v) const { return nodes_.at(v.index).value; }
    // Gradient of the last backward() loss with respect to `v`.
    const Tensor& grad(Var v) const;
    std::size_t node_count() const { return nodes_.size(); }
    bool recording() const { return record_; }

    // Accumulates d loss / d node for every node and writes parameter
    // gradients. Rejects non-scalar losses and a second call on the same graph.
    void backward(Var loss);

   private:
    struct Node {
        Tensor value;
        Tensor grad;
        std::vector<Var> inputs;
        // Propagates this node's grad into its inputs' grads.
        std::function<void(Graph&, const Node&)> propagate;
        Parameter* param = nullptr;
    };

    Var push(Tensor value, std::vector<Var> inputs, std::function<void(Graph&, const Node&)> propagate);
    Tensor& grad_buffer(Var v);

    bool record_;
    bool consumed_ = false;
    std::vector<Node> nodes_;
    std::unordered_map<const Parameter*, Var> param_nodes_;
};

}  // namespace lmd::numerics
