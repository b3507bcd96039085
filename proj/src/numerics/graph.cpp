#include "lmd/numerics/graph.hpp"

#include <stdexcept>

#include "lmd/numerics/kernels.hpp"

namespace lmd::numerics {

Parameter& ParameterSet::add(std::string name, Tensor value) {
    Tensor grad(value.shape());
    params_.push_back(Parameter{std::move(name), std::move(value), std::move(grad)});
    return params_.back();
}

std::size_t ParameterSet::scalar_count() const {
    std::size_t n = 0;
    for (const auto& p : params_) n += p.value.size();
    return n;
}

void ParameterSet::zero_grad() {
    for (auto& p : params_) p.grad.fill(0.0f);
}

Var Graph::push(Tensor value, std::vector<Var> inputs, std::function<void(Graph&, const Node&)> propagate) {
    if (consumed_) throw std::logic_error("graph: cannot extend a graph after backward()");
    Node node;
    node.value = std::move(value);
    if (record_) {
        node.inputs = std::move(inputs);
        node.propagate = std::move(propagate);
    }
    nodes_.push_back(std::move(node));
    return Var{static_cast<std::uint32_t>(nodes_.size() - 1)};
}

Tensor& Graph::grad_buffer(Var v) {
    Node& node = nodes_[v.index];
    if (node.grad.empty()) node.grad = Tensor(node.value.shape());
    return node.grad;
}

const Tensor& Graph::grad(Var v) const {
    const Node& node = nodes_.at(v.index);
    if (node.grad.empty()) throw std::logic_error("graph: no gradient recorded for node");
    return node.grad;
}

Var Graph::constant(Tensor value) { return push(std::move(value), {}, nullptr); }

Var Graph::parameter(Parameter& param) {
    if (auto it = param_nodes_.find(&param); it != param_nodes_.end()) return it->second;
    Var v = push(param.value, {}, nullptr);
    nodes_[v.index].param = &param;
    param_nodes_.emplace(&param, v);
    return v;
}

Var Graph::add(Var a, Var b) {
    return push(kernels::add(value(a), value(b)), {a, b}, [](Graph& g, const Node& n) {
        Tensor& ga = g.grad_buffer(n.inputs[0]);
        for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += n.grad[i];
        Tensor& gb = g.grad_buffer(n.inputs[1]);
        for (std::size_t i = 0; i < gb.size(); ++i) gb[i] += n.grad[i];
    });
}

Var Graph::sub(Var a, Var b) {
    return push(kernels::sub(value(a), value(b)), {a, b}, [](Graph& g, const Node& n) {
        Tensor& ga = g.grad_buffer(n.inputs[0]);
        for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += n.grad[i];
        Tensor& gb = g.grad_buffer(n.inputs[1]);
        for (std::size_t i = 0; i < gb.size(); ++i) gb[i] -= n.grad[i];
    });
}

Var Graph::mul(Var a, Var b) {
    return push(kernels::mul(value(a), value(b)), {a, b}, [](Graph& g, const Node& n) {
        const Tensor& va = g.value(n.inputs[0]);
        const Tensor& vb = g.value(n.inputs[1]);
        Tensor& ga = g.grad_buffer(n.inputs[0]);
        for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += n.grad[i] * vb[i];
        Tensor& gb = g.grad_buffer(n.inputs[1]);
        for (std::size_t i = 0; i < gb.size(); ++i) gb[i] += n.grad[i] * va[i];
    });
}

Var Graph::scale(Var a, float factor) {
    return push(kernels::scale(value(a), factor), {a}, [factor](Graph& g, const Node& n) {
        Tensor& ga = g.grad_buffer(n.inputs[0]);
        for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += n.grad[i] * factor;
    });
}

Var Graph::affine(Var x, Var w, Var b) {
    return push(kernels::affine(value(x), value(w), value(b)), {x, w, b}, [](Graph& g, const Node& n) {
        kernels::affine_backward(g.value(n.inputs[0]), g.value(n.inputs[1]), n.grad,
                                 &g.grad_buffer(n.inputs[0]), &g.grad_buffer(n.inputs[1]),
                                 &g.grad_buffer(n.inputs[2]));
    });
}

Var Graph::conv2d(Var x, Var w, Var b) {
    return push(kernels::conv2d(value(x), value(w), value(b)), {x, w, b}, [](Graph& g, const Node& n) {
        kernels::conv2d_backward(g.value(n.inputs[0]), g.value(n.inputs[1]), n.grad,
                                 &g.grad_buffer(n.inputs[0]), &g.grad_buffer(n.inputs[1]),
                                 &g.grad_buffer(n.inputs[2]));
    });
}

Var Graph::silu(Var x) {
    return push(kernels::silu(value(x)), {x}, [](Graph& g, const Node& n) {
        kernels::silu_backward(g.value(n.inputs[0]), n.grad, g.grad_buffer(n.inputs[0]));
    });
}

Var Graph::mean(Var x) {
    return push(Tensor::scalar(kernels::mean(value(x))), {x}, [](Graph& g, const Node& n) {
        Tensor& gx = g.grad_buffer(n.inputs[0]);
        const float share = n.grad[0] / static_cast<float>(gx.size());
        for (std::size_t i = 0; i < gx.size(); ++i) gx[i] += share;
    });
}

Var Graph::sum_of_squares(Var x) {
    return push(Tensor::scalar(kernels::sum_of_squares(value(x))), {x}, [](Graph& g, const Node& n) {
        const Tensor& vx = g.value(n.inputs[0]);
        Tensor& gx = g.grad_buffer(n.inputs[0]);
        const float two_g = 2.0f * n.grad[0];
        for (std::size_t i = 0; i < gx.size(); ++i) gx[i] += two_g * vx[i];
    });
}

Var Graph::concat_channels(Var a, Var b) {
    return push(kernels::concat_channels(value(a), value(b)), {a, b}, [](Graph& g, const Node& n) {
        Tensor& ga = g.grad_buffer(n.inputs[0]);
        Tensor& gb = g.grad_buffer(n.inputs[1]);
        const std::size_t batch = ga.dim(0), hw = ga.dim(2) * ga.dim(3);
        const std::size_t ca = ga.dim(1), cb = gb.dim(1);
        for (std::size_t s = 0; s < batch; ++s) {
            const float* src = n.grad.raw() + s * (ca + cb) * hw;
            float* da = ga.raw() + s * ca * hw;
            for (std::size_t i = 0; i < ca * hw; ++i) da[i] += src[i];
            float* db = gb.raw() + s * cb * hw;
            for (std::size_t i = 0; i < cb * hw; ++i) db[i] += src[ca * hw + i];
        }
    });
}

Var Graph::mean_pool2(Var x) {
    return push(kernels::mean_pool2(value(x)), {x}, [](Graph& g, const Node& n) {
        kernels::mean_pool2_backward(n.grad, g.grad_buffer(n.inputs[0]));
    });
}

Var Graph::upsample2(Var x) {
    return push(kernels::upsample2(value(x)), {x}, [](Graph& g, const Node& n) {
        kernels::upsample2_backward(n.grad, g.grad_buffer(n.inputs[0]));
    });
}

Var Graph::add_channel_bias(Var x, Var v) {
    return push(kernels::add_channel_bias(value(x), value(v)), {x, v}, [](Graph& g, const Node& n) {
        Tensor& gx = g.grad_buffer(n.inputs[0]);
        for (std::size_t i = 0; i < gx.size(); ++i) gx[i] += n.grad[i];
        kernels::add_channel_bias_backward(n.grad, g.grad_buffer(n.inputs[1]));
    });
}

void Graph::backward(Var loss) {
    if (!record_) throw std::logic_error("graph: backward() on a non-recording graph");
    if (consumed_) throw std::logic_error("graph: backward() already ran on this graph");
    if (value(loss).size() != 1) {
        throw std::invalid_argument("graph: backward() needs a scalar loss, got shape " +
                                    to_string(value(loss).shape()));
    }
    consumed_ = true;
    grad_buffer(loss)[0] = 1.0f;
    for (std::size_t i = loss.index + 1; i-- > 0;) {
        Node& node = nodes_[i];
        if (node.grad.empty()) continue;
        if (node.propagate) node.propagate(*this, node);
    }
    for (auto& node : nodes_) {
        if (node.param == nullptr) continue;
        node.param->grad = node.grad.empty() ? Tensor(node.value.shape()) : node.grad;
    }
}

}  // namespace lmd::numerics
