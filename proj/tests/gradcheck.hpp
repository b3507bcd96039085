#pragma once

// Finite-difference check of every differentiable graph op against the
// double-precision oracles in oracles.hpp.

#include <functional>
#include <string>
#include <vector>

#include "lmd/numerics/graph.hpp"
#include "lmd/numerics/rng.hpp"
#include "oracles.hpp"

namespace gradcheck {

using namespace lmd::numerics;

struct OpCase {
    const char* name;
    std::vector<Shape> inputs;
    std::function<Var(Graph&, const std::vector<Var>&)> graph_op;
    std::function<oracle::Array(const std::vector<oracle::Array>&)> oracle_op;
};

inline oracle::Array elementwise(const oracle::Array& a, const oracle::Array& b, double (*f)(double, double)) {
    oracle::Array out = a;
    for (std::size_t i = 0; i < a.v.size(); ++i) out.v[i] = f(a.v[i], b.v[i]);
    return out;
}

inline std::vector<OpCase> op_cases(Rng& rng) {
    const std::size_t n = 1 + rng.below(2), c = 1 + rng.below(3), h = 2 * (1 + rng.below(3)),
                      w = 2 * (1 + rng.below(3)), co = 1 + rng.below(5), kk = rng.below(2) ? 3 : 1;
    const std::size_t in = 1 + rng.below(5), out = 1 + rng.below(4);
    using A = oracle::Array;
    return {
        {"conv2d",
         {{n, c, h, w}, {co, c, kk, kk}, {co}},
         [](Graph& g, const std::vector<Var>& v) { return g.conv2d(v[0], v[1], v[2]); },
         [](const std::vector<A>& v) { return oracle::conv2d(v[0], v[1], v[2]); }},
        {"affine",
         {{n, in}, {out, in}, {out}},
         [](Graph& g, const std::vector<Var>& v) { return g.affine(v[0], v[1], v[2]); },
         [](const std::vector<A>& v) { return oracle::affine(v[0], v[1], v[2]); }},
        {"silu",
         {{n, c, h, w}},
         [](Graph& g, const std::vector<Var>& v) { return g.silu(v[0]); },
         [](const std::vector<A>& v) { return oracle::silu(v[0]); }},
        {"mean_pool2",
         {{n, c, h, w}},
         [](Graph& g, const std::vector<Var>& v) { return g.mean_pool2(v[0]); },
         [](const std::vector<A>& v) { return oracle::pool2(v[0]); }},
        {"upsample2",
         {{n, c, h, w}},
         [](Graph& g, const std::vector<Var>& v) { return g.upsample2(v[0]); },
         [](const std::vector<A>& v) { return oracle::upsample2(v[0]); }},
        {"concat_channels",
         {{n, c, h, w}, {n, co, h, w}},
         [](Graph& g, const std::vector<Var>& v) { return g.concat_channels(v[0], v[1]); },
         [](const std::vector<A>& v) { return oracle::concat(v[0], v[1]); }},
        {"add_channel_bias",
         {{n, c, h, w}, {n, c}},
         [](Graph& g, const std::vector<Var>& v) { return g.add_channel_bias(v[0], v[1]); },
         [](const std::vector<A>& v) { return oracle::channel_bias(v[0], v[1]); }},
        {"mul",
         {{n, c, h, w}, {n, c, h, w}},
         [](Graph& g, const std::vector<Var>& v) { return g.mul(v[0], v[1]); },
         [](const std::vector<A>& v) { return elementwise(v[0], v[1], [](double a, double b) { return a * b; }); }},
        {"add",
         {{n, c, h, w}, {n, c, h, w}},
         [](Graph& g, const std::vector<Var>& v) { return g.add(v[0], v[1]); },
         [](const std::vector<A>& v) { return elementwise(v[0], v[1], [](double a, double b) { return a + b; }); }},
        {"sub",
         {{n, c, h, w}, {n, c, h, w}},
         [](Graph& g, const std::vector<Var>& v) { return g.sub(v[0], v[1]); },
         [](const std::vector<A>& v) { return elementwise(v[0], v[1], [](double a, double b) { return a - b; }); }},
        {"scale",
         {{n, c, h, w}},
         [](Graph& g, const std::vector<Var>& v) { return g.scale(v[0], -1.75f); },
         [](const std::vector<A>& v) {
             A out = v[0];
             for (auto& e : out.v) e *= -1.75;
             return out;
         }},
    };
}

// loss(y) = mean(y * r) + 0.1 * sum(y^2), built from graph ops so mean,
// mul, scale, add and sum_of_squares are exercised on every trial.
inline double oracle_loss(const oracle::Array& y, const oracle::Array& r) {
    double m = 0.0, s = 0.0;
    for (std::size_t i = 0; i < y.v.size(); ++i) {
        m += y.v[i] * r.v[i];
        s += y.v[i] * y.v[i];
    }
    return m / static_cast<double>(y.v.size()) + 0.1 * s;
}

inline double rel_error(const Tensor& analytic, const std::vector<double>& numeric) {
    double diff = 0.0, norm = 0.0;
    for (std::size_t i = 0; i < numeric.size(); ++i) {
        diff += (analytic[i] - numeric[i]) * (analytic[i] - numeric[i]);
        norm += numeric[i] * numeric[i];
    }
    return std::sqrt(diff) / std::max(std::sqrt(norm), 1e-8);
}

struct TrialResult {
    std::string op;
    double loss_rel_error;
    double max_rel_error;  // worst input tensor
};

// Each trial draws fresh shapes, cycles through the ops, and compares the
// recorded backward pass with central differences (step 1e-3) of the oracle loss.
inline std::vector<TrialResult> run(int trials, std::uint64_t seed) {
    Rng rng(seed);
    const double h = 1e-3;
    std::vector<TrialResult> results;
    for (int trial = 0; trial < trials; ++trial) {
        auto cases = op_cases(rng);
        auto& op = cases[static_cast<std::size_t>(trial) % cases.size()];
        ParameterSet ps;
        std::vector<Parameter*> params;
        for (std::size_t i = 0; i < op.inputs.size(); ++i) {
            params.push_back(&ps.add("in" + std::to_string(i), rng.normal_tensor(op.inputs[i])));
        }
        Graph g;
        std::vector<Var> vars;
        for (auto* p : params) vars.push_back(g.parameter(*p));
        const Var out = op.graph_op(g, vars);
        const Tensor r = rng.normal_tensor(g.value(out).shape());
        const Var loss = g.add(g.mean(g.mul(out, g.constant(r))), g.scale(g.sum_of_squares(out), 0.1f));
        g.backward(loss);

        std::vector<oracle::Array> base;
        for (auto* p : params) base.push_back(oracle::Array::from(p->value));
        const auto rr = oracle::Array::from(r);
        const double ref_loss = oracle_loss(op.oracle_op(base), rr);
        TrialResult res{op.name, std::abs(g.value(loss).item() - ref_loss) / std::max(std::abs(ref_loss), 1e-8), 0.0};
        for (std::size_t i = 0; i < params.size(); ++i) {
            std::vector<double> numeric(base[i].v.size());
            for (std::size_t j = 0; j < numeric.size(); ++j) {
                auto plus = base, minus = base;
                plus[i].v[j] += h;
                minus[i].v[j] -= h;
                numeric[j] = (oracle_loss(op.oracle_op(plus), rr) - oracle_loss(op.oracle_op(minus), rr)) / (2.0 * h);
            }
            res.max_rel_error = std::max(res.max_rel_error, rel_error(params[i]->grad, numeric));
        }
        results.push_back(res);
    }
    return results;
}

}  // namespace gradcheck
