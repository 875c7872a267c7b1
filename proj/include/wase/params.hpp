#pragma once

#include <map>
#include <string>
#include <utility>

#include "wase/autodiff.hpp"
#include "wase/tensor.hpp"

namespace wase {

// Named parameter tensors plus same-shaped gradient slots. Iteration is
// name-ordered everywhere, which keeps optimizer updates and checkpoint
// layouts deterministic.
class ParameterStore {
public:
    Tensor& create(const std::string& name, Tensor init) {
        if (params_.count(name)) throw Error("duplicate parameter name: " + name);
        grads_.emplace(name, Tensor(init.shape()));
        return params_.emplace(name, std::move(init)).first->second;
    }

    bool has(const std::string& name) const { return params_.count(name) != 0; }

    Tensor& value(const std::string& name) { return at(params_, name); }
    const Tensor& value(const std::string& name) const { return at(params_, name); }
    Tensor& grad(const std::string& name) { return at(grads_, name); }
    const Tensor& grad(const std::string& name) const { return at(grads_, name); }

    std::size_t size() const { return params_.size(); }
    const std::map<std::string, Tensor>& all() const { return params_; }

    // Puts the current value on the tape as a leaf and binds the name so
    // backward() knows where the gradient belongs.
    Var use(Tape& tape, const std::string& name) const {
        Var v = tape.leaf(value(name));
        tape.bind_parameter(v, name);
        return v;
    }

    void zero_grads() {
        for (auto& [name, g] : grads_) g.fill(0.0);
        populated_ = false;
    }

    void mark_populated() { populated_ = true; }
    bool grads_populated() const { return populated_; }

private:
    static Tensor& at(std::map<std::string, Tensor>& m, const std::string& name) {
        auto it = m.find(name);
        if (it == m.end()) throw Error("unknown parameter: " + name);
        return it->second;
    }
    static const Tensor& at(const std::map<std::string, Tensor>& m, const std::string& name) {
        auto it = m.find(name);
        if (it == m.end()) throw Error("unknown parameter: " + name);
        return it->second;
    }

    std::map<std::string, Tensor> params_;
    std::map<std::string, Tensor> grads_;
    bool populated_ = false;
};

// Runs the reverse sweep and accumulates gradients of every bound
// parameter into the store. Parameters off the path keep zero gradients.
inline void backward(Tape& tape, Var loss, ParameterStore& store) {
    tape.backward(loss);
    for (const auto& [var, name] : tape.parameter_bindings()) {
        Tensor g = tape.grad(var);
        Tensor& slot = store.grad(name);
        require_same_shape(slot, g, "backward");
        for (std::size_t i = 0; i < slot.numel(); ++i) slot[i] += g[i];
    }
    store.mark_populated();
}

enum class OptMethod { PlainSgd, Adam };

// Optimizer state: method tag, learning rate and per-parameter moment
// accumulators (Adam only).
struct OptimizerState {
    OptMethod method = OptMethod::Adam;
    double learning_rate = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    std::int64_t step_count = 0;
    std::map<std::string, Tensor> m1;
    std::map<std::string, Tensor> m2;
};

// One update over every parameter; zeroes gradients afterwards.
// Plain mode:  theta <- theta - lr * g
// Adam:        m <- b1*m + (1-b1)*g;  v <- b2*v + (1-b2)*g^2
//              theta <- theta - lr * mhat / (sqrt(vhat) + eps)
inline void optimizer_step(ParameterStore& store, OptimizerState& state) {
    if (!store.grads_populated()) {
        throw Error("optimizer_step: gradients missing (run backward first)");
    }
    state.step_count += 1;
    for (const auto& [name, p] : store.all()) {
        Tensor& theta = store.value(name);
        const Tensor& g = store.grad(name);
        if (state.method == OptMethod::PlainSgd) {
            for (std::size_t i = 0; i < theta.numel(); ++i) {
                theta[i] -= state.learning_rate * g[i];
            }
            continue;
        }
        auto m1 = state.m1.find(name);
        if (m1 == state.m1.end()) m1 = state.m1.emplace(name, Tensor(theta.shape())).first;
        auto m2 = state.m2.find(name);
        if (m2 == state.m2.end()) m2 = state.m2.emplace(name, Tensor(theta.shape())).first;
        require_same_shape(m1->second, theta, "optimizer_step");
        const double c1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step_count));
        const double c2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step_count));
        for (std::size_t i = 0; i < theta.numel(); ++i) {
            double& m = m1->second[i];
            double& v = m2->second[i];
            m = state.beta1 * m + (1.0 - state.beta1) * g[i];
            v = state.beta2 * v + (1.0 - state.beta2) * g[i] * g[i];
            theta[i] -= state.learning_rate * (m / c1) / (std::sqrt(v / c2) + state.epsilon);
        }
    }
    store.zero_grads();
}

}  // namespace wase
