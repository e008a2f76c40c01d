#pragma once

#include <cstdint>
#include <deque>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "finsent/rng.hpp"
#include "finsent/tensor.hpp"

namespace finsent::ad {

// Trainable tensor with a persistent gradient accumulator. The tape never
// zeroes `grad`; the optimizer does, so gradients accumulate naturally
// across the per-instance tapes of a mini-batch.
struct Parameter {
    std::string name;
    Tensor value;
    Tensor grad;
};

class ParameterStore {
public:
    Parameter& add(std::string name, Tensor init);

    Parameter* find(const std::string& name);
    const Parameter* find(const std::string& name) const;

    std::size_t count() const { return params_.size(); }
    std::size_t total_size() const;

    void zero_grads();

    // named gradient snapshot, e.g. for inspection after a backward pass
    std::map<std::string, Tensor> gradients() const;

    auto begin() { return params_.begin(); }
    auto end() { return params_.end(); }
    auto begin() const { return params_.begin(); }
    auto end() const { return params_.end(); }

private:
    std::deque<Parameter> params_;  // deque: stable addresses for tape bindings
};

// Uniform init in +/- sqrt(6 / (fan_in + fan_out)) for a (fan_out x fan_in)
// matrix; elements drawn in row-major order.
Tensor glorot_uniform(std::size_t fan_out, std::size_t fan_in, RunRng& rng);

struct Var {
    std::uint32_t id = UINT32_MAX;
};

// Reverse-mode tape over dense tensors. Ops evaluate eagerly (the forward
// pass is the sequence of op calls) and record a backward closure;
// backward() replays the closures in reverse creation order, which is a
// reverse topological order by construction, visiting each node once.
//
// Every op validates shapes and checks its result for non-finite values.
// Graphs are built per training instance and are single-threaded; only
// Parameter gradients survive the tape.
class Tape {
public:
    explicit Tape(bool check_finite = true) : check_finite_(check_finite) {}

    // leaves
    Var constant(Tensor v);                // owned, no gradient
    Var constant_ref(const Tensor* v);     // borrowed, no gradient; caller keeps alive
    Var leaf(Tensor v);                    // owned, gradient tracked (for tests)
    Var param(Parameter& p);               // borrowed value, grads flow into p.grad

    // ops
    Var matvec(Var w, Var x);    // (m,n) x (n) -> (m)
    Var matvec_t(Var w, Var x);  // (m,n)^T x (m) -> (n)
    Var add(Var a, Var b);
    Var sub(Var a, Var b);
    Var mul(Var a, Var b);  // elementwise
    Var scale(Var a, double c);
    Var tanh(Var a);
    Var sigmoid(Var a);
    Var softmax(Var a);  // 1-D, numerically stable
    Var dot(Var a, Var b);
    Var sum(Var a);
    Var concat(Var a, Var b);
    Var slice(Var a, std::size_t offset, std::size_t len);
    Var stack(const std::vector<Var>& scalars);
    Var weighted_sum(Var weights, const std::vector<Var>& vectors);

    // Inverted dropout: in train mode each element is zeroed with
    // probability `rate` (one uniform draw per element, in element order)
    // and survivors are scaled by 1/(1-rate). With rate 0 or in eval mode
    // this is the identity and draws nothing; rng may then be null.
    Var dropout(Var a, double rate, bool train_mode, RunRng* rng);

    const Tensor& value(Var v) const;

    // gradient of the last backward() seed w.r.t. this node
    const Tensor& grad(Var v) const;

    void backward(Var root);  // scalar root, seed 1
    void backward(Var root, const Tensor& seed);

    std::size_t node_count() const { return nodes_.size(); }

private:
    struct Node {
        const Tensor* value = nullptr;
        Tensor owned;
        Tensor* grad_sink = nullptr;  // param accumulator, or null
        Tensor grad;
        bool requires_grad = false;
        const char* op = "";
        std::function<void(Tape&)> backprop;
    };

    Node& node(Var v);
    const Node& node(Var v) const;
    Tensor& grad_buf(std::uint32_t id);
    Var push(Node n);
    Var make_op(const char* op, Tensor value, bool requires_grad,
                std::function<void(Tape&)> backprop);

    std::deque<Node> nodes_;
    bool check_finite_;
};

}  // namespace finsent::ad
