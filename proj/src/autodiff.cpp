#include "finsent/autodiff.hpp"

#include <cmath>
#include <stdexcept>

#include "finsent/kernels.hpp"

namespace finsent::ad {

namespace {

[[noreturn]] void shape_error(const char* op, const std::string& detail) {
    throw std::invalid_argument(std::string("autodiff: ") + op + ": " + detail);
}

void require_vector(const char* op, const Tensor& t) {
    if (t.shape().size() != 1) {
        shape_error(op, "expected 1-D tensor, got " + t.shape_string());
    }
}

void require_same_shape(const char* op, const Tensor& a, const Tensor& b) {
    if (!a.same_shape(b)) {
        shape_error(op, "shape mismatch " + a.shape_string() + " vs " + b.shape_string());
    }
}

}  // namespace

Parameter& ParameterStore::add(std::string name, Tensor init) {
    Tensor grad = Tensor::zeros(init.shape());
    params_.push_back(Parameter{std::move(name), std::move(init), std::move(grad)});
    return params_.back();
}

Parameter* ParameterStore::find(const std::string& name) {
    for (auto& p : params_) {
        if (p.name == name) return &p;
    }
    return nullptr;
}

const Parameter* ParameterStore::find(const std::string& name) const {
    for (const auto& p : params_) {
        if (p.name == name) return &p;
    }
    return nullptr;
}

std::size_t ParameterStore::total_size() const {
    std::size_t n = 0;
    for (const auto& p : params_) n += p.value.size();
    return n;
}

void ParameterStore::zero_grads() {
    for (auto& p : params_) p.grad.fill(0.0);
}

std::map<std::string, Tensor> ParameterStore::gradients() const {
    std::map<std::string, Tensor> out;
    for (const auto& p : params_) out.emplace(p.name, p.grad);
    return out;
}

Tensor glorot_uniform(std::size_t fan_out, std::size_t fan_in, RunRng& rng) {
    const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    Tensor t = Tensor::zeros({fan_out, fan_in});
    for (std::size_t i = 0; i < t.size(); ++i) t[i] = rng.next_uniform(-limit, limit);
    return t;
}

Tape::Node& Tape::node(Var v) {
    if (v.id >= nodes_.size()) throw std::invalid_argument("autodiff: invalid Var");
    return nodes_[v.id];
}

const Tape::Node& Tape::node(Var v) const {
    if (v.id >= nodes_.size()) throw std::invalid_argument("autodiff: invalid Var");
    return nodes_[v.id];
}

Tensor& Tape::grad_buf(std::uint32_t id) {
    Node& n = nodes_[id];
    return n.grad_sink ? *n.grad_sink : n.grad;
}

Var Tape::push(Node n) {
    nodes_.push_back(std::move(n));
    Node& stored = nodes_.back();
    if (stored.value == nullptr) stored.value = &stored.owned;
    if (check_finite_ && !stored.value->all_finite()) {
        throw std::runtime_error(std::string("autodiff: non-finite value produced by op '") +
                                 stored.op + "'");
    }
    return Var{static_cast<std::uint32_t>(nodes_.size() - 1)};
}

Var Tape::make_op(const char* op, Tensor value, bool requires_grad,
                  std::function<void(Tape&)> backprop) {
    Node n;
    n.owned = std::move(value);
    n.requires_grad = requires_grad;
    n.op = op;
    Var v = push(std::move(n));
    if (requires_grad) nodes_[v.id].backprop = std::move(backprop);
    return v;
}

Var Tape::constant(Tensor v) {
    Node n;
    n.owned = std::move(v);
    n.op = "constant";
    return push(std::move(n));
}

Var Tape::constant_ref(const Tensor* v) {
    Node n;
    n.value = v;
    n.op = "constant_ref";
    return push(std::move(n));
}

Var Tape::leaf(Tensor v) {
    Node n;
    n.owned = std::move(v);
    n.requires_grad = true;
    n.op = "leaf";
    return push(std::move(n));
}

Var Tape::param(Parameter& p) {
    Node n;
    n.value = &p.value;
    n.grad_sink = &p.grad;
    n.requires_grad = true;
    n.op = "param";
    return push(std::move(n));
}

const Tensor& Tape::value(Var v) const { return *node(v).value; }

const Tensor& Tape::grad(Var v) const {
    const Node& n = node(v);
    return n.grad_sink ? *n.grad_sink : n.grad;
}

Var Tape::matvec(Var w, Var x) {
    const Tensor& wv = value(w);
    const Tensor& xv = value(x);
    if (wv.shape().size() != 2) shape_error("matvec", "matrix must be 2-D");
    require_vector("matvec", xv);
    const std::size_t m = wv.rows(), n = wv.cols();
    if (n != xv.size()) {
        shape_error("matvec", "cols " + std::to_string(n) + " vs vector length " +
                                  std::to_string(xv.size()));
    }
    Tensor out = Tensor::zeros({m});
    kern::gemv(wv.data(), m, n, xv.data(), out.data());

    const bool needs = node(w).requires_grad || node(x).requires_grad;
    const std::uint32_t wid = w.id, xid = x.id;
    Var v = make_op("matvec", std::move(out), needs, nullptr);
    if (needs) {
        const std::uint32_t self = v.id;
        nodes_[self].backprop = [self, wid, xid, m, n](Tape& t) {
            const Tensor& g = t.nodes_[self].grad;
            if (t.nodes_[wid].requires_grad) {
                kern::ger(1.0, g.data(), m, t.nodes_[xid].value->data(), n,
                          t.grad_buf(wid).data());
            }
            if (t.nodes_[xid].requires_grad) {
                kern::gemv_t_acc(t.nodes_[wid].value->data(), m, n, g.data(),
                                 t.grad_buf(xid).data());
            }
        };
    }
    return v;
}

Var Tape::matvec_t(Var w, Var x) {
    const Tensor& wv = value(w);
    const Tensor& xv = value(x);
    if (wv.shape().size() != 2) shape_error("matvec_t", "matrix must be 2-D");
    require_vector("matvec_t", xv);
    const std::size_t m = wv.rows(), n = wv.cols();
    if (m != xv.size()) {
        shape_error("matvec_t", "rows " + std::to_string(m) + " vs vector length " +
                                    std::to_string(xv.size()));
    }
    Tensor out = Tensor::zeros({n});
    kern::gemv_t(wv.data(), m, n, xv.data(), out.data());

    const bool needs = node(w).requires_grad || node(x).requires_grad;
    const std::uint32_t wid = w.id, xid = x.id;
    Var v = make_op("matvec_t", std::move(out), needs, nullptr);
    if (needs) {
        const std::uint32_t self = v.id;
        nodes_[self].backprop = [self, wid, xid, m, n](Tape& t) {
            const Tensor& g = t.nodes_[self].grad;
            if (t.nodes_[wid].requires_grad) {
                // dW[i][j] += x[i] * g[j]
                kern::ger(1.0, t.nodes_[xid].value->data(), m, g.data(), n,
                          t.grad_buf(wid).data());
            }
            if (t.nodes_[xid].requires_grad) {
                kern::gemv_acc(t.nodes_[wid].value->data(), m, n, g.data(),
                               t.grad_buf(xid).data());
            }
        };
    }
    return v;
}

Var Tape::add(Var a, Var b) {
    const Tensor& av = value(a);
    const Tensor& bv = value(b);
    require_same_shape("add", av, bv);
    Tensor out = Tensor::zeros(av.shape());
    kern::add(av.data(), bv.data(), out.data(), av.size());

    const bool needs = node(a).requires_grad || node(b).requires_grad;
    const std::uint32_t aid = a.id, bid = b.id;
    Var v = make_op("add", std::move(out), needs, nullptr);
    if (needs) {
        const std::uint32_t self = v.id;
        nodes_[self].backprop = [self, aid, bid](Tape& t) {
            const Tensor& g = t.nodes_[self].grad;
            if (t.nodes_[aid].requires_grad) {
                kern::axpy(1.0, g.data(), t.grad_buf(aid).data(), g.size());
            }
            if (t.nodes_[bid].requires_grad) {
                kern::axpy(1.0, g.data(), t.grad_buf(bid).data(), g.size());
            }
        };
    }
    return v;
}

Var Tape::sub(Var a, Var b) {
    const Tensor& av = value(a);
    const Tensor& bv = value(b);
    require_same_shape("sub", av, bv);
    Tensor out = Tensor::zeros(av.shape());
    kern::sub(av.data(), bv.data(), out.data(), av.size());

    const bool needs = node(a).requires_grad || node(b).requires_grad;
    const std::uint32_t aid = a.id, bid = b.id;
    Var v = make_op("sub", std::move(out), needs, nullptr);
    if (needs) {
        const std::uint32_t self = v.id;
        nodes_[self].backprop = [self, aid, bid](Tape& t) {
            const Tensor& g = t.nodes_[self].grad;
            if (t.nodes_[aid].requires_grad) {
                kern::axpy(1.0, g.data(), t.grad_buf(aid).data(), g.size());
            }
            if (t.nodes_[bid].requires_grad) {
                kern::axpy(-1.0, g.data(), t.grad_buf(bid).data(), g.size());
            }
        };
    }
    return v;
}

Var Tape::mul(Var a, Var b) {
    const Tensor& av = value(a);
    const Tensor& bv = value(b);
    require_same_shape("mul", av, bv);
    Tensor out = Tensor::zeros(av.shape());
    kern::mul(av.data(), bv.data(), out.data(), av.size());

    const bool needs = node(a).requires_grad || node(b).requires_grad;
    const std::uint32_t aid = a.id, bid = b.id;
    Var v = make_op("mul", std::move(out), needs, nullptr);
    if (needs) {
        const std::uint32_t self = v.id;
        nodes_[self].backprop = [self, aid, bid](Tape& t) {
            const Tensor& g = t.nodes_[self].grad;
            const std::size_t n = g.size();
            // read both parent values before writing: a and b may alias
            if (t.nodes_[aid].requires_grad) {
                const double* bd = t.nodes_[bid].value->data();
                double* da = t.grad_buf(aid).data();
                for (std::size_t i = 0; i < n; ++i) da[i] += g[i] * bd[i];
            }
            if (t.nodes_[bid].requires_grad) {
                const double* ad = t.nodes_[aid].value->data();
                double* db = t.grad_buf(bid).data();
                for (std::size_t i = 0; i < n; ++i) db[i] += g[i] * ad[i];
            }
        };
    }
    return v;
}

Var Tape::scale(Var a, double c) {
    const Tensor& av = value(a);
    Tensor out = av;
    kern::scal(c, out.data(), out.size());

    const bool needs = node(a).requires_grad;
    const std::uint32_t aid = a.id;
    Var v = make_op("scale", std::move(out), needs, nullptr);
    if (needs) {
        const std::uint32_t self = v.id;
        nodes_[self].backprop = [self, aid, c](Tape& t) {
            const Tensor& g = t.nodes_[self].grad;
            kern::axpy(c, g.data(), t.grad_buf(aid).data(), g.size());
        };
    }
    return v;
}

Var Tape::tanh(Var a) {
    const Tensor& av = value(a);
    Tensor out = Tensor::zeros(av.shape());
    kern::vtanh(av.data(), out.data(), av.size());

    const bool needs = node(a).requires_grad;
    const std::uint32_t aid = a.id;
    Var v = make_op("tanh", std::move(out), needs, nullptr);
    if (needs) {
        const std::uint32_t self = v.id;
        nodes_[self].backprop = [self, aid](Tape& t) {
            const Tensor& g = t.nodes_[self].grad;
            const Tensor& y = *t.nodes_[self].value;
            double* da = t.grad_buf(aid).data();
            for (std::size_t i = 0; i < g.size(); ++i) da[i] += g[i] * (1.0 - y[i] * y[i]);
        };
    }
    return v;
}

Var Tape::sigmoid(Var a) {
    const Tensor& av = value(a);
    Tensor out = Tensor::zeros(av.shape());
    kern::vsigmoid(av.data(), out.data(), av.size());

    const bool needs = node(a).requires_grad;
    const std::uint32_t aid = a.id;
    Var v = make_op("sigmoid", std::move(out), needs, nullptr);
    if (needs) {
        const std::uint32_t self = v.id;
        nodes_[self].backprop = [self, aid](Tape& t) {
            const Tensor& g = t.nodes_[self].grad;
            const Tensor& y = *t.nodes_[self].value;
            double* da = t.grad_buf(aid).data();
            for (std::size_t i = 0; i < g.size(); ++i) da[i] += g[i] * y[i] * (1.0 - y[i]);
        };
    }
    return v;
}

Var Tape::softmax(Var a) {
    const Tensor& av = value(a);
    require_vector("softmax", av);
    if (av.size() == 0) shape_error("softmax", "empty input");
    const std::size_t n = av.size();
    Tensor shifted = Tensor::zeros({n});
    double mx = av[0];
    for (std::size_t i = 1; i < n; ++i) mx = std::max(mx, av[i]);
    for (std::size_t i = 0; i < n; ++i) shifted[i] = av[i] - mx;
    Tensor out = Tensor::zeros({n});
    kern::vexp(shifted.data(), out.data(), n);
    const double total = kern::sum(out.data(), n);
    kern::scal(1.0 / total, out.data(), n);

    const bool needs = node(a).requires_grad;
    const std::uint32_t aid = a.id;
    Var v = make_op("softmax", std::move(out), needs, nullptr);
    if (needs) {
        const std::uint32_t self = v.id;
        nodes_[self].backprop = [self, aid](Tape& t) {
            const Tensor& g = t.nodes_[self].grad;
            const Tensor& y = *t.nodes_[self].value;
            const double inner = kern::dot(g.data(), y.data(), g.size());
            double* da = t.grad_buf(aid).data();
            for (std::size_t i = 0; i < g.size(); ++i) da[i] += y[i] * (g[i] - inner);
        };
    }
    return v;
}

Var Tape::dot(Var a, Var b) {
    const Tensor& av = value(a);
    const Tensor& bv = value(b);
    require_vector("dot", av);
    require_same_shape("dot", av, bv);
    Tensor out = Tensor::scalar(kern::dot(av.data(), bv.data(), av.size()));

    const bool needs = node(a).requires_grad || node(b).requires_grad;
    const std::uint32_t aid = a.id, bid = b.id;
    Var v = make_op("dot", std::move(out), needs, nullptr);
    if (needs) {
        const std::uint32_t self = v.id;
        nodes_[self].backprop = [self, aid, bid](Tape& t) {
            const double g0 = t.nodes_[self].grad[0];
            const std::size_t n = t.nodes_[aid].value->size();
            if (t.nodes_[aid].requires_grad) {
                kern::axpy(g0, t.nodes_[bid].value->data(), t.grad_buf(aid).data(), n);
            }
            if (t.nodes_[bid].requires_grad) {
                kern::axpy(g0, t.nodes_[aid].value->data(), t.grad_buf(bid).data(), n);
            }
        };
    }
    return v;
}

Var Tape::sum(Var a) {
    const Tensor& av = value(a);
    Tensor out = Tensor::scalar(kern::sum(av.data(), av.size()));

    const bool needs = node(a).requires_grad;
    const std::uint32_t aid = a.id;
    Var v = make_op("sum", std::move(out), needs, nullptr);
    if (needs) {
        const std::uint32_t self = v.id;
        nodes_[self].backprop = [self, aid](Tape& t) {
            const double g0 = t.nodes_[self].grad[0];
            Tensor& da = t.grad_buf(aid);
            for (std::size_t i = 0; i < da.size(); ++i) da[i] += g0;
        };
    }
    return v;
}

Var Tape::concat(Var a, Var b) {
    const Tensor& av = value(a);
    const Tensor& bv = value(b);
    require_vector("concat", av);
    require_vector("concat", bv);
    const std::size_t na = av.size(), nb = bv.size();
    Tensor out = Tensor::zeros({na + nb});
    for (std::size_t i = 0; i < na; ++i) out[i] = av[i];
    for (std::size_t i = 0; i < nb; ++i) out[na + i] = bv[i];

    const bool needs = node(a).requires_grad || node(b).requires_grad;
    const std::uint32_t aid = a.id, bid = b.id;
    Var v = make_op("concat", std::move(out), needs, nullptr);
    if (needs) {
        const std::uint32_t self = v.id;
        nodes_[self].backprop = [self, aid, bid, na, nb](Tape& t) {
            const Tensor& g = t.nodes_[self].grad;
            if (t.nodes_[aid].requires_grad) {
                kern::axpy(1.0, g.data(), t.grad_buf(aid).data(), na);
            }
            if (t.nodes_[bid].requires_grad) {
                kern::axpy(1.0, g.data() + na, t.grad_buf(bid).data(), nb);
            }
        };
    }
    return v;
}

Var Tape::slice(Var a, std::size_t offset, std::size_t len) {
    const Tensor& av = value(a);
    require_vector("slice", av);
    if (offset + len > av.size()) {
        shape_error("slice", "range [" + std::to_string(offset) + "," +
                                 std::to_string(offset + len) + ") exceeds length " +
                                 std::to_string(av.size()));
    }
    Tensor out = Tensor::zeros({len});
    for (std::size_t i = 0; i < len; ++i) out[i] = av[offset + i];

    const bool needs = node(a).requires_grad;
    const std::uint32_t aid = a.id;
    Var v = make_op("slice", std::move(out), needs, nullptr);
    if (needs) {
        const std::uint32_t self = v.id;
        nodes_[self].backprop = [self, aid, offset, len](Tape& t) {
            const Tensor& g = t.nodes_[self].grad;
            kern::axpy(1.0, g.data(), t.grad_buf(aid).data() + offset, len);
        };
    }
    return v;
}

Var Tape::stack(const std::vector<Var>& scalars) {
    if (scalars.empty()) shape_error("stack", "no inputs");
    Tensor out = Tensor::zeros({scalars.size()});
    bool needs = false;
    for (std::size_t i = 0; i < scalars.size(); ++i) {
        const Tensor& sv = value(scalars[i]);
        if (sv.size() != 1) shape_error("stack", "input " + std::to_string(i) + " not scalar");
        out[i] = sv[0];
        needs = needs || node(scalars[i]).requires_grad;
    }
    std::vector<std::uint32_t> ids(scalars.size());
    for (std::size_t i = 0; i < scalars.size(); ++i) ids[i] = scalars[i].id;
    Var v = make_op("stack", std::move(out), needs, nullptr);
    if (needs) {
        const std::uint32_t self = v.id;
        nodes_[self].backprop = [self, ids](Tape& t) {
            const Tensor& g = t.nodes_[self].grad;
            for (std::size_t i = 0; i < ids.size(); ++i) {
                if (t.nodes_[ids[i]].requires_grad) t.grad_buf(ids[i])[0] += g[i];
            }
        };
    }
    return v;
}

Var Tape::weighted_sum(Var weights, const std::vector<Var>& vectors) {
    const Tensor& wv = value(weights);
    require_vector("weighted_sum", wv);
    if (wv.size() != vectors.size()) {
        shape_error("weighted_sum", std::to_string(wv.size()) + " weights vs " +
                                        std::to_string(vectors.size()) + " vectors");
    }
    if (vectors.empty()) shape_error("weighted_sum", "no vectors");
    const std::size_t dim = value(vectors[0]).size();
    Tensor out = Tensor::zeros({dim});
    bool needs = node(weights).requires_grad;
    for (std::size_t i = 0; i < vectors.size(); ++i) {
        const Tensor& vi = value(vectors[i]);
        require_same_shape("weighted_sum", value(vectors[0]), vi);
        kern::axpy(wv[i], vi.data(), out.data(), dim);
        needs = needs || node(vectors[i]).requires_grad;
    }
    std::vector<std::uint32_t> ids(vectors.size());
    for (std::size_t i = 0; i < vectors.size(); ++i) ids[i] = vectors[i].id;
    const std::uint32_t wid = weights.id;
    Var v = make_op("weighted_sum", std::move(out), needs, nullptr);
    if (needs) {
        const std::uint32_t self = v.id;
        nodes_[self].backprop = [self, wid, ids, dim](Tape& t) {
            const Tensor& g = t.nodes_[self].grad;
            const Tensor& w = *t.nodes_[wid].value;
            const bool want_w = t.nodes_[wid].requires_grad;
            for (std::size_t i = 0; i < ids.size(); ++i) {
                const Tensor& vi = *t.nodes_[ids[i]].value;
                if (want_w) {
                    t.grad_buf(wid)[i] += kern::dot(g.data(), vi.data(), dim);
                }
                if (t.nodes_[ids[i]].requires_grad) {
                    kern::axpy(w[i], g.data(), t.grad_buf(ids[i]).data(), dim);
                }
            }
        };
    }
    return v;
}

Var Tape::dropout(Var a, double rate, bool train_mode, RunRng* rng) {
    if (rate < 0.0 || rate >= 1.0) {
        throw std::invalid_argument("autodiff: dropout rate must be in [0,1), got " +
                                    std::to_string(rate));
    }
    if (!train_mode || rate == 0.0) return a;  // identity, no draws
    if (rng == nullptr) {
        throw std::invalid_argument("autodiff: dropout in train mode requires an rng");
    }

    const Tensor& av = value(a);
    const double keep_scale = 1.0 / (1.0 - rate);
    Tensor mask = Tensor::zeros(av.shape());
    for (std::size_t i = 0; i < mask.size(); ++i) {
        mask[i] = rng->next_uniform() < rate ? 0.0 : keep_scale;
    }
    Tensor out = Tensor::zeros(av.shape());
    kern::mul(av.data(), mask.data(), out.data(), av.size());

    const bool needs = node(a).requires_grad;
    const std::uint32_t aid = a.id;
    Var v = make_op("dropout", std::move(out), needs, nullptr);
    if (needs) {
        const std::uint32_t self = v.id;
        nodes_[self].backprop = [self, aid, mask = std::move(mask)](Tape& t) {
            const Tensor& g = t.nodes_[self].grad;
            double* da = t.grad_buf(aid).data();
            for (std::size_t i = 0; i < g.size(); ++i) da[i] += g[i] * mask[i];
        };
    }
    return v;
}

void Tape::backward(Var root) { backward(root, Tensor::scalar(1.0)); }

void Tape::backward(Var root, const Tensor& seed) {
    if (nodes_.empty()) throw std::logic_error("autodiff: backward on empty tape");
    Node& r = node(root);
    if (!seed.same_shape(*r.value)) {
        shape_error("backward", "seed shape " + seed.shape_string() + " vs root " +
                                    r.value->shape_string());
    }
    // fresh internal gradient buffers; parameter sinks are left to accumulate
    for (auto& n : nodes_) {
        if (n.grad_sink) continue;
        if (!n.grad.same_shape(*n.value)) {
            n.grad = Tensor::zeros(n.value->shape());
        } else {
            n.grad.fill(0.0);
        }
    }
    kern::axpy(1.0, seed.data(), grad_buf(root.id).data(), seed.size());
    for (std::size_t i = root.id + 1; i-- > 0;) {
        Node& n = nodes_[i];
        if (n.requires_grad && n.backprop) n.backprop(*this);
    }
}

}  // namespace finsent::ad
