#include "pfoa/nn/tensor.hpp"

#include <atomic>
#include <cmath>
#include <unordered_set>

#include "pfoa/common/error.hpp"

namespace pfoa::nn {

namespace {
std::atomic<bool> g_debug_checks{false};

void check_finite(const std::vector<double>& v, const char* what) {
    for (double x : v)
        if (!std::isfinite(x))
            throw Error(std::string("non-finite value in ") + what);
}
}  // namespace

void set_debug_checks(bool on) { g_debug_checks.store(on); }
bool debug_checks() { return g_debug_checks.load(); }

std::string shape_str(const Shape& s) {
    std::string out = "[";
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (i) out += "x";
        out += std::to_string(s[i]);
    }
    return out + "]";
}

std::size_t shape_numel(const Shape& s) {
    std::size_t n = 1;
    for (int d : s) {
        if (d <= 0) throw ShapeError("non-positive dimension in shape " + shape_str(s));
        n *= static_cast<std::size_t>(d);
    }
    return n;
}

Tensor Tensor::from_values(Shape shape, std::vector<double> values, bool requires_grad) {
    if (shape_numel(shape) != values.size())
        throw ShapeError("value count " + std::to_string(values.size()) +
                         " does not match shape " + shape_str(shape));
    if (debug_checks()) check_finite(values, "tensor values");
    Tensor t;
    t.node_ = std::make_shared<TensorNode>();
    t.node_->shape = std::move(shape);
    t.node_->values = std::move(values);
    t.node_->requires_grad = requires_grad;
    return t;
}

Tensor Tensor::zeros(Shape shape, bool requires_grad) {
    const std::size_t n = shape_numel(shape);
    return from_values(std::move(shape), std::vector<double>(n, 0.0), requires_grad);
}

Tensor Tensor::scalar(double v) { return from_values({1}, {v}); }

const Shape& Tensor::shape() const { return node_->shape; }
std::size_t Tensor::numel() const { return node_->values.size(); }
bool Tensor::requires_grad() const { return node_->requires_grad; }
const std::vector<double>& Tensor::values() const { return node_->values; }
std::vector<double>& Tensor::mutable_values() { return node_->values; }

const std::vector<double>& Tensor::grad() const { return node_->grad; }

void Tensor::zero_grad() {
    if (node_) node_->grad.assign(node_->values.size(), 0.0);
}

double Tensor::item() const {
    if (numel() != 1)
        throw ShapeError("item() on tensor of shape " + shape_str(shape()));
    return node_->values[0];
}

void TensorNode::ensure_grad() {
    if (grad.size() != values.size()) grad.assign(values.size(), 0.0);
}

void TensorNode::accumulate_grad(const std::vector<double>& delta) {
    ensure_grad();
    for (std::size_t i = 0; i < grad.size(); ++i) grad[i] += delta[i];
}

Tensor make_op_result(Shape shape, std::vector<double> values, std::vector<Tensor> parents,
                      std::function<void(TensorNode&)> backward_fn) {
    if (debug_checks()) check_finite(values, "operator output");
    bool any_grad = false;
    for (const Tensor& p : parents) any_grad = any_grad || p.requires_grad();
    Tensor t = Tensor::from_values(std::move(shape), std::move(values), any_grad);
    if (any_grad) {
        // Inference graphs keep no parent links, so intermediates free eagerly.
        t.node()->parents = std::move(parents);
        t.node()->backward_fn = std::move(backward_fn);
    }
    return t;
}

void backward(const Tensor& loss) {
    if (!loss.defined()) throw Error("backward() on an undefined tensor");
    if (loss.numel() != 1)
        throw ShapeError("backward() requires a scalar loss, got shape " +
                         shape_str(loss.shape()));
    TensorNode* root = loss.node();
    if (root->backward_done)
        throw Error("backward() called twice on the same loss; rebuild the graph first");
    root->backward_done = true;

    // Iterative post-order DFS; reverse gives a valid topological order.
    std::vector<TensorNode*> topo;
    std::unordered_set<TensorNode*> seen;
    struct Frame {
        TensorNode* node;
        std::size_t next_parent;
    };
    std::vector<Frame> stack{{root, 0}};
    seen.insert(root);
    while (!stack.empty()) {
        Frame& f = stack.back();
        if (f.next_parent < f.node->parents.size()) {
            TensorNode* p = f.node->parents[f.next_parent++].node();
            if (p->requires_grad && seen.insert(p).second) stack.push_back({p, 0});
        } else {
            topo.push_back(f.node);
            stack.pop_back();
        }
    }

    root->ensure_grad();
    root->grad[0] = 1.0;
    for (auto it = topo.rbegin(); it != topo.rend(); ++it) {
        TensorNode* node = *it;
        if (node->backward_fn) {
            node->ensure_grad();
            node->backward_fn(*node);
            if (debug_checks()) check_finite(node->grad, "gradient");
        }
    }
}

Parameter::Parameter(std::string param_name, Shape shape, std::vector<double> values)
    : tensor(Tensor::from_values(std::move(shape), std::move(values), /*requires_grad=*/true)),
      momentum(tensor.numel(), 0.0),
      name(std::move(param_name)) {}

void sgd_momentum_step(std::vector<Parameter*>& params, double lr, double momentum) {
    for (Parameter* p : params) {
        auto& values = p->tensor.mutable_values();
        const auto& grad = p->tensor.grad();
        if (grad.empty()) continue;  // parameter not touched by this graph
        if (grad.size() != values.size())
            throw ShapeError("gradient size mismatch for parameter " + p->name);
        for (std::size_t i = 0; i < values.size(); ++i) {
            const double g = grad[i];
            if (!std::isfinite(g))
                throw Error("non-finite gradient in parameter " + p->name);
            p->momentum[i] = momentum * p->momentum[i] + g;
            values[i] -= lr * p->momentum[i];
        }
    }
}

}  // namespace pfoa::nn
