#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

namespace pfoa::nn {

using Shape = std::vector<int>;

std::string shape_str(const Shape& s);
std::size_t shape_numel(const Shape& s);

struct TensorNode;

/// Handle to a node of the dynamically built computation graph. Copies are
/// shallow; the graph is a DAG of shared nodes torn down by refcount once the
/// last handle (and the loss that captured it) goes away.
class Tensor {
public:
    Tensor() = default;

    static Tensor from_values(Shape shape, std::vector<double> values,
                              bool requires_grad = false);
    static Tensor zeros(Shape shape, bool requires_grad = false);
    static Tensor scalar(double v);

    bool defined() const { return node_ != nullptr; }
    const Shape& shape() const;
    std::size_t numel() const;
    bool requires_grad() const;

    const std::vector<double>& values() const;
    std::vector<double>& mutable_values();

    /// Gradient accumulated by the last backward() pass(es). Empty until then.
    const std::vector<double>& grad() const;
    void zero_grad();

    double item() const;  // single-element tensors only

    TensorNode* node() const { return node_.get(); }

private:
    friend Tensor make_op_result(Shape shape, std::vector<double> values,
                                 std::vector<Tensor> parents,
                                 std::function<void(TensorNode&)> backward_fn);
    std::shared_ptr<TensorNode> node_;
};

struct TensorNode {
    Shape shape;
    std::vector<double> values;
    std::vector<double> grad;  // sized on first accumulation
    bool requires_grad = false;
    bool backward_done = false;  // set on the loss node after backward()
    std::vector<Tensor> parents;
    std::function<void(TensorNode&)> backward_fn;

    void accumulate_grad(const std::vector<double>& delta);
    void ensure_grad();
};

/// Internal factory used by the operator implementations.
Tensor make_op_result(Shape shape, std::vector<double> values, std::vector<Tensor> parents,
                      std::function<void(TensorNode&)> backward_fn);

/// Reverse-mode sweep from a scalar loss. Gradients accumulate into every
/// reachable tensor with requires_grad. Running backward twice on the same
/// loss without rebuilding the graph is an error.
void backward(const Tensor& loss);

/// When enabled, operator results and gradients are scanned for NaN/Inf and
/// a RuntimeError is raised at the first offender. Off by default.
void set_debug_checks(bool on);
bool debug_checks();

/// Trainable tensor plus its SGD momentum buffer.
struct Parameter {
    Tensor tensor;
    std::vector<double> momentum;
    std::string name;

    Parameter() = default;
    Parameter(std::string param_name, Shape shape, std::vector<double> values);
    std::size_t numel() const { return tensor.numel(); }
};

/// v <- momentum * v + grad;  p <- p - lr * v. Parameters with no gradient
/// yet are treated as zero-gradient. Non-finite gradients are an error.
void sgd_momentum_step(std::vector<Parameter*>& params, double lr, double momentum);

}  // namespace pfoa::nn
