#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <functional>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

namespace sbir {

using Array = Eigen::ArrayXd;
using Matrix = Eigen::MatrixXd;

using Shape = std::vector<int>;

inline std::int64_t shape_numel(const Shape& shape) {
    std::int64_t n = 1;
    for (int d : shape) {
        if (d <= 0) throw std::invalid_argument("tensor dimensions must be positive");
        n *= d;
    }
    return n;
}

struct TensorNode;
using NodePtr = std::shared_ptr<TensorNode>;

/// One node of the recorded computation. Values are stored flat in
/// row-major order; `backward` scatters this node's gradient into its
/// parents' gradient buffers.
struct TensorNode {
    Shape shape;
    Array values;
    Array grad;
    bool requires_grad = false;
    bool grad_alive = false;  // grad buffer holds accumulated values
    std::uint64_t id = 0;
    std::vector<NodePtr> parents;
    std::function<void(TensorNode&)> backward;

    std::int64_t numel() const { return values.size(); }
    bool is_leaf() const { return parents.empty(); }

    void ensure_grad() {
        if (!grad_alive) {
            grad = Array::Zero(values.size());
            grad_alive = true;
        }
    }
};

std::uint64_t next_node_id();

/// Shared handle over a computation node. Copying a Tensor aliases the
/// same node; ops in ops.hpp build fresh nodes wired to their inputs.
class Tensor {
public:
    Tensor() = default;
    explicit Tensor(NodePtr node) : node_(std::move(node)) {}

    static Tensor zeros(Shape shape, bool requires_grad = false);
    static Tensor full(Shape shape, double value, bool requires_grad = false);
    static Tensor from_values(Shape shape, std::vector<double> values,
                              bool requires_grad = false);
    static Tensor from_array(Shape shape, Array values, bool requires_grad = false);
    static Tensor scalar(double value, bool requires_grad = false);

    bool defined() const { return node_ != nullptr; }
    const Shape& shape() const { return node_->shape; }
    int dim(int i) const { return node_->shape.at(static_cast<size_t>(i)); }
    int rank() const { return static_cast<int>(node_->shape.size()); }
    std::int64_t numel() const { return node_->numel(); }

    const Array& values() const { return node_->values; }
    Array& mutable_values() { return node_->values; }
    double value_at(std::int64_t i) const { return node_->values(i); }
    double scalar_value() const;

    bool requires_grad() const { return node_->requires_grad; }
    bool has_grad() const { return node_->grad_alive; }
    const Array& grad() const;
    void zero_grad();

    NodePtr node() const { return node_; }

private:
    NodePtr node_;
};

/// The reverse pass schedule: nodes of the graph reachable from a root,
/// in topological order (every node's parents precede it).
class Tape {
public:
    static Tape build(const Tensor& root);

    const std::vector<TensorNode*>& order() const { return order_; }

private:
    std::vector<NodePtr> owned_;
    std::vector<TensorNode*> order_;
};

/// Reverse-mode sweep from a scalar loss. Gradients of all reachable
/// requires_grad tensors are overwritten (not accumulated across calls);
/// fan-out within one graph accumulates additively.
void backward(const Tensor& loss);

void check_finite(const Array& a, const char* what);

}  // namespace sbir
