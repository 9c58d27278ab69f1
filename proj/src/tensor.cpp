#include "sbir/tensor.hpp"

#include <atomic>
#include <cmath>
#include <unordered_set>

namespace sbir {

std::uint64_t next_node_id() {
    static std::atomic<std::uint64_t> counter{0};
    return counter.fetch_add(1, std::memory_order_relaxed);
}

namespace {

NodePtr make_leaf(Shape shape, Array values, bool requires_grad) {
    auto node = std::make_shared<TensorNode>();
    node->shape = std::move(shape);
    node->values = std::move(values);
    node->requires_grad = requires_grad;
    node->id = next_node_id();
    return node;
}

}  // namespace

Tensor Tensor::zeros(Shape shape, bool requires_grad) {
    auto n = shape_numel(shape);
    return Tensor(make_leaf(std::move(shape), Array::Zero(n), requires_grad));
}

Tensor Tensor::full(Shape shape, double value, bool requires_grad) {
    auto n = shape_numel(shape);
    return Tensor(make_leaf(std::move(shape), Array::Constant(n, value), requires_grad));
}

Tensor Tensor::from_values(Shape shape, std::vector<double> values, bool requires_grad) {
    if (shape_numel(shape) != static_cast<std::int64_t>(values.size()))
        throw std::invalid_argument("value count does not match shape");
    Array a = Eigen::Map<const Array>(values.data(),
                                      static_cast<Eigen::Index>(values.size()));
    return Tensor(make_leaf(std::move(shape), std::move(a), requires_grad));
}

Tensor Tensor::from_array(Shape shape, Array values, bool requires_grad) {
    if (shape_numel(shape) != values.size())
        throw std::invalid_argument("value count does not match shape");
    return Tensor(make_leaf(std::move(shape), std::move(values), requires_grad));
}

Tensor Tensor::scalar(double value, bool requires_grad) {
    return from_array({1}, Array::Constant(1, value), requires_grad);
}

double Tensor::scalar_value() const {
    if (numel() != 1) throw std::logic_error("scalar_value on non-scalar tensor");
    return node_->values(0);
}

const Array& Tensor::grad() const {
    if (!node_->grad_alive) throw std::logic_error("gradient not computed");
    return node_->grad;
}

void Tensor::zero_grad() {
    node_->grad_alive = false;
    node_->grad.resize(0);
}

Tape Tape::build(const Tensor& root) {
    Tape tape;
    std::unordered_set<const TensorNode*> seen;
    // Iterative post-order DFS; parents end up before their consumers.
    std::vector<std::pair<NodePtr, size_t>> stack;
    stack.emplace_back(root.node(), 0);
    seen.insert(root.node().get());
    while (!stack.empty()) {
        auto& [node, next_child] = stack.back();
        if (next_child < node->parents.size()) {
            NodePtr child = node->parents[next_child++];
            if (seen.insert(child.get()).second) stack.emplace_back(std::move(child), 0);
        } else {
            tape.owned_.push_back(node);
            tape.order_.push_back(node.get());
            stack.pop_back();
        }
    }
    return tape;
}

void backward(const Tensor& loss) {
    if (loss.numel() != 1) throw std::invalid_argument("backward requires a scalar loss");
    Tape tape = Tape::build(loss);
    for (TensorNode* node : tape.order()) {
        node->grad = Array::Zero(node->values.size());
        node->grad_alive = true;
    }
    loss.node()->grad(0) = 1.0;
    const auto& order = tape.order();
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
        TensorNode* node = *it;
        if (node->backward) node->backward(*node);
    }
    // Interior nodes only carry gradients transiently.
    for (TensorNode* node : tape.order())
        if (!node->is_leaf() || !node->requires_grad) {
            node->grad_alive = false;
            node->grad.resize(0);
        }
}

void check_finite(const Array& a, const char* what) {
    if (!a.isFinite().all())
        throw std::runtime_error(std::string("non-finite values in ") + what);
}

}  // namespace sbir
