#include "shapeshot/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <unordered_set>

#include "shapeshot/errors.hpp"

namespace shapeshot {

namespace {
thread_local bool g_grad_mode = true;
}

std::size_t shape_numel(const Shape& shape) {
    std::size_t n = 1;
    for (auto d : shape) n *= d;
    return n;
}

std::string shape_to_string(const Shape& shape) {
    std::ostringstream os;
    os << '[';
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i) os << ',';
        os << shape[i];
    }
    os << ']';
    return os.str();
}

void check_finite(std::span<const double> values, const char* what) {
    // v * 0 is NaN exactly when v is NaN or infinite; four lanes let the
    // compiler vectorize without reassociating.
    double acc[4] = {0.0, 0.0, 0.0, 0.0};
    const std::size_t n = values.size();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4)
        for (std::size_t l = 0; l < 4; ++l) acc[l] += values[i + l] * 0.0;
    for (; i < n; ++i) acc[0] += values[i] * 0.0;
    if (acc[0] + acc[1] + acc[2] + acc[3] != 0.0) {
        throw NumericError(std::string("non-finite value produced by ") + what);
    }
}

std::vector<double>& detail::Node::grad_buffer() {
    if (grad.empty()) grad.assign(values.size(), 0.0);
    return grad;
}

Tensor Tensor::zeros(Shape shape, bool requires_grad) { return full(std::move(shape), 0.0, requires_grad); }

Tensor Tensor::full(Shape shape, double value, bool requires_grad) {
    const auto n = shape_numel(shape);
    return from(std::move(shape), std::vector<double>(n, value), requires_grad);
}

Tensor Tensor::from(Shape shape, std::vector<double> values, bool requires_grad) {
    for (auto d : shape) {
        if (d == 0) throw DimensionError("tensor dimensions must be positive, got " + shape_to_string(shape));
    }
    if (shape_numel(shape) != values.size()) {
        throw DimensionError("shape " + shape_to_string(shape) + " does not match " + std::to_string(values.size()) +
                             " values");
    }
    check_finite(values, "tensor construction");
    auto node = std::make_shared<detail::Node>();
    node->shape = std::move(shape);
    node->values = std::move(values);
    node->requires_grad = requires_grad;
    return Tensor(std::move(node));
}

Tensor Tensor::scalar(double value, bool requires_grad) { return from({1}, {value}, requires_grad); }

Tensor Tensor::wrap(std::shared_ptr<detail::Node> node) { return Tensor(std::move(node)); }

const Shape& Tensor::shape() const { return node_->shape; }

std::size_t Tensor::dim(std::size_t axis) const {
    if (axis >= rank()) throw DimensionError("axis out of range for shape " + shape_to_string(shape()));
    return shape()[axis];
}

std::size_t Tensor::numel() const { return node_->values.size(); }

std::span<const double> Tensor::values() const { return node_->values; }

std::span<double> Tensor::mutable_values() { return node_->values; }

double Tensor::item() const {
    if (numel() != 1) throw ContractError("item() requires a single-element tensor, shape is " + shape_to_string(shape()));
    return node_->values[0];
}

bool Tensor::requires_grad() const { return node_->requires_grad; }

void Tensor::set_requires_grad(bool flag) { node_->requires_grad = flag; }

bool Tensor::has_grad() const { return !node_->grad.empty(); }

std::span<const double> Tensor::grad() const { return node_->grad; }

std::span<double> Tensor::mutable_grad() { return node_->grad_buffer(); }

void Tensor::zero_grad() {
    if (!node_->grad.empty()) std::fill(node_->grad.begin(), node_->grad.end(), 0.0);
}

Tensor Tensor::detach() const {
    auto node = std::make_shared<detail::Node>();
    node->shape = node_->shape;
    node->values = node_->values;
    return Tensor(std::move(node));
}

std::vector<detail::Node*> reverse_topological_order(detail::Node* root) {
    // Iterative post-order DFS; reversing the post-order gives an order in
    // which every node precedes all of its parents.
    std::vector<detail::Node*> post;
    std::unordered_set<detail::Node*> visited;
    std::vector<std::pair<detail::Node*, std::size_t>> stack;
    stack.emplace_back(root, 0);
    visited.insert(root);
    while (!stack.empty()) {
        auto& [node, next] = stack.back();
        if (next < node->parents.size()) {
            detail::Node* parent = node->parents[next++].get();
            if (parent->requires_grad && visited.insert(parent).second) stack.emplace_back(parent, 0);
        } else {
            post.push_back(node);
            stack.pop_back();
        }
    }
    return {post.rbegin(), post.rend()};
}

void Tensor::backward() const {
    if (numel() != 1) {
        throw ContractError("backward() requires a scalar loss, got shape " + shape_to_string(shape()));
    }
    if (!requires_grad()) throw ContractError("backward() called on a tensor that does not require grad");

    const auto order = reverse_topological_order(node_.get());
    // Interior gradients are per-pass scratch; only leaves accumulate.
    for (auto* node : order) {
        if (!node->is_leaf()) std::vector<double>().swap(node->grad);
    }
    node_->grad_buffer()[0] += 1.0;
    for (auto* node : order) {
        // Empty grad: nothing downstream of this node reached the loss.
        if (node->is_leaf() || node->grad.empty()) continue;
        node->backward(*node);
    }
    // Interior grads only feed the leaves, so checking the leaves suffices.
    for (auto* node : order) {
        if (node->is_leaf()) check_finite(node->grad, "backward pass");
    }
}

bool grad_mode_enabled() { return g_grad_mode; }

NoGradGuard::NoGradGuard() : previous_(g_grad_mode) { g_grad_mode = false; }

NoGradGuard::~NoGradGuard() { g_grad_mode = previous_; }

Tensor make_result(Shape shape, std::vector<double> values, std::vector<Tensor> parents,
                   std::function<void(detail::Node&)> backward, const char* op_name, FiniteCheck check) {
    if (check == FiniteCheck::run) check_finite(values, op_name);
    auto node = std::make_shared<detail::Node>();
    node->shape = std::move(shape);
    node->values = std::move(values);
    bool needs_grad = false;
    if (g_grad_mode) {
        for (const auto& p : parents) needs_grad = needs_grad || p.requires_grad();
    }
    if (needs_grad) {
        node->requires_grad = true;
        node->parents.reserve(parents.size());
        for (const auto& p : parents) node->parents.push_back(p.node());
        node->backward = std::move(backward);
    }
    return Tensor::wrap(std::move(node));
}

}  // namespace shapeshot
