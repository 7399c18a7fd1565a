#pragma once

// Dense double-precision tensors with reverse-mode automatic differentiation.
//
// A Tensor is a handle: copies share the same storage and graph node, the way
// parameters are shared between a model and its optimizer. Operations on
// tensors that require gradients record a backward rule on the result; the
// graph is the DAG reachable through those records and is traversed in reverse
// topological order by backward().
//
// Shapes never broadcast. Every operation checks operand shapes and throws
// DimensionError on mismatch, and throws NumericError if it would produce a
// non-finite value.

#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace shapeshot {

using Shape = std::vector<std::size_t>;

std::size_t shape_numel(const Shape& shape);
std::string shape_to_string(const Shape& shape);

namespace detail {

struct Node {
    Shape shape;
    std::vector<double> values;
    std::vector<double> grad;  // empty until first accumulation
    bool requires_grad = false;
    std::vector<std::shared_ptr<Node>> parents;
    // Reads this->grad and accumulates into the parents' grads.
    std::function<void(Node&)> backward;

    bool is_leaf() const { return !backward; }
    std::vector<double>& grad_buffer();
};

}  // namespace detail

class Tensor {
public:
    Tensor() = default;

    static Tensor zeros(Shape shape, bool requires_grad = false);
    static Tensor full(Shape shape, double value, bool requires_grad = false);
    static Tensor from(Shape shape, std::vector<double> values, bool requires_grad = false);
    static Tensor scalar(double value, bool requires_grad = false);

    bool defined() const { return node_ != nullptr; }
    const Shape& shape() const;
    std::size_t rank() const { return shape().size(); }
    std::size_t dim(std::size_t axis) const;
    std::size_t numel() const;

    std::span<const double> values() const;
    // Direct write access for leaves (parameter updates, initialization).
    std::span<double> mutable_values();
    double item() const;
    double at(std::size_t flat_index) const { return values()[flat_index]; }

    bool requires_grad() const;
    void set_requires_grad(bool flag);
    bool has_grad() const;
    std::span<const double> grad() const;
    std::span<double> mutable_grad();
    void zero_grad();

    // Populates d(this)/d(t) in every requires_grad tensor t reachable from
    // this scalar. Leaf gradients accumulate across calls.
    void backward() const;

    // Same values, no graph attachment.
    Tensor detach() const;

    const std::shared_ptr<detail::Node>& node() const { return node_; }
    static Tensor wrap(std::shared_ptr<detail::Node> node);

private:
    explicit Tensor(std::shared_ptr<detail::Node> node) : node_(std::move(node)) {}
    std::shared_ptr<detail::Node> node_;
};

// Gradient recording is on by default; while a NoGradGuard is alive on a
// thread, operations on that thread produce detached results.
bool grad_mode_enabled();

class NoGradGuard {
public:
    NoGradGuard();
    ~NoGradGuard();
    NoGradGuard(const NoGradGuard&) = delete;
    NoGradGuard& operator=(const NoGradGuard&) = delete;

private:
    bool previous_;
};

enum class FiniteCheck { run, skip };

// Builds an op result. When recording is enabled and any parent requires
// grad, the result is attached to the graph with the given backward rule.
// Ops whose outputs are selections or convex combinations of finite inputs
// pass FiniteCheck::skip.
Tensor make_result(Shape shape, std::vector<double> values, std::vector<Tensor> parents,
                   std::function<void(detail::Node&)> backward, const char* op_name,
                   FiniteCheck check = FiniteCheck::run);

// Reverse topological order of the graph rooted at `root` (root first).
std::vector<detail::Node*> reverse_topological_order(detail::Node* root);

void check_finite(std::span<const double> values, const char* what);

}  // namespace shapeshot
