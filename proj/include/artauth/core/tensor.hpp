#pragma once

#include <functional>
#include <memory>
#include <span>
#include <string>
#include <unordered_set>
#include <utility>
#include <vector>

#include "artauth/common.hpp"

namespace artauth::core {

// Dense n-d tensor with reverse-mode gradient tracking. A Tensor is a cheap
// handle onto a shared node; the node doubles as the computation record
// (operation identity, input references, backward rule with its saved
// values captured in the closure). Leaves have no op. The graph built by the
// op library is acyclic by construction.
//
// float is the training precision; double instantiations drive the
// finite-difference verification mode.
template <typename T>
class Tensor {
public:
    struct Node;
    using NodePtr = std::shared_ptr<Node>;

    struct Node {
        Shape shape;
        std::shared_ptr<std::vector<T>> store;  // shared so reshape can alias
        std::vector<T> grad;                    // lazily sized to numel
        bool requires_grad = false;
        const char* op = nullptr;  // null for leaves
        std::vector<NodePtr> inputs;
        std::function<void(Node&)> backward;  // reads this->grad, accumulates into inputs

        std::int64_t numel() const { return shape_numel(shape); }
        T* data() { return store->data(); }
        const T* data() const { return store->data(); }
        void ensure_grad() {
            if (grad.empty()) grad.assign(static_cast<std::size_t>(numel()), T(0));
        }
    };

    Tensor() = default;

    static Tensor zeros(Shape shape, bool requires_grad = false) {
        return alloc(std::move(shape), T(0), requires_grad);
    }
    static Tensor full(Shape shape, T value, bool requires_grad = false) {
        return alloc(std::move(shape), value, requires_grad);
    }
    static Tensor from_data(Shape shape, std::vector<T> values, bool requires_grad = false) {
        if (shape_numel(shape) != static_cast<std::int64_t>(values.size()))
            throw ShapeError("tensor data length " + std::to_string(values.size()) +
                             " does not match shape " + shape_str(shape));
        Tensor t;
        t.node_ = std::make_shared<Node>();
        t.node_->shape = std::move(shape);
        t.node_->store = std::make_shared<std::vector<T>>(std::move(values));
        t.node_->requires_grad = requires_grad;
        return t;
    }
    static Tensor scalar(T value, bool requires_grad = false) {
        return from_data({1}, {value}, requires_grad);
    }

    // Used by the op library: fresh output node wired to its inputs.
    static Tensor result(Shape shape, const char* op, std::vector<Tensor> inputs) {
        Tensor t = alloc(std::move(shape), T(0), false);
        t.node_->op = op;
        bool rg = false;
        for (auto& in : inputs) {
            rg = rg || in.requires_grad();
            t.node_->inputs.push_back(in.node_);
        }
        t.node_->requires_grad = rg && grad_enabled();
        return t;
    }

    // Aliases the input storage under a new shape (same numel, contiguous).
    static Tensor alias(const Tensor& src, Shape shape, const char* op) {
        if (shape_numel(shape) != src.numel())
            throw ShapeError(std::string("reshape numel mismatch: ") +
                             shape_str(src.shape()) + " -> " + shape_str(shape));
        Tensor t;
        t.node_ = std::make_shared<Node>();
        t.node_->shape = std::move(shape);
        t.node_->store = src.node_->store;
        t.node_->op = op;
        t.node_->inputs.push_back(src.node_);
        t.node_->requires_grad = src.requires_grad() && grad_enabled();
        return t;
    }

    bool defined() const { return node_ != nullptr; }
    const Shape& shape() const { return node_->shape; }
    std::int64_t numel() const { return node_->numel(); }
    std::int64_t dim(std::size_t i) const { return node_->shape[i]; }
    std::size_t rank() const { return node_->shape.size(); }

    std::span<const T> data() const { return {node_->data(), static_cast<std::size_t>(numel())}; }
    std::span<T> mutable_data() { return {node_->data(), static_cast<std::size_t>(numel())}; }

    bool requires_grad() const { return node_->requires_grad; }
    void set_requires_grad(bool v) { node_->requires_grad = v; }
    bool has_grad() const { return !node_->grad.empty(); }
    std::span<const T> grad() const {
        node_->ensure_grad();
        return {node_->grad.data(), node_->grad.size()};
    }
    std::span<T> mutable_grad() {
        node_->ensure_grad();
        return {node_->grad.data(), node_->grad.size()};
    }
    void zero_grad() {
        if (!node_->grad.empty()) node_->grad.assign(node_->grad.size(), T(0));
    }

    T item() const {
        if (numel() != 1) throw UsageError("item() on non-scalar tensor " + shape_str(shape()));
        return node_->data()[0];
    }

    const char* op() const { return node_->op; }
    Node& node() const { return *node_; }
    const NodePtr& node_ptr() const { return node_; }
    void set_backward(std::function<void(Node&)> fn) { node_->backward = std::move(fn); }

    // Reverse-mode accumulation in topological order. Interior node gradients
    // are transient per pass; leaf gradients accumulate across repeated calls.
    void backward() const {
        if (numel() != 1)
            throw UsageError("backward() requires a scalar loss, got " + shape_str(shape()));
        if (!node_->requires_grad) return;
        std::vector<Node*> order;
        topo_sort(node_.get(), order);
        for (Node* n : order) {
            if (n->op != nullptr && !n->grad.empty()) n->grad.assign(n->grad.size(), T(0));
        }
        node_->ensure_grad();
        node_->grad[0] += T(1);
        for (auto it = order.rbegin(); it != order.rend(); ++it) {
            Node* n = *it;
            if (n->backward) n->backward(*n);
        }
    }

    // True while graph recording is on (thread local; NoGradGuard clears it).
    static bool grad_enabled();

private:
    static Tensor alloc(Shape shape, T value, bool requires_grad) {
        Tensor t;
        t.node_ = std::make_shared<Node>();
        const auto n = static_cast<std::size_t>(shape_numel(shape));
        t.node_->shape = std::move(shape);
        t.node_->store = std::make_shared<std::vector<T>>(n, value);
        t.node_->requires_grad = requires_grad;
        return t;
    }

    static void topo_sort(Node* root, std::vector<Node*>& order) {
        // Iterative post-order DFS over nodes that require grad.
        std::unordered_set<Node*> visited;
        std::vector<std::pair<Node*, std::size_t>> stack;
        stack.emplace_back(root, 0);
        visited.insert(root);
        while (!stack.empty()) {
            auto& [n, idx] = stack.back();
            if (idx < n->inputs.size()) {
                Node* child = n->inputs[idx++].get();
                if (child->requires_grad && !visited.count(child)) {
                    visited.insert(child);
                    stack.emplace_back(child, 0);
                }
            } else {
                order.push_back(n);
                stack.pop_back();
            }
        }
    }

    NodePtr node_;
};

namespace detail {
inline thread_local int no_grad_depth = 0;
}

template <typename T>
bool Tensor<T>::grad_enabled() {
    return detail::no_grad_depth == 0;
}

// Scoped switch that stops graph recording (evaluation passes).
struct NoGradGuard {
    NoGradGuard() { ++detail::no_grad_depth; }
    ~NoGradGuard() { --detail::no_grad_depth; }
    NoGradGuard(const NoGradGuard&) = delete;
    NoGradGuard& operator=(const NoGradGuard&) = delete;
};

// Ordered named parameter collection of one model instance.
template <typename T>
class ParamSet {
public:
    Tensor<T>& add(std::string name, Tensor<T> t) {
        t.set_requires_grad(true);
        items_.emplace_back(std::move(name), std::move(t));
        return items_.back().second;
    }
    Tensor<T>& at(const std::string& name) {
        for (auto& [n, t] : items_)
            if (n == name) return t;
        throw UsageError("no parameter named '" + name + "'");
    }
    const std::vector<std::pair<std::string, Tensor<T>>>& items() const { return items_; }
    std::vector<std::pair<std::string, Tensor<T>>>& items() { return items_; }
    std::size_t size() const { return items_.size(); }

    std::int64_t scalar_count() const {
        std::int64_t n = 0;
        for (const auto& [name, t] : items_) n += t.numel();
        return n;
    }
    void zero_grads() {
        for (auto& [name, t] : items_) t.zero_grad();
    }
    ParamSet clone_values() const {
        ParamSet out;
        for (const auto& [name, t] : items_) {
            out.add(name, Tensor<T>::from_data(t.shape(),
                                               {t.data().begin(), t.data().end()}));
        }
        return out;
    }
    void copy_values_from(const ParamSet& other) {
        if (other.size() != size()) throw UsageError("parameter set size mismatch");
        for (std::size_t i = 0; i < items_.size(); ++i) {
            auto dst = items_[i].second.mutable_data();
            auto src = other.items_[i].second.data();
            std::copy(src.begin(), src.end(), dst.begin());
        }
    }

private:
    std::vector<std::pair<std::string, Tensor<T>>> items_;
};

}  // namespace artauth::core
