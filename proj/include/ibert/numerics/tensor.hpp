#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace ibert::num {

using Shape = std::vector<std::size_t>;

std::size_t numel(const Shape& shape);
std::string to_string(const Shape& shape);

class ShapeError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// Raised when an operation produces NaN/Inf from finite inputs, or when a
// precondition on values (mask, target ids) is violated.
class NumericError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

template <typename T>
struct Node {
    using BackwardFn = std::function<void(Node&)>;

    Shape shape;
    std::vector<T> value;
    // Allocated lazily for intermediates, eagerly for leaves that require grad.
    std::vector<T> grad;
    bool requires_grad = false;
    const char* op = "leaf";
    std::vector<std::shared_ptr<Node>> inputs;
    BackwardFn backward;

    std::vector<T>& grad_buffer() {
        if (grad.size() != value.size()) grad.assign(value.size(), T(0));
        return grad;
    }
};

// Recording is on by default; evaluation code disables it with NoGradGuard.
bool grad_enabled();

class NoGradGuard {
public:
    NoGradGuard();
    ~NoGradGuard();
    NoGradGuard(const NoGradGuard&) = delete;
    NoGradGuard& operator=(const NoGradGuard&) = delete;

private:
    bool previous_;
};

template <typename T>
class Tensor {
public:
    using Scalar = T;

    Tensor() = default;
    explicit Tensor(std::shared_ptr<Node<T>> node) : node_(std::move(node)) {}

    static Tensor zeros(Shape shape, bool requires_grad = false);
    static Tensor full(Shape shape, T value, bool requires_grad = false);
    static Tensor from(Shape shape, std::vector<T> values, bool requires_grad = false);
    static Tensor scalar(T value, bool requires_grad = false);

    bool defined() const { return node_ != nullptr; }
    const Shape& shape() const { return node_->shape; }
    std::size_t ndim() const { return node_->shape.size(); }
    // Negative axes count from the end.
    std::size_t dim(int axis) const;
    std::size_t numel() const { return node_->value.size(); }

    std::span<const T> data() const { return node_->value; }
    // Mutable access is for leaves (parameters, optimizer updates, gradcheck perturbation).
    std::span<T> mutable_data() { return node_->value; }

    bool requires_grad() const { return node_->requires_grad; }
    void set_requires_grad(bool on);
    bool has_grad() const { return node_->grad.size() == node_->value.size(); }
    std::span<const T> grad() const;
    std::span<T> mutable_grad();
    void zero_grad();

    T item() const;
    T at(std::initializer_list<std::size_t> index) const;

    // Reverse-mode pass from this scalar; accumulates into leaf grads.
    void backward() const;

    Node<T>* node() const { return node_.get(); }
    const std::shared_ptr<Node<T>>& node_ptr() const { return node_; }

private:
    std::shared_ptr<Node<T>> node_;
};

// Topologically ordered list of the operations reachable from a root.
// Built per backward call (define-by-run).
template <typename T>
class Tape {
public:
    static Tape record(const Tensor<T>& root);

    const std::vector<Node<T>*>& entries() const { return entries_; }
    std::size_t size() const { return entries_.size(); }
    // Visits entries in reverse order exactly once, calling each backward rule.
    void run_backward() const;

private:
    std::vector<Node<T>*> entries_;
};

extern template class Tensor<float>;
extern template class Tensor<double>;
extern template class Tape<float>;
extern template class Tape<double>;

}  // namespace ibert::num
