#include "ibert/numerics/tensor.hpp"

#include <cmath>
#include <sstream>
#include <unordered_set>

namespace ibert::num {

namespace {
thread_local bool g_grad_enabled = true;
}

std::size_t numel(const Shape& shape) {
    std::size_t n = 1;
    for (auto d : shape) n *= d;
    return n;
}

std::string to_string(const Shape& shape) {
    std::ostringstream os;
    os << '[';
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i) os << ',';
        os << shape[i];
    }
    os << ']';
    return os.str();
}

bool grad_enabled() { return g_grad_enabled; }

NoGradGuard::NoGradGuard() : previous_(g_grad_enabled) { g_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { g_grad_enabled = previous_; }

template <typename T>
Tensor<T> Tensor<T>::zeros(Shape shape, bool requires_grad) {
    return full(std::move(shape), T(0), requires_grad);
}

template <typename T>
Tensor<T> Tensor<T>::full(Shape shape, T value, bool requires_grad) {
    std::vector<T> values(num::numel(shape), value);
    return from(std::move(shape), std::move(values), requires_grad);
}

template <typename T>
Tensor<T> Tensor<T>::from(Shape shape, std::vector<T> values, bool requires_grad) {
    for (auto d : shape)
        if (d == 0) throw ShapeError("tensor dimensions must be positive, got " + to_string(shape));
    if (num::numel(shape) != values.size())
        throw ShapeError("tensor of shape " + to_string(shape) + " given " +
                         std::to_string(values.size()) + " values");
    auto node = std::make_shared<Node<T>>();
    node->shape = std::move(shape);
    node->value = std::move(values);
    Tensor t(std::move(node));
    t.set_requires_grad(requires_grad);
    return t;
}

template <typename T>
Tensor<T> Tensor<T>::scalar(T value, bool requires_grad) {
    return from(Shape{1}, {value}, requires_grad);
}

template <typename T>
std::size_t Tensor<T>::dim(int axis) const {
    const int n = static_cast<int>(ndim());
    const int a = axis < 0 ? axis + n : axis;
    if (a < 0 || a >= n)
        throw ShapeError("axis " + std::to_string(axis) + " out of range for shape " +
                         to_string(shape()));
    return node_->shape[static_cast<std::size_t>(a)];
}

template <typename T>
void Tensor<T>::set_requires_grad(bool on) {
    node_->requires_grad = on;
    if (on) node_->grad_buffer();
}

template <typename T>
std::span<const T> Tensor<T>::grad() const {
    if (!has_grad()) throw std::logic_error("tensor has no gradient buffer");
    return node_->grad;
}

template <typename T>
std::span<T> Tensor<T>::mutable_grad() {
    return node_->grad_buffer();
}

template <typename T>
void Tensor<T>::zero_grad() {
    auto& g = node_->grad_buffer();
    std::fill(g.begin(), g.end(), T(0));
}

template <typename T>
T Tensor<T>::item() const {
    if (numel() != 1) throw ShapeError("item() on tensor of shape " + to_string(shape()));
    return node_->value[0];
}

template <typename T>
T Tensor<T>::at(std::initializer_list<std::size_t> index) const {
    if (index.size() != ndim())
        throw ShapeError("index rank does not match shape " + to_string(shape()));
    std::size_t flat = 0;
    std::size_t axis = 0;
    for (auto i : index) {
        if (i >= node_->shape[axis]) throw ShapeError("index out of range for " + to_string(shape()));
        flat = flat * node_->shape[axis] + i;
        ++axis;
    }
    return node_->value[flat];
}

template <typename T>
void Tensor<T>::backward() const {
    if (numel() != 1)
        throw ShapeError("backward() needs a scalar loss, got shape " + to_string(shape()));
    auto tape = Tape<T>::record(*this);
    node_->grad_buffer()[0] += T(1);
    tape.run_backward();
}

template <typename T>
Tape<T> Tape<T>::record(const Tensor<T>& root) {
    Tape tape;
    std::unordered_set<const Node<T>*> seen;
    // Iterative post-order DFS; a node is emitted after all of its inputs.
    std::vector<std::pair<Node<T>*, std::size_t>> stack;
    stack.emplace_back(root.node(), 0);
    seen.insert(root.node());
    while (!stack.empty()) {
        auto& [node, next] = stack.back();
        if (next < node->inputs.size()) {
            Node<T>* child = node->inputs[next++].get();
            if (seen.insert(child).second) stack.emplace_back(child, 0);
        } else {
            tape.entries_.push_back(node);
            stack.pop_back();
        }
    }
    return tape;
}

template <typename T>
void Tape<T>::run_backward() const {
    for (auto it = entries_.rbegin(); it != entries_.rend(); ++it) {
        Node<T>* node = *it;
        if (!node->backward || node->grad.size() != node->value.size()) continue;
        node->backward(*node);
    }
}

template class Tensor<float>;
template class Tensor<double>;
template class Tape<float>;
template class Tape<double>;

}  // namespace ibert::num
