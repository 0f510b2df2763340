#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "fg/core/matrix.hpp"

namespace fg::diff {

// Storage behind a Tensor handle. Every tensor is rank 2; vectors are n x 1
// or 1 x m and scalars are 1 x 1.
struct Node {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> value;
    std::vector<double> grad;
    bool requires_grad = false;
};

// Shared handle to a Node. Copies alias the same storage.
class Tensor {
public:
    Tensor() = default;

    static Tensor zeros(std::size_t rows, std::size_t cols, bool requires_grad = false);
    static Tensor filled(std::size_t rows, std::size_t cols, double v, bool requires_grad = false);
    static Tensor from(std::size_t rows, std::size_t cols, std::vector<double> values,
                       bool requires_grad = false);
    static Tensor from(const Matrix& m, bool requires_grad = false);
    static Tensor column(std::vector<double> values);
    static Tensor row(std::vector<double> values);
    static Tensor scalar(double v, bool requires_grad = false);

    bool defined() const { return node_ != nullptr; }
    std::size_t rows() const { return node_->rows; }
    std::size_t cols() const { return node_->cols; }
    std::size_t size() const { return node_->rows * node_->cols; }
    std::vector<std::size_t> shape() const { return {node_->rows, node_->cols}; }
    std::string shape_string() const;

    double operator()(std::size_t r, std::size_t c) const { return node_->value[r * node_->cols + c]; }
    double item() const;
    double grad_at(std::size_t r, std::size_t c) const { return node_->grad[r * node_->cols + c]; }

    std::span<const double> values() const { return node_->value; }
    std::span<double> mutable_values() { return node_->value; }
    std::span<const double> grad() const { return node_->grad; }
    std::span<double> mutable_grad() { return node_->grad; }
    std::vector<double> to_vector() const { return node_->value; }

    bool requires_grad() const { return node_->requires_grad; }
    void zero_grad();

    // Fresh tensor with copied values and zeroed grad, sharing nothing.
    Tensor clone() const;

    Node* node() const { return node_.get(); }
    const std::shared_ptr<Node>& shared() const { return node_; }

private:
    explicit Tensor(std::shared_ptr<Node> n) : node_(std::move(n)) {}
    std::shared_ptr<Node> node_;
};

// Ordered log of differentiable operations. Records are appended as ops run,
// so the log is already topologically sorted and backward walks it in reverse.
//
// A disabled tape records nothing; ops still compute values, which makes it
// the forward-only evaluation mode.
class Tape {
public:
    struct Record {
        std::shared_ptr<Node> output;
        std::vector<std::shared_ptr<Node>> inputs;
        std::function<void()> backward;
    };

    explicit Tape(bool enabled = true) : enabled_(enabled) {}

    bool enabled() const { return enabled_; }
    std::size_t size() const { return records_.size(); }
    void clear() { records_.clear(); }

    void record(const Tensor& output, std::vector<Tensor> inputs, std::function<void()> backward);

    // Seeds d(loss)/d(loss) = 1 and propagates through every record once.
    // Gradients of intermediate records are reset first; leaf tensors keep
    // accumulating across calls until zero_grad().
    void backward(const Tensor& loss);

private:
    bool enabled_;
    std::vector<Record> records_;
};

inline void backward(const Tensor& loss, Tape& tape) { tape.backward(loss); }

}  // namespace fg::diff
