#include "fg/diffcore/tensor.hpp"

#include <algorithm>
#include <sstream>

#include "fg/core/errors.hpp"

namespace fg::diff {

Tensor Tensor::zeros(std::size_t rows, std::size_t cols, bool requires_grad) {
    return filled(rows, cols, 0.0, requires_grad);
}

Tensor Tensor::filled(std::size_t rows, std::size_t cols, double v, bool requires_grad) {
    return from(rows, cols, std::vector<double>(rows * cols, v), requires_grad);
}

Tensor Tensor::from(std::size_t rows, std::size_t cols, std::vector<double> values,
                    bool requires_grad) {
    if (values.size() != rows * cols) {
        std::ostringstream os;
        os << "tensor of shape (" << rows << ", " << cols << ") given " << values.size()
           << " values";
        throw DimensionError(os.str());
    }
    auto n = std::make_shared<Node>();
    n->rows = rows;
    n->cols = cols;
    n->value = std::move(values);
    n->grad.assign(rows * cols, 0.0);
    n->requires_grad = requires_grad;
    return Tensor(std::move(n));
}

Tensor Tensor::from(const Matrix& m, bool requires_grad) {
    return from(m.rows, m.cols, m.data, requires_grad);
}

Tensor Tensor::column(std::vector<double> values) {
    const auto n = values.size();
    return from(n, 1, std::move(values));
}

Tensor Tensor::row(std::vector<double> values) {
    const auto n = values.size();
    return from(1, n, std::move(values));
}

Tensor Tensor::scalar(double v, bool requires_grad) { return from(1, 1, {v}, requires_grad); }

std::string Tensor::shape_string() const {
    std::ostringstream os;
    os << "(" << rows() << ", " << cols() << ")";
    return os.str();
}

double Tensor::item() const {
    if (size() != 1) throw RankError("item() on non-scalar tensor of shape " + shape_string());
    return node_->value[0];
}

void Tensor::zero_grad() { std::fill(node_->grad.begin(), node_->grad.end(), 0.0); }

Tensor Tensor::clone() const { return from(rows(), cols(), node_->value, node_->requires_grad); }

void Tape::record(const Tensor& output, std::vector<Tensor> inputs,
                  std::function<void()> backward) {
    if (!enabled_) return;
    Record rec;
    rec.output = output.shared();
    rec.inputs.reserve(inputs.size());
    for (auto& t : inputs) rec.inputs.push_back(t.shared());
    rec.backward = std::move(backward);
    records_.push_back(std::move(rec));
}

void Tape::backward(const Tensor& loss) {
    if (!loss.defined() || loss.size() != 1) {
        throw RankError("backward requires a scalar loss, got shape " +
                        (loss.defined() ? loss.shape_string() : std::string("(undefined)")));
    }
    for (auto& rec : records_) {
        std::fill(rec.output->grad.begin(), rec.output->grad.end(), 0.0);
    }
    Node* root = loss.node();
    const bool root_recorded = std::any_of(records_.begin(), records_.end(),
                                           [root](const Record& r) { return r.output.get() == root; });
    if (root_recorded) {
        root->grad[0] = 1.0;
    } else if (root->requires_grad) {
        root->grad[0] += 1.0;
        return;
    } else {
        return;
    }
    for (auto it = records_.rbegin(); it != records_.rend(); ++it) {
        it->backward();
    }
}

}  // namespace fg::diff
