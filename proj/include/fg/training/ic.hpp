#pragma once

#include <span>
#include <vector>

#include "fg/diffcore/tensor.hpp"

namespace fg {

struct IcResult {
    double value = 0.0;
    bool degenerate = false;  // either std below 1e-12; value is then 0
};

// Cross-sectional Pearson correlation with population moments. Requires
// n >= 2 and equal lengths.
IcResult information_coefficient(std::span<const double> x, std::span<const double> y);

struct IcTensor {
    diff::Tensor value;  // 1 x 1; constant 0 when degenerate
    bool degenerate = false;
};

// Pearson correlation of an n x 1 tensor with constant returns, on the tape.
IcTensor information_coefficient(diff::Tape& tape, const diff::Tensor& f, std::span<const double> r);

// mean / population std; 0 when fewer than two values or std < 1e-12.
double icir(std::span<const double> ics);
diff::Tensor icir(diff::Tape& tape, const std::vector<diff::Tensor>& ics);

}  // namespace fg
