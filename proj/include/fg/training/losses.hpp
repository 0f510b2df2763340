#pragma once

#include <span>
#include <vector>

#include "fg/diffcore/tensor.hpp"

namespace fg {

// One (date, horizon) term of the portfolio loss.
struct PortfolioTerm {
    diff::Tensor weights;               // n x 1
    const std::vector<double>* returns;  // r_{t+k}, length n
};

struct PortfolioLoss {
    diff::Tensor l_ret;  // -mean W . R
    diff::Tensor l_up;   // mean sum_j max(0, w_j - theta)
};

// Throws ValidationError on an empty term list.
PortfolioLoss portfolio_loss(diff::Tape& tape, std::span<const PortfolioTerm> terms, double theta = 0.10);

// -mean_k d[k] * ICIR_k over per-horizon IC series; series with fewer than two
// values or a degenerate std contribute 0.
diff::Tensor stability_loss(diff::Tape& tape, const std::vector<std::vector<diff::Tensor>>& ic_series,
                            std::span<const double> d);

struct PsiTensor {
    diff::Tensor value;  // 1 x 1; constant 0 when degenerate
    bool degenerate = false;
};

// OLS slope cov(f, r) / var(f) of r on f with intercept. var(f) <= 1e-12 is degenerate.
PsiTensor cross_sectional_fit(diff::Tape& tape, const diff::Tensor& f, std::span<const double> r);
double cross_sectional_fit(std::span<const double> f, std::span<const double> r);

// Gradient descent on mean (r - psi f - c)^2 from (0, 0). `step` is relative
// to the largest curvature of the objective, so step in (0, 1] converges.
double cross_sectional_fit_iterative(std::span<const double> f, std::span<const double> r, double step,
                                     int iterations);

// -mean over terms of psi * d.
diff::Tensor factor_return_loss(diff::Tape& tape, const std::vector<diff::Tensor>& psi, std::span<const double> d);

// mean over terms of ||f - f_hat||_2.
diff::Tensor attention_estimate_loss(diff::Tape& tape, const std::vector<diff::Tensor>& f,
                                     const std::vector<diff::Tensor>& f_hat);

}  // namespace fg
