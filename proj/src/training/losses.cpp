#include "fg/training/losses.hpp"

#include <cmath>
#include <numeric>
#include <string>

#include "fg/core/errors.hpp"
#include "fg/diffcore/ops.hpp"
#include "fg/training/ic.hpp"

namespace fg {

using diff::Tape;
using diff::Tensor;

namespace {

constexpr double kVarFloor = 1e-12;

Tensor mean_of_terms(Tape& tape, const std::vector<Tensor>& terms) {
    return diff::mean(tape, diff::concat_cols(tape, terms));
}

}  // namespace

PortfolioLoss portfolio_loss(Tape& tape, std::span<const PortfolioTerm> terms, double theta) {
    if (terms.empty()) throw ValidationError("portfolio loss needs at least one (date, horizon) term");
    std::vector<Tensor> ret, up;
    for (const auto& t : terms) {
        if (t.returns->size() != t.weights.rows()) {
            throw DimensionError("weights " + t.weights.shape_string() + " vs " + std::to_string(t.returns->size()) +
                                 " returns");
        }
        ret.push_back(diff::sum(tape, diff::mul(tape, t.weights, Tensor::column(*t.returns))));
        up.push_back(diff::sum(tape, diff::relu(tape, diff::add_scalar(tape, t.weights, -theta))));
    }
    return {diff::scale(tape, mean_of_terms(tape, ret), -1.0), mean_of_terms(tape, up)};
}

Tensor stability_loss(Tape& tape, const std::vector<std::vector<Tensor>>& ic_series, std::span<const double> d) {
    if (ic_series.size() != d.size()) throw DimensionError("one direction per IC series required");
    if (ic_series.empty()) return Tensor::scalar(0.0);
    std::vector<Tensor> parts;
    for (std::size_t k = 0; k < d.size(); ++k) parts.push_back(diff::scale(tape, icir(tape, ic_series[k]), d[k]));
    return diff::scale(tape, mean_of_terms(tape, parts), -1.0);
}

PsiTensor cross_sectional_fit(Tape& tape, const Tensor& f, std::span<const double> r) {
    if (f.size() != r.size()) throw DimensionError("factor and returns differ in length");
    const double n = static_cast<double>(r.size());
    auto fv = f.values();
    const double mf = std::accumulate(fv.begin(), fv.end(), 0.0) / n;
    double var = 0.0;
    for (double v : fv) var += (v - mf) * (v - mf);
    if (var / n <= kVarFloor) return {Tensor::scalar(0.0), true};

    const double mr = std::accumulate(r.begin(), r.end(), 0.0) / n;
    std::vector<double> rc(r.size());
    for (std::size_t i = 0; i < r.size(); ++i) rc[i] = r[i] - mr;
    Tensor fc = diff::sub(tape, f, diff::mean(tape, f));
    Tensor cov = diff::mean(tape, diff::mul(tape, fc, Tensor::from(f.rows(), f.cols(), rc)));
    return {diff::div(tape, cov, diff::mean(tape, diff::square(tape, fc))), false};
}

double cross_sectional_fit(std::span<const double> f, std::span<const double> r) {
    Tape off(false);
    return cross_sectional_fit(off, Tensor::column(std::vector<double>(f.begin(), f.end())), r).value.item();
}

double cross_sectional_fit_iterative(std::span<const double> f, std::span<const double> r, double step,
                                     int iterations) {
    if (f.size() != r.size()) throw DimensionError("factor and returns differ in length");
    if (!(step > 0.0 && step <= 1.0)) throw ValidationError("local step must lie in (0, 1]");
    const double n = static_cast<double>(f.size());
    double sf = 0.0, sff = 0.0;
    for (double v : f) {
        sf += v;
        sff += v * v;
    }
    const double a = sff / n, b = sf / n;
    // Hessian of the MSE is 2 [[a, b], [b, 1]].
    const double lam_max = (a + 1.0) + std::sqrt((a - 1.0) * (a - 1.0) + 4.0 * b * b);
    if (a - b * b <= kVarFloor) return 0.0;
    const double lr = step / lam_max;
    double psi = 0.0, c = 0.0;
    for (int it = 0; it < iterations; ++it) {
        double g_psi = 0.0, g_c = 0.0;
        for (std::size_t i = 0; i < f.size(); ++i) {
            const double res = r[i] - psi * f[i] - c;
            g_psi += -2.0 * res * f[i];
            g_c += -2.0 * res;
        }
        psi -= lr * g_psi / n;
        c -= lr * g_c / n;
    }
    return psi;
}

Tensor factor_return_loss(Tape& tape, const std::vector<Tensor>& psi, std::span<const double> d) {
    if (psi.size() != d.size()) throw DimensionError("one direction per factor return required");
    if (psi.empty()) throw ValidationError("factor return loss needs at least one term");
    std::vector<Tensor> parts;
    for (std::size_t i = 0; i < psi.size(); ++i) parts.push_back(diff::scale(tape, psi[i], d[i]));
    return diff::scale(tape, mean_of_terms(tape, parts), -1.0);
}

Tensor attention_estimate_loss(Tape& tape, const std::vector<Tensor>& f, const std::vector<Tensor>& f_hat) {
    if (f.size() != f_hat.size()) throw DimensionError("one estimate per deep factor required");
    if (f.empty()) throw ValidationError("attention estimate loss needs at least one term");
    std::vector<Tensor> parts;
    for (std::size_t i = 0; i < f.size(); ++i) parts.push_back(diff::l2_norm(tape, diff::sub(tape, f[i], f_hat[i])));
    return mean_of_terms(tape, parts);
}

}  // namespace fg
