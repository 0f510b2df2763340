#include "fg/training/ic.hpp"

#include <cmath>
#include <numeric>
#include <string>

#include "fg/core/errors.hpp"
#include "fg/diffcore/ops.hpp"

namespace fg {
namespace {

constexpr double kStdFloor = 1e-12;

void check_pair(std::size_t nx, std::size_t ny) {
    if (nx != ny) {
        throw DimensionError("IC inputs differ in length: " + std::to_string(nx) + " vs " + std::to_string(ny));
    }
    if (nx < 2) throw ValidationError("IC needs at least 2 stocks, got " + std::to_string(nx));
}

double mean_of(std::span<const double> v) {
    return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

}  // namespace

IcResult information_coefficient(std::span<const double> x, std::span<const double> y) {
    check_pair(x.size(), y.size());
    const double mx = mean_of(x), my = mean_of(y);
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double dx = x[i] - mx, dy = y[i] - my;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    const double n = static_cast<double>(x.size());
    const double sx = std::sqrt(sxx / n), sy = std::sqrt(syy / n);
    if (sx < kStdFloor || sy < kStdFloor) return {0.0, true};
    return {(sxy / n) / (sx * sy), false};
}

IcTensor information_coefficient(diff::Tape& tape, const diff::Tensor& f, std::span<const double> r) {
    check_pair(f.size(), r.size());
    const double n = static_cast<double>(r.size());
    const double mr = mean_of(r);
    std::vector<double> rc(r.size());
    double syy = 0.0;
    for (std::size_t i = 0; i < r.size(); ++i) {
        rc[i] = r[i] - mr;
        syy += rc[i] * rc[i];
    }
    const double sy = std::sqrt(syy / n);
    auto fv = f.values();
    const double mf = mean_of(fv);
    double sxx = 0.0;
    for (double v : fv) sxx += (v - mf) * (v - mf);
    if (sy < kStdFloor || std::sqrt(sxx / n) < kStdFloor) return {diff::Tensor::scalar(0.0), true};

    diff::Tensor fc = diff::sub(tape, f, diff::mean(tape, f));
    diff::Tensor cov = diff::mean(tape, diff::mul(tape, fc, diff::Tensor::from(f.rows(), f.cols(), rc)));
    diff::Tensor sf = diff::sqrt(tape, diff::mean(tape, diff::square(tape, fc)));
    return {diff::div(tape, cov, diff::scale(tape, sf, sy)), false};
}

double icir(std::span<const double> ics) {
    if (ics.size() < 2) return 0.0;
    const double m = mean_of(ics);
    double ss = 0.0;
    for (double v : ics) ss += (v - m) * (v - m);
    const double sd = std::sqrt(ss / static_cast<double>(ics.size()));
    return sd < kStdFloor ? 0.0 : m / sd;
}

diff::Tensor icir(diff::Tape& tape, const std::vector<diff::Tensor>& ics) {
    if (ics.size() < 2) return diff::Tensor::scalar(0.0);
    std::vector<double> vals;
    for (const auto& t : ics) vals.push_back(t.item());
    const double m = mean_of(vals);
    double ss = 0.0;
    for (double v : vals) ss += (v - m) * (v - m);
    if (std::sqrt(ss / static_cast<double>(vals.size())) < kStdFloor) return diff::Tensor::scalar(0.0);

    diff::Tensor row = diff::concat_cols(tape, ics);
    diff::Tensor mu = diff::mean(tape, row);
    diff::Tensor sd = diff::sqrt(tape, diff::mean(tape, diff::square(tape, diff::sub(tape, row, mu))));
    return diff::div(tape, mu, sd);
}

}  // namespace fg
