#include "fg/diffcore/ops.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "fg/core/errors.hpp"

namespace fg::diff {
namespace {

constexpr double kDegenerateStd = 1e-12;

bool any_requires(Tape& tape, std::initializer_list<const Tensor*> inputs) {
    if (!tape.enabled()) return false;
    for (const Tensor* t : inputs) {
        if (t->defined() && t->requires_grad()) return true;
    }
    return false;
}

Tensor make_output(Tape& tape, std::size_t rows, std::size_t cols, std::vector<double> values,
                   std::initializer_list<const Tensor*> inputs) {
    return Tensor::from(rows, cols, std::move(values), any_requires(tape, inputs));
}

[[noreturn]] void shape_mismatch(const char* op, const Tensor& a, const Tensor& b) {
    std::ostringstream os;
    os << op << ": incompatible shapes " << a.shape_string() << " and " << b.shape_string();
    throw DimensionError(os.str());
}

enum class BinaryKind { add, sub, mul, div };

std::size_t broadcast_dim(std::size_t a, std::size_t b, bool& ok) {
    if (a == b) return a;
    if (a == 1) return b;
    if (b == 1) return a;
    ok = false;
    return 0;
}

Tensor binary(Tape& tape, const Tensor& a, const Tensor& b, BinaryKind kind, const char* name) {
    bool ok = true;
    const std::size_t rows = broadcast_dim(a.rows(), b.rows(), ok);
    const std::size_t cols = broadcast_dim(a.cols(), b.cols(), ok);
    if (!ok) shape_mismatch(name, a, b);

    // Strides of 0 replay a broadcast dimension.
    const std::size_t ars = a.rows() == 1 ? 0 : a.cols();
    const std::size_t acs = a.cols() == 1 ? 0 : 1;
    const std::size_t brs = b.rows() == 1 ? 0 : b.cols();
    const std::size_t bcs = b.cols() == 1 ? 0 : 1;

    const auto av = a.values();
    const auto bv = b.values();
    std::vector<double> out(rows * cols);
    for (std::size_t i = 0; i < rows; ++i) {
        for (std::size_t j = 0; j < cols; ++j) {
            const double x = av[i * ars + j * acs];
            const double y = bv[i * brs + j * bcs];
            double v = 0.0;
            switch (kind) {
                case BinaryKind::add: v = x + y; break;
                case BinaryKind::sub: v = x - y; break;
                case BinaryKind::mul: v = x * y; break;
                case BinaryKind::div: v = x / y; break;
            }
            out[i * cols + j] = v;
        }
    }
    Tensor result = make_output(tape, rows, cols, std::move(out), {&a, &b});
    if (result.requires_grad()) {
        Node* on = result.node();
        Node* an = a.node();
        Node* bn = b.node();
        tape.record(result, {a, b}, [=] {
            for (std::size_t i = 0; i < rows; ++i) {
                for (std::size_t j = 0; j < cols; ++j) {
                    const double g = on->grad[i * cols + j];
                    if (g == 0.0) continue;
                    const std::size_t ai = i * ars + j * acs;
                    const std::size_t bi = i * brs + j * bcs;
                    const double x = an->value[ai];
                    const double y = bn->value[bi];
                    switch (kind) {
                        case BinaryKind::add:
                            if (an->requires_grad) an->grad[ai] += g;
                            if (bn->requires_grad) bn->grad[bi] += g;
                            break;
                        case BinaryKind::sub:
                            if (an->requires_grad) an->grad[ai] += g;
                            if (bn->requires_grad) bn->grad[bi] -= g;
                            break;
                        case BinaryKind::mul:
                            if (an->requires_grad) an->grad[ai] += g * y;
                            if (bn->requires_grad) bn->grad[bi] += g * x;
                            break;
                        case BinaryKind::div:
                            if (an->requires_grad) an->grad[ai] += g / y;
                            if (bn->requires_grad) bn->grad[bi] -= g * x / (y * y);
                            break;
                    }
                }
            }
        });
    }
    return result;
}

// Elementwise unary op given value and derivative functions of the input.
template <class F, class D>
Tensor unary(Tape& tape, const Tensor& x, F f, D df) {
    const auto xv = x.values();
    std::vector<double> out(xv.size());
    for (std::size_t i = 0; i < xv.size(); ++i) out[i] = f(xv[i]);
    Tensor result = make_output(tape, x.rows(), x.cols(), std::move(out), {&x});
    if (result.requires_grad()) {
        Node* on = result.node();
        Node* xn = x.node();
        tape.record(result, {x}, [on, xn, df] {
            for (std::size_t i = 0; i < xn->value.size(); ++i) {
                xn->grad[i] += on->grad[i] * df(xn->value[i], on->value[i]);
            }
        });
    }
    return result;
}

// out(n x p) += a(n x k) * b(k x p)
void gemm_nn(const double* a, const double* b, double* out, std::size_t n, std::size_t k,
             std::size_t p) {
    for (std::size_t i = 0; i < n; ++i) {
        double* orow = out + i * p;
        const double* arow = a + i * k;
        for (std::size_t t = 0; t < k; ++t) {
            const double av = arow[t];
            if (av == 0.0) continue;
            const double* brow = b + t * p;
            for (std::size_t j = 0; j < p; ++j) orow[j] += av * brow[j];
        }
    }
}

}  // namespace

Tensor matmul(Tape& tape, const Tensor& a, const Tensor& b) {
    if (a.cols() != b.rows()) shape_mismatch("matmul", a, b);
    const std::size_t n = a.rows(), k = a.cols(), p = b.cols();
    std::vector<double> out(n * p, 0.0);
    gemm_nn(a.values().data(), b.values().data(), out.data(), n, k, p);
    Tensor result = make_output(tape, n, p, std::move(out), {&a, &b});
    if (result.requires_grad()) {
        Node* on = result.node();
        Node* an = a.node();
        Node* bn = b.node();
        tape.record(result, {a, b}, [=] {
            const double* g = on->grad.data();
            if (an->requires_grad) {
                // dA = G * B^T
                for (std::size_t i = 0; i < n; ++i) {
                    const double* grow = g + i * p;
                    double* darow = an->grad.data() + i * k;
                    for (std::size_t t = 0; t < k; ++t) {
                        const double* brow = bn->value.data() + t * p;
                        double acc = 0.0;
                        for (std::size_t j = 0; j < p; ++j) acc += grow[j] * brow[j];
                        darow[t] += acc;
                    }
                }
            }
            if (bn->requires_grad) {
                // dB = A^T * G
                for (std::size_t i = 0; i < n; ++i) {
                    const double* arow = an->value.data() + i * k;
                    const double* grow = g + i * p;
                    for (std::size_t t = 0; t < k; ++t) {
                        const double av = arow[t];
                        if (av == 0.0) continue;
                        double* dbrow = bn->grad.data() + t * p;
                        for (std::size_t j = 0; j < p; ++j) dbrow[j] += av * grow[j];
                    }
                }
            }
        });
    }
    return result;
}

Tensor linear_map(Tape& tape, const Tensor& x, const Tensor& w, const Tensor& bias) {
    if (x.cols() != w.rows()) shape_mismatch("linear_map", x, w);
    Tensor y = matmul(tape, x, w);
    if (!bias.defined()) return y;
    if (bias.rows() != 1 || bias.cols() != w.cols()) shape_mismatch("linear_map bias", w, bias);
    return add(tape, y, bias);
}

Tensor transpose(Tape& tape, const Tensor& x) {
    const std::size_t r = x.rows(), c = x.cols();
    const auto xv = x.values();
    std::vector<double> out(r * c);
    for (std::size_t i = 0; i < r; ++i)
        for (std::size_t j = 0; j < c; ++j) out[j * r + i] = xv[i * c + j];
    Tensor result = make_output(tape, c, r, std::move(out), {&x});
    if (result.requires_grad()) {
        Node* on = result.node();
        Node* xn = x.node();
        tape.record(result, {x}, [=] {
            for (std::size_t i = 0; i < r; ++i)
                for (std::size_t j = 0; j < c; ++j) xn->grad[i * c + j] += on->grad[j * r + i];
        });
    }
    return result;
}

Tensor add(Tape& tape, const Tensor& a, const Tensor& b) {
    return binary(tape, a, b, BinaryKind::add, "add");
}
Tensor sub(Tape& tape, const Tensor& a, const Tensor& b) {
    return binary(tape, a, b, BinaryKind::sub, "sub");
}
Tensor mul(Tape& tape, const Tensor& a, const Tensor& b) {
    return binary(tape, a, b, BinaryKind::mul, "mul");
}
Tensor div(Tape& tape, const Tensor& a, const Tensor& b) {
    return binary(tape, a, b, BinaryKind::div, "div");
}

Tensor scale(Tape& tape, const Tensor& x, double c) {
    return unary(
        tape, x, [c](double v) { return c * v; }, [c](double, double) { return c; });
}

Tensor add_scalar(Tape& tape, const Tensor& x, double c) {
    return unary(
        tape, x, [c](double v) { return v + c; }, [](double, double) { return 1.0; });
}

Tensor leaky_relu(Tape& tape, const Tensor& x, double slope) {
    return unary(
        tape, x, [slope](double v) { return v >= 0.0 ? v : slope * v; },
        [slope](double v, double) { return v > 0.0 ? 1.0 : slope; });
}

Tensor relu(Tape& tape, const Tensor& x) {
    return unary(
        tape, x, [](double v) { return v > 0.0 ? v : 0.0; },
        [](double v, double) { return v > 0.0 ? 1.0 : 0.0; });
}

Tensor square(Tape& tape, const Tensor& x) {
    return unary(
        tape, x, [](double v) { return v * v; }, [](double v, double) { return 2.0 * v; });
}

Tensor sqrt(Tape& tape, const Tensor& x) {
    return unary(
        tape, x, [](double v) { return std::sqrt(v); },
        [](double, double y) { return y > 0.0 ? 0.5 / y : 0.0; });
}

Tensor softmax_axis(Tape& tape, const Tensor& x, Axis axis) {
    const std::size_t r = x.rows(), c = x.cols();
    const auto xv = x.values();
    for (double v : xv) {
        if (std::isnan(v)) throw NumericError("softmax_axis: NaN in input " + x.shape_string());
    }
    // Slices: along cols -> one per row; along rows -> one per column.
    const std::size_t n_slices = axis == Axis::cols ? r : c;
    const std::size_t len = axis == Axis::cols ? c : r;
    const std::size_t slice_step = axis == Axis::cols ? c : 1;
    const std::size_t elem_step = axis == Axis::cols ? 1 : c;

    std::vector<double> out(r * c, 0.0);
    for (std::size_t s = 0; s < n_slices; ++s) {
        const std::size_t base = s * slice_step;
        double mx = -std::numeric_limits<double>::infinity();
        for (std::size_t e = 0; e < len; ++e) mx = std::max(mx, xv[base + e * elem_step]);
        if (std::isinf(mx) && mx < 0) {
            throw NumericError("softmax_axis: slice with no finite entries in " + x.shape_string());
        }
        double z = 0.0;
        for (std::size_t e = 0; e < len; ++e) {
            const double v = std::exp(xv[base + e * elem_step] - mx);
            out[base + e * elem_step] = v;
            z += v;
        }
        for (std::size_t e = 0; e < len; ++e) out[base + e * elem_step] /= z;
    }
    Tensor result = make_output(tape, r, c, std::move(out), {&x});
    if (result.requires_grad()) {
        Node* on = result.node();
        Node* xn = x.node();
        tape.record(result, {x}, [=] {
            for (std::size_t s = 0; s < n_slices; ++s) {
                const std::size_t base = s * slice_step;
                double dot = 0.0;
                for (std::size_t e = 0; e < len; ++e) {
                    const std::size_t idx = base + e * elem_step;
                    dot += on->grad[idx] * on->value[idx];
                }
                for (std::size_t e = 0; e < len; ++e) {
                    const std::size_t idx = base + e * elem_step;
                    xn->grad[idx] += on->value[idx] * (on->grad[idx] - dot);
                }
            }
        });
    }
    return result;
}

Tensor mask_fill(Tape& tape, const Tensor& x, std::span<const char> keep, double fill) {
    if (keep.size() != x.size()) {
        std::ostringstream os;
        os << "mask_fill: mask of size " << keep.size() << " for tensor " << x.shape_string();
        throw DimensionError(os.str());
    }
    const auto xv = x.values();
    std::vector<double> out(xv.size());
    for (std::size_t i = 0; i < xv.size(); ++i) out[i] = keep[i] ? xv[i] : fill;
    Tensor result = make_output(tape, x.rows(), x.cols(), std::move(out), {&x});
    if (result.requires_grad()) {
        Node* on = result.node();
        Node* xn = x.node();
        std::vector<char> mask(keep.begin(), keep.end());
        tape.record(result, {x}, [on, xn, mask = std::move(mask)] {
            for (std::size_t i = 0; i < mask.size(); ++i) {
                if (mask[i]) xn->grad[i] += on->grad[i];
            }
        });
    }
    return result;
}

Tensor crosssec_norm(Tape& tape, const Tensor& x) {
    const std::size_t n = x.rows(), m = x.cols();
    if (n < 2) {
        throw ValidationError("crosssec_norm: insufficient cross-section, need at least 2 rows, got " +
                              std::to_string(n));
    }
    const auto xv = x.values();
    std::vector<double> out(n * m, 0.0);
    std::vector<double> inv_std(m, 0.0);
    for (std::size_t j = 0; j < m; ++j) {
        double mu = 0.0;
        for (std::size_t i = 0; i < n; ++i) mu += xv[i * m + j];
        mu /= static_cast<double>(n);
        double var = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double d = xv[i * m + j] - mu;
            var += d * d;
        }
        const double sd = std::sqrt(var / static_cast<double>(n));
        if (sd < kDegenerateStd) continue;
        inv_std[j] = 1.0 / sd;
        for (std::size_t i = 0; i < n; ++i) out[i * m + j] = (xv[i * m + j] - mu) * inv_std[j];
    }
    Tensor result = make_output(tape, n, m, std::move(out), {&x});
    if (result.requires_grad()) {
        Node* on = result.node();
        Node* xn = x.node();
        tape.record(result, {x}, [on, xn, n, m, inv_std = std::move(inv_std)] {
            const double dn = static_cast<double>(n);
            for (std::size_t j = 0; j < m; ++j) {
                if (inv_std[j] == 0.0) continue;
                double g_mean = 0.0, gy_mean = 0.0;
                for (std::size_t i = 0; i < n; ++i) {
                    g_mean += on->grad[i * m + j];
                    gy_mean += on->grad[i * m + j] * on->value[i * m + j];
                }
                g_mean /= dn;
                gy_mean /= dn;
                for (std::size_t i = 0; i < n; ++i) {
                    const std::size_t idx = i * m + j;
                    xn->grad[idx] += inv_std[j] * (on->grad[idx] - g_mean - on->value[idx] * gy_mean);
                }
            }
        });
    }
    return result;
}

Tensor gate_mask(Tape& tape, const Tensor& a, double threshold, GateGradient mode) {
    if (threshold < 0.0) throw ValidationError("gate_mask: threshold must be >= 0");
    const auto av = a.values();
    std::vector<double> out(av.size());
    for (std::size_t i = 0; i < av.size(); ++i) out[i] = av[i] >= threshold ? 1.0 : 0.0;
    const bool track = mode == GateGradient::straight_through && any_requires(tape, {&a});
    Tensor result = Tensor::from(a.rows(), a.cols(), std::move(out), track);
    if (track) {
        Node* on = result.node();
        Node* an = a.node();
        tape.record(result, {a}, [on, an] {
            for (std::size_t i = 0; i < on->value.size(); ++i) {
                if (on->value[i] != 0.0) an->grad[i] += on->grad[i];
            }
        });
    }
    return result;
}

Tensor concat_cols(Tape& tape, const std::vector<Tensor>& parts) {
    if (parts.empty()) throw DimensionError("concat_cols: no inputs");
    const std::size_t r = parts.front().rows();
    std::size_t c = 0;
    bool needs = false;
    for (const auto& p : parts) {
        if (p.rows() != r) shape_mismatch("concat_cols", parts.front(), p);
        c += p.cols();
        needs = needs || (tape.enabled() && p.requires_grad());
    }
    std::vector<double> out(r * c);
    std::size_t offset = 0;
    for (const auto& p : parts) {
        const auto pv = p.values();
        const std::size_t pc = p.cols();
        for (std::size_t i = 0; i < r; ++i)
            std::copy_n(pv.begin() + static_cast<std::ptrdiff_t>(i * pc), pc,
                        out.begin() + static_cast<std::ptrdiff_t>(i * c + offset));
        offset += pc;
    }
    Tensor result = Tensor::from(r, c, std::move(out), needs);
    if (needs) {
        Node* on = result.node();
        std::vector<Node*> ins;
        for (const auto& p : parts) ins.push_back(p.node());
        tape.record(result, parts, [on, ins, r, c] {
            std::size_t off = 0;
            for (Node* in : ins) {
                const std::size_t pc = in->cols;
                if (in->requires_grad) {
                    for (std::size_t i = 0; i < r; ++i)
                        for (std::size_t j = 0; j < pc; ++j)
                            in->grad[i * pc + j] += on->grad[i * c + off + j];
                }
                off += pc;
            }
        });
    }
    return result;
}

Tensor concat_rows(Tape& tape, const std::vector<Tensor>& parts) {
    if (parts.empty()) throw DimensionError("concat_rows: no inputs");
    const std::size_t c = parts.front().cols();
    std::size_t r = 0;
    bool needs = false;
    for (const auto& p : parts) {
        if (p.cols() != c) shape_mismatch("concat_rows", parts.front(), p);
        r += p.rows();
        needs = needs || (tape.enabled() && p.requires_grad());
    }
    std::vector<double> out;
    out.reserve(r * c);
    for (const auto& p : parts) out.insert(out.end(), p.values().begin(), p.values().end());
    Tensor result = Tensor::from(r, c, std::move(out), needs);
    if (needs) {
        Node* on = result.node();
        std::vector<Node*> ins;
        for (const auto& p : parts) ins.push_back(p.node());
        tape.record(result, parts, [on, ins] {
            std::size_t off = 0;
            for (Node* in : ins) {
                const std::size_t len = in->value.size();
                if (in->requires_grad) {
                    for (std::size_t i = 0; i < len; ++i) in->grad[i] += on->grad[off + i];
                }
                off += len;
            }
        });
    }
    return result;
}

Tensor sum(Tape& tape, const Tensor& x) {
    double s = 0.0;
    for (double v : x.values()) s += v;
    Tensor result = make_output(tape, 1, 1, {s}, {&x});
    if (result.requires_grad()) {
        Node* on = result.node();
        Node* xn = x.node();
        tape.record(result, {x}, [on, xn] {
            const double g = on->grad[0];
            for (double& gx : xn->grad) gx += g;
        });
    }
    return result;
}

Tensor mean(Tape& tape, const Tensor& x) {
    return scale(tape, sum(tape, x), 1.0 / static_cast<double>(x.size()));
}

Tensor sum_axis(Tape& tape, const Tensor& x, Axis axis) {
    const std::size_t r = x.rows(), c = x.cols();
    const auto xv = x.values();
    const bool down = axis == Axis::rows;
    std::vector<double> out(down ? c : r, 0.0);
    for (std::size_t i = 0; i < r; ++i)
        for (std::size_t j = 0; j < c; ++j) out[down ? j : i] += xv[i * c + j];
    Tensor result = down ? make_output(tape, 1, c, std::move(out), {&x})
                         : make_output(tape, r, 1, std::move(out), {&x});
    if (result.requires_grad()) {
        Node* on = result.node();
        Node* xn = x.node();
        tape.record(result, {x}, [=] {
            for (std::size_t i = 0; i < r; ++i)
                for (std::size_t j = 0; j < c; ++j) xn->grad[i * c + j] += on->grad[down ? j : i];
        });
    }
    return result;
}

Tensor mean_axis(Tape& tape, const Tensor& x, Axis axis) {
    const double len = static_cast<double>(axis == Axis::rows ? x.rows() : x.cols());
    return scale(tape, sum_axis(tape, x, axis), 1.0 / len);
}

Tensor l2_norm(Tape& tape, const Tensor& x) {
    double ss = 0.0;
    for (double v : x.values()) ss += v * v;
    const double norm = std::sqrt(ss);
    Tensor result = make_output(tape, 1, 1, {norm}, {&x});
    if (result.requires_grad()) {
        Node* on = result.node();
        Node* xn = x.node();
        tape.record(result, {x}, [on, xn] {
            const double nv = on->value[0];
            if (nv == 0.0) return;
            const double g = on->grad[0] / nv;
            for (std::size_t i = 0; i < xn->value.size(); ++i) xn->grad[i] += g * xn->value[i];
        });
    }
    return result;
}

}  // namespace fg::diff
