#include "fg/training/optimizer.hpp"

#include <cmath>

#include "fg/core/errors.hpp"

namespace fg {

void SgdMomentum::step(const std::vector<diff::Tensor>& params) {
    if (velocity_.empty()) {
        for (const auto& p : params) velocity_.emplace_back(p.size(), 0.0);
    }
    for (std::size_t i = 0; i < params.size(); ++i) {
        diff::Tensor p = params[i];
        auto val = p.mutable_values();
        auto g = p.mutable_grad();
        auto& v = velocity_[i];
        for (std::size_t j = 0; j < val.size(); ++j) {
            v[j] = momentum_ * v[j] + g[j];
            val[j] -= lr_ * v[j];
            g[j] = 0.0;
        }
    }
}

void Adam::step(const std::vector<diff::Tensor>& params) {
    if (m_.empty()) {
        for (const auto& p : params) {
            m_.emplace_back(p.size(), 0.0);
            v_.emplace_back(p.size(), 0.0);
        }
    }
    ++t_;
    const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
    for (std::size_t i = 0; i < params.size(); ++i) {
        diff::Tensor p = params[i];
        auto val = p.mutable_values();
        auto g = p.mutable_grad();
        for (std::size_t j = 0; j < val.size(); ++j) {
            m_[i][j] = beta1_ * m_[i][j] + (1.0 - beta1_) * g[j];
            v_[i][j] = beta2_ * v_[i][j] + (1.0 - beta2_) * g[j] * g[j];
            val[j] -= lr_ * (m_[i][j] / c1) / (std::sqrt(v_[i][j] / c2) + eps_);
            g[j] = 0.0;
        }
    }
}

std::unique_ptr<Optimizer> make_optimizer(const std::string& kind, double lr, double momentum) {
    if (!(lr > 0.0)) throw ConfigError("learning rate must be > 0");
    if (kind == "sgd") {
        if (!(momentum >= 0.0 && momentum < 1.0)) throw ConfigError("momentum must lie in [0, 1)");
        return std::make_unique<SgdMomentum>(lr, momentum);
    }
    if (kind == "adam") return std::make_unique<Adam>(lr);
    throw ConfigError("unknown optimizer '" + kind + "' (expected sgd or adam)");
}

double clip_grad_norm(const std::vector<diff::Tensor>& params, double max_norm) {
    double ss = 0.0;
    for (const auto& p : params)
        for (double g : p.grad()) ss += g * g;
    const double norm = std::sqrt(ss);
    if (max_norm > 0.0 && norm > max_norm) {
        const double s = max_norm / norm;
        for (const auto& p : params) {
            diff::Tensor t = p;
            for (auto& g : t.mutable_grad()) g *= s;
        }
    }
    return norm;
}

}  // namespace fg
