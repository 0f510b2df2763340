#pragma once

#include <memory>
#include <string>
#include <vector>

#include "fg/diffcore/tensor.hpp"

namespace fg {

// Updates parameters in place from their accumulated grads, then zeroes them.
class Optimizer {
public:
    virtual ~Optimizer() = default;
    virtual void step(const std::vector<diff::Tensor>& params) = 0;
    virtual void set_learning_rate(double lr) = 0;
};

class SgdMomentum : public Optimizer {
public:
    SgdMomentum(double lr, double momentum) : lr_(lr), momentum_(momentum) {}
    void step(const std::vector<diff::Tensor>& params) override;
    void set_learning_rate(double lr) override { lr_ = lr; }

private:
    double lr_, momentum_;
    std::vector<std::vector<double>> velocity_;
};

class Adam : public Optimizer {
public:
    explicit Adam(double lr, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8)
        : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {}
    void step(const std::vector<diff::Tensor>& params) override;
    void set_learning_rate(double lr) override { lr_ = lr; }

private:
    double lr_, beta1_, beta2_, eps_;
    long t_ = 0;
    std::vector<std::vector<double>> m_, v_;
};

// kind is "sgd" or "adam"; throws ConfigError otherwise.
std::unique_ptr<Optimizer> make_optimizer(const std::string& kind, double lr, double momentum);

// Rescales all grads so their joint L2 norm is at most max_norm. Returns the norm before clipping.
double clip_grad_norm(const std::vector<diff::Tensor>& params, double max_norm);

}  // namespace fg
