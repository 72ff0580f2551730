#pragma once

#include "nxai/matrix.hpp"

#include <span>
#include <vector>

namespace nxai {

/// Adam with L2 weight decay folded into the gradient (PyTorch convention).
class Adam {
public:
    explicit Adam(double learning_rate, double weight_decay = 0.0, double beta1 = 0.9, double beta2 = 0.999,
                  double epsilon = 1e-8);

    /// Updates params in place. params and grads are matched by position and
    /// must keep the same shapes across calls.
    void step(std::span<DenseMatrix* const> params, std::span<const DenseMatrix* const> grads);

    double learning_rate() const noexcept { return lr_; }
    void set_learning_rate(double lr) noexcept { lr_ = lr; }

private:
    double lr_;
    double weight_decay_;
    double beta1_;
    double beta2_;
    double epsilon_;
    std::size_t t_ = 0;
    std::vector<DenseMatrix> m_;
    std::vector<DenseMatrix> v_;
};

} // namespace nxai
