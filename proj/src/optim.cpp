#include "nxai/optim.hpp"

#include "nxai/error.hpp"

#include <cmath>

namespace nxai {

Adam::Adam(double learning_rate, double weight_decay, double beta1, double beta2, double epsilon)
    : lr_(learning_rate), weight_decay_(weight_decay), beta1_(beta1), beta2_(beta2), epsilon_(epsilon) {}

void Adam::step(std::span<DenseMatrix* const> params, std::span<const DenseMatrix* const> grads) {
    if (params.size() != grads.size()) {
        throw ShapeError("Adam::step: parameter/gradient count mismatch");
    }
    if (m_.empty()) {
        for (const auto* p : params) {
            m_.emplace_back(p->rows(), p->cols());
            v_.emplace_back(p->rows(), p->cols());
        }
    }
    if (m_.size() != params.size()) {
        throw ShapeError("Adam::step: parameter count changed between steps");
    }
    ++t_;
    const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
    for (std::size_t k = 0; k < params.size(); ++k) {
        auto& p = params[k]->data();
        const auto& g = grads[k]->data();
        auto& m = m_[k].data();
        auto& v = v_[k].data();
        if (g.size() != p.size() || m.size() != p.size()) {
            throw ShapeError("Adam::step: shape mismatch");
        }
        for (std::size_t i = 0; i < p.size(); ++i) {
            const double gi = g[i] + weight_decay_ * p[i];
            m[i] = beta1_ * m[i] + (1.0 - beta1_) * gi;
            v[i] = beta2_ * v[i] + (1.0 - beta2_) * gi * gi;
            p[i] -= lr_ * (m[i] / c1) / (std::sqrt(v[i] / c2) + epsilon_);
        }
    }
}

} // namespace nxai
