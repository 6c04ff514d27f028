#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "qdlearn/layers.hpp"

namespace qdlearn {

struct AdamConfig {
    double learning_rate = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
};

// Standard Adam with bias correction. Moment buffers are keyed by position in
// the parameter list, which must stay stable across steps.
class Adam {
public:
    explicit Adam(AdamConfig cfg = {}) : cfg_(cfg) {
        if (!(cfg.learning_rate >= 0.0)) throw std::invalid_argument("adam: bad learning rate");
    }

    void step(const std::vector<ParamView>& params) {
        if (m_.empty()) {
            for (const auto& p : params) {
                m_.emplace_back(p.size, 0.0);
                v_.emplace_back(p.size, 0.0);
            }
        }
        if (m_.size() != params.size())
            throw std::invalid_argument("adam: parameter list changed between steps");
        ++t_;
        const double corr1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
        const double corr2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
        for (std::size_t i = 0; i < params.size(); ++i) {
            double* p = params[i].value;
            const double* g = params[i].grad;
            double* m = m_[i].data();
            double* v = v_[i].data();
            for (std::size_t k = 0; k < params[i].size; ++k) {
                m[k] = cfg_.beta1 * m[k] + (1.0 - cfg_.beta1) * g[k];
                v[k] = cfg_.beta2 * v[k] + (1.0 - cfg_.beta2) * g[k] * g[k];
                const double m_hat = m[k] / corr1;
                const double v_hat = v[k] / corr2;
                p[k] -= cfg_.learning_rate * m_hat / (std::sqrt(v_hat) + cfg_.epsilon);
            }
        }
    }

    std::uint64_t step_count() const { return t_; }

private:
    AdamConfig cfg_;
    std::vector<std::vector<double>> m_, v_;
    std::uint64_t t_ = 0;
};

}  // namespace qdlearn
