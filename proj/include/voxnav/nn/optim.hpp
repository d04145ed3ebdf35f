#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "../error.hpp"
#include "tensor.hpp"

namespace voxnav::nn {

struct AdamWConfig {
    double learning_rate = 5e-5;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    double weight_decay = 0.01;
};

/// AdamW with decoupled weight decay. Moments are bound to parameters by position,
/// so pass the same parameter list on every step.
template <class T>
class AdamW {
public:
    explicit AdamW(AdamWConfig cfg = {}) : cfg_(cfg) {}

    const AdamWConfig& config() const { return cfg_; }
    void set_learning_rate(double lr) { cfg_.learning_rate = lr; }
    long long step_count() const { return step_; }

    /// Leaves gradients untouched; callers zero them.
    void step(const std::vector<ParamTensor<T>*>& params) {
        for (const auto* p : params)
            for (T g : p->grad)
                if (!std::isfinite(static_cast<double>(g)))
                    throw NumericError("non-finite gradient in parameter '" + p->name + "'");
        if (first_.empty()) {
            for (const auto* p : params) {
                first_.emplace_back(p->size(), 0.0);
                second_.emplace_back(p->size(), 0.0);
            }
        }
        if (first_.size() != params.size()) throw LogicError("optimizer bound to a different parameter list");
        ++step_;
        const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(step_));
        const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(step_));
        for (std::size_t k = 0; k < params.size(); ++k) {
            auto& p = *params[k];
            auto& m = first_[k];
            auto& v = second_[k];
            if (m.size() != p.size()) throw LogicError("optimizer moments do not match parameter '" + p.name + "'");
            for (std::size_t i = 0; i < p.size(); ++i) {
                const double g = static_cast<double>(p.grad[i]);
                m[i] = cfg_.beta1 * m[i] + (1 - cfg_.beta1) * g;
                v[i] = cfg_.beta2 * v[i] + (1 - cfg_.beta2) * g * g;
                const double mhat = m[i] / bc1;
                const double vhat = v[i] / bc2;
                double w = static_cast<double>(p.values[i]);
                w -= cfg_.learning_rate * (mhat / (std::sqrt(vhat) + cfg_.epsilon) + cfg_.weight_decay * w);
                p.values[i] = static_cast<T>(w);
            }
        }
    }

    /// Moment buffers exposed for checkpointing.
    std::vector<std::vector<double>>& first_moments() { return first_; }
    std::vector<std::vector<double>>& second_moments() { return second_; }
    void set_step_count(long long s) { step_ = s; }

private:
    AdamWConfig cfg_;
    long long step_ = 0;
    std::vector<std::vector<double>> first_;
    std::vector<std::vector<double>> second_;
};

} // namespace voxnav::nn
