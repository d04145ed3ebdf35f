#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <random>
#include <vector>

#include "../nn/checkpoint.hpp"
#include "../nn/network.hpp"
#include "../nn/optim.hpp"
#include "env.hpp"

namespace voxnav::rl {

inline const double kMinLogStd = std::log(1e-3);
inline constexpr double kMaxLogStd = 0.0;

/// Shared tanh trunk, tanh-squashed action mean, state-independent log-std and a value head.
class PolicyModel {
public:
    explicit PolicyModel(std::uint64_t seed = 0, double initial_log_std = -0.5, std::size_t hidden = 64)
        : log_std_("policy.log_std", {kActionDim}) {
        using nn::LayerSpec;
        trunk_ = nn::Sequential<double>::build("policy.trunk", kStateDim,
                                               {LayerSpec::dense(hidden), LayerSpec::tanh(), LayerSpec::dense(hidden),
                                                LayerSpec::tanh()});
        mean_ = nn::Sequential<double>::build("policy.mean", hidden, {LayerSpec::dense(kActionDim), LayerSpec::tanh()});
        value_ = nn::Sequential<double>::build("policy.value", hidden, {LayerSpec::dense(1)});
        trunk_.initialize(mix_seed(seed, 21));
        mean_.initialize(mix_seed(seed, 22));
        value_.initialize(mix_seed(seed, 23));
        // Small initial means keep early exploration driven by the noise.
        for (auto* p : mean_.params())
            for (auto& w : p->values) w *= 0.1;
        std::fill(log_std_.values.begin(), log_std_.values.end(), initial_log_std);
    }

    nn::Sequential<double>& trunk() { return trunk_; }
    nn::Sequential<double>& mean_head() { return mean_; }
    nn::Sequential<double>& value_head() { return value_; }
    const nn::Sequential<double>& trunk() const { return trunk_; }
    const nn::Sequential<double>& mean_head() const { return mean_; }
    const nn::Sequential<double>& value_head() const { return value_; }
    nn::ParamTensor<double>& log_std_param() { return log_std_; }

    /// Effective log standard deviation, clamped so std lies in [1e-3, 1].
    double log_std(std::size_t k) const { return std::clamp(log_std_.values[k], kMinLogStd, kMaxLogStd); }

    std::vector<nn::ParamTensor<double>*> params() {
        std::vector<nn::ParamTensor<double>*> out;
        for (auto* net : {&trunk_, &mean_, &value_})
            for (auto* p : net->params()) out.push_back(p);
        out.push_back(&log_std_);
        return out;
    }

    struct Output {
        nn::Batch<double> mean;   // rows x 5
        nn::Batch<double> value;  // rows x 1
    };
    Output evaluate(const nn::Batch<double>& states) const {
        const auto h = trunk_.predict(states);
        return {mean_.predict(h), value_.predict(h)};
    }

private:
    nn::Sequential<double> trunk_, mean_, value_;
    nn::ParamTensor<double> log_std_;
};

/// Diagonal Gaussian log density.
inline double gaussian_log_prob(const double* a, const double* mean, const double* log_std, std::size_t n) {
    double lp = 0;
    for (std::size_t k = 0; k < n; ++k) {
        const double z = (a[k] - mean[k]) / std::exp(log_std[k]);
        lp += -0.5 * z * z - log_std[k] - 0.5 * std::log(2 * std::numbers::pi);
    }
    return lp;
}

struct PolicySample {
    Action action{};  // clipped to the action box
    Action raw{};     // pre-clip sample; the log-probability refers to this
    Action mean{};
    double log_prob = 0;
    double value = 0;
};

inline PolicySample policy_sample(const PolicyModel& model, const std::vector<double>& state, std::mt19937_64& rng) {
    const auto out = model.evaluate(nn::Batch<double>(1, kStateDim, state));
    PolicySample s;
    std::array<double, kActionDim> ls{};
    std::normal_distribution<double> n(0, 1);
    for (std::size_t k = 0; k < kActionDim; ++k) {
        ls[k] = model.log_std(k);
        s.mean[k] = out.mean(0, k);
        s.raw[k] = s.mean[k] + std::exp(ls[k]) * n(rng);
        s.action[k] = std::clamp(s.raw[k], -1.0, 1.0);
    }
    s.log_prob = gaussian_log_prob(s.raw.data(), s.mean.data(), ls.data(), kActionDim);
    s.value = out.value(0, 0);
    return s;
}

/// Mean action, used for greedy rollouts.
inline Action policy_mean(const PolicyModel& model, const std::vector<double>& state) {
    const auto out = model.evaluate(nn::Batch<double>(1, kStateDim, state));
    Action a{};
    for (std::size_t k = 0; k < kActionDim; ++k) a[k] = out.mean(0, k);
    return a;
}

struct Transition {
    std::vector<double> state;
    Action action{};  // raw sample
    double log_prob = 0;
    double reward = 0;
    double value = 0;
    bool done = false;
    double terminal_value = 0;  // V(s_{t+1}) used when `done`: 0 for aborts, V otherwise
};

struct Gae {
    std::vector<double> advantages;  // raw A_t
    std::vector<double> returns;     // A_t + V(s_t)
};

/// Generalized advantage estimation over a time-ordered batch of one or more
/// episodes. `bootstrap` is V(s_T) after the final transition when it is not done.
inline Gae compute_gae(const std::vector<Transition>& ts, double bootstrap, double gamma, double lambda) {
    if (ts.empty()) throw LogicError("advantage estimation on an empty trajectory");
    const std::size_t T = ts.size();
    Gae g;
    g.advantages.resize(T);
    g.returns.resize(T);
    double running = 0;
    for (std::size_t t = T; t-- > 0;) {
        double next_value, carry;
        if (ts[t].done) {
            next_value = ts[t].terminal_value;
            carry = 0;
        } else {
            next_value = t + 1 < T ? ts[t + 1].value : bootstrap;
            carry = running;
        }
        const double delta = ts[t].reward + gamma * next_value - ts[t].value;
        running = delta + gamma * lambda * carry;
        g.advantages[t] = running;
        g.returns[t] = running + ts[t].value;
    }
    return g;
}

/// Zero mean, unit variance (up to a small floor on the deviation).
inline std::vector<double> normalize_advantages(const std::vector<double>& a) {
    const double n = static_cast<double>(a.size());
    const double mean = std::accumulate(a.begin(), a.end(), 0.0) / n;
    double var = 0;
    for (double x : a) var += (x - mean) * (x - mean);
    const double sd = std::sqrt(var / n);
    std::vector<double> out(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) out[i] = (a[i] - mean) / (sd + 1e-8);
    return out;
}

struct PPOConfig {
    double gamma = 0.99;
    double lambda = 0.95;
    double clip_epsilon = 0.2;
    bool clip = true;  // false disables clipping (plain ratio objective)
    int epochs = 4;
    std::size_t minibatch = 64;
    int horizon = 32;
    double entropy_coef = 0.01;
    double value_coef = 0.5;
    double learning_rate = 3e-4;
    int max_episodes = 500;
    int episodes_per_update = 4;
    std::uint64_t seed = 0;

    void validate() const {
        if (!(clip_epsilon > 0 && clip_epsilon < 1)) throw ConfigError("PPO clip epsilon must lie in (0, 1)");
        if (!(gamma > 0 && gamma <= 1) || !(lambda > 0 && lambda <= 1))
            throw ConfigError("PPO gamma and lambda must lie in (0, 1]");
        if (epochs <= 0 || minibatch == 0 || horizon <= 0 || episodes_per_update <= 0 || max_episodes < 0)
            throw ConfigError("PPO counts must be positive");
    }
};

/// A batch ready for optimization: transitions plus their normalized advantages and returns.
struct PPOBatch {
    std::vector<Transition> transitions;
    std::vector<double> advantages;
    std::vector<double> returns;
};

struct PPOStats {
    double policy_loss = 0;
    double value_loss = 0;
    double entropy = 0;
    std::size_t minibatches = 0;
    std::size_t skipped = 0;  // minibatches dropped for a non-finite ratio
};

/// Per-sample terms of the clipped surrogate and their gradients.
struct SurrogateTerms {
    double ratio = 1;
    double objective = 0;  // min(r A, clip(r) A)
    double d_log_prob = 0; // d objective / d log pi_new
};

inline SurrogateTerms clipped_surrogate(double log_prob_new, double log_prob_old, double advantage, double eps,
                                        bool clip) {
    SurrogateTerms s;
    s.ratio = std::exp(log_prob_new - log_prob_old);
    const double unclipped = s.ratio * advantage;
    if (!clip) {
        s.objective = unclipped;
        s.d_log_prob = unclipped;
        return s;
    }
    const double clipped = std::clamp(s.ratio, 1 - eps, 1 + eps) * advantage;
    if (unclipped <= clipped) {
        s.objective = unclipped;
        s.d_log_prob = unclipped;  // d(r A)/d log pi = r A
    } else {
        s.objective = clipped;  // clip saturated: constant in theta
        s.d_log_prob = 0;
    }
    return s;
}

/// Log-probabilities of the stored actions under the current policy.
inline std::vector<double> recompute_log_probs(const PolicyModel& model, const std::vector<Transition>& ts) {
    nn::Batch<double> states(ts.size(), kStateDim);
    for (std::size_t i = 0; i < ts.size(); ++i) std::copy(ts[i].state.begin(), ts[i].state.end(), states.row(i));
    const auto out = model.evaluate(states);
    std::array<double, kActionDim> ls{};
    for (std::size_t k = 0; k < kActionDim; ++k) ls[k] = model.log_std(k);
    std::vector<double> lp(ts.size());
    for (std::size_t i = 0; i < ts.size(); ++i) lp[i] = gaussian_log_prob(ts[i].action.data(), out.mean.row(i), ls.data(), kActionDim);
    return lp;
}

/// Loss = -mean(surrogate) + c_v mean((V - R)^2) - c_e H on one minibatch, with
/// gradients accumulated into the model. Returns false on a non-finite ratio.
inline bool ppo_minibatch_gradient(PolicyModel& model, const PPOBatch& batch, const std::vector<std::size_t>& idx,
                                   const PPOConfig& cfg, PPOStats& stats) {
    const std::size_t B = idx.size();
    nn::Batch<double> states(B, kStateDim);
    for (std::size_t r = 0; r < B; ++r) {
        const auto& s = batch.transitions[idx[r]].state;
        std::copy(s.begin(), s.end(), states.row(r));
    }
    const auto hpass = model.trunk().forward(states);
    const auto mpass = model.mean_head().forward(hpass.output());
    const auto vpass = model.value_head().forward(hpass.output());
    const auto& mean = mpass.output();
    const auto& value = vpass.output();
    std::array<double, kActionDim> ls{}, sd{};
    for (std::size_t k = 0; k < kActionDim; ++k) {
        ls[k] = model.log_std(k);
        sd[k] = std::exp(ls[k]);
    }

    nn::Batch<double> d_mean(B, kActionDim), d_value(B, 1);
    std::array<double, kActionDim> d_log_std{};
    double policy = 0, vloss = 0;
    const double inv_b = 1.0 / static_cast<double>(B);
    for (std::size_t r = 0; r < B; ++r) {
        const auto& t = batch.transitions[idx[r]];
        const double lp = gaussian_log_prob(t.action.data(), mean.row(r), ls.data(), kActionDim);
        const auto s = clipped_surrogate(lp, t.log_prob, batch.advantages[idx[r]], cfg.clip_epsilon, cfg.clip);
        if (!std::isfinite(s.ratio) || !std::isfinite(s.objective)) return false;
        policy -= s.objective * inv_b;
        const double g = -s.d_log_prob * inv_b;  // dLoss/dlog pi
        for (std::size_t k = 0; k < kActionDim; ++k) {
            const double z = (t.action[k] - mean(r, k)) / sd[k];
            d_mean(r, k) = g * z / sd[k];
            d_log_std[k] += g * (z * z - 1);
        }
        const double err = value(r, 0) - batch.returns[idx[r]];
        vloss += err * err * inv_b;
        d_value(r, 0) = cfg.value_coef * 2 * err * inv_b;
    }
    double entropy = 0;
    for (std::size_t k = 0; k < kActionDim; ++k) {
        entropy += ls[k] + 0.5 * (1 + std::log(2 * std::numbers::pi));
        d_log_std[k] -= cfg.entropy_coef;
    }
    auto dh = model.mean_head().backward(mpass, d_mean);
    const auto dhv = model.value_head().backward(vpass, d_value);
    for (std::size_t i = 0; i < dh.data.size(); ++i) dh.data[i] += dhv.data[i];
    model.trunk().backward(hpass, dh);
    auto& lsp = model.log_std_param();
    for (std::size_t k = 0; k < kActionDim; ++k)
        if (lsp.values[k] >= kMinLogStd && lsp.values[k] <= kMaxLogStd) lsp.grad[k] += d_log_std[k];
    stats.policy_loss += policy;
    stats.value_loss += vloss;
    stats.entropy += entropy;
    return true;
}

/// Epochs of shuffled minibatch AdamW steps on the PPO objective.
inline PPOStats ppo_update(PolicyModel& model, nn::AdamW<double>& opt, const PPOBatch& batch, const PPOConfig& cfg,
                           std::mt19937_64& rng) {
    if (batch.transitions.empty()) throw LogicError("PPO update on an empty batch");
    PPOStats stats;
    const auto params = model.params();
    std::vector<std::size_t> order(batch.transitions.size());
    std::iota(order.begin(), order.end(), 0);
    for (int e = 0; e < cfg.epochs; ++e) {
        std::shuffle(order.begin(), order.end(), rng);
        for (std::size_t s = 0; s < order.size(); s += cfg.minibatch) {
            const std::vector<std::size_t> idx(order.begin() + static_cast<std::ptrdiff_t>(s),
                                               order.begin() + static_cast<std::ptrdiff_t>(std::min(order.size(), s + cfg.minibatch)));
            nn::zero_grads(params);
            if (!ppo_minibatch_gradient(model, batch, idx, cfg, stats)) {
                ++stats.skipped;
                continue;
            }
            opt.step(params);
            ++stats.minibatches;
        }
    }
    if (stats.minibatches > 0) {
        const double n = static_cast<double>(stats.minibatches);
        stats.policy_loss /= n;
        stats.value_loss /= n;
        stats.entropy /= n;
    }
    // Keep the stored parameter inside the clamp so its gradient never dies.
    for (auto& v : model.log_std_param().values) v = std::clamp(v, kMinLogStd, kMaxLogStd);
    return stats;
}

inline PPOBatch make_batch(std::vector<Transition> ts, double bootstrap, const PPOConfig& cfg) {
    const auto g = compute_gae(ts, bootstrap, cfg.gamma, cfg.lambda);
    return {std::move(ts), normalize_advantages(g.advantages), g.returns};
}

} // namespace voxnav::rl
