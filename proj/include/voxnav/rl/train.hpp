#pragma once

#include <cmath>
#include <filesystem>
#include <functional>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "ppo.hpp"

namespace voxnav::rl {

/// Visited viewpoints of one rollout; entry 0 is the start state.
struct Trajectory {
    std::vector<Viewpoint> viewpoints;
    std::vector<double> rewards;
    bool success = false;
};

/// Deterministic rollout with the policy's mean action.
inline Trajectory greedy_rollout(const PolicyModel& model, const ViewpointEnv& env, const EmbeddingVector& goal,
                                 const Viewpoint& start) {
    Trajectory t;
    EnvState s = env.reset(goal, start, 0);
    t.viewpoints.push_back(s.viewpoint);
    t.rewards.push_back(s.last_reward);
    if (s.last_reward >= env.config().success_threshold) {
        t.success = true;
        return t;
    }
    while (true) {
        const auto r = env.step(s, policy_mean(model, env.observe(s)));
        if (r.aborted) break;
        s = r.state;
        t.viewpoints.push_back(s.viewpoint);
        t.rewards.push_back(r.reward);
        if (r.done) {
            t.success = r.success;
            break;
        }
    }
    return t;
}

/// Mean final reward of greedy rollouts from the given starts.
inline double greedy_score(const PolicyModel& model, const ViewpointEnv& env, const EmbeddingVector& goal,
                           const std::vector<Viewpoint>& starts) {
    double s = 0;
    for (const auto& v : starts) s += greedy_rollout(model, env, goal, v).rewards.back();
    return s / static_cast<double>(starts.size());
}

struct BestViewpoint {
    Viewpoint viewpoint;
    double reward = -std::numeric_limits<double>::infinity();
    Trajectory trajectory;  // the rollout that visited `viewpoint`
    std::size_t restart = 0;
};

/// Greedy rollouts from `start` (or a random start) plus `restarts - 1` random
/// starts; returns the earliest highest-reward viewpoint visited.
inline BestViewpoint best_viewpoint(const PolicyModel& model, const ViewpointEnv& env, const EmbeddingVector& goal,
                                    std::optional<Viewpoint> start, int restarts, std::uint64_t seed) {
    if (restarts < 1) throw ConfigError("restarts must be at least 1");
    BestViewpoint best;
    for (int r = 0; r < restarts; ++r) {
        const Viewpoint s0 = (r == 0 && start) ? *start : env.random_start(mix_seed(seed, static_cast<std::uint64_t>(r)));
        auto t = greedy_rollout(model, env, goal, s0);
        for (std::size_t i = 0; i < t.rewards.size(); ++i)
            if (t.rewards[i] > best.reward) {
                best.reward = t.rewards[i];
                best.viewpoint = t.viewpoints[i];
                best.trajectory = t;
                best.restart = static_cast<std::size_t>(r);
            }
    }
    return best;
}

struct EpisodeRecord {
    int episode = 0;
    double mean_reward = 0;
    double policy_loss = 0;
    double value_loss = 0;
};

inline std::string format_training_log(const std::vector<EpisodeRecord>& records) {
    std::ostringstream os;
    os.precision(10);
    for (const auto& r : records) os << r.episode << '\t' << r.mean_reward << '\t' << r.policy_loss << '\t' << r.value_loss << '\n';
    return os.str();
}

struct TrainOptions {
    std::filesystem::path checkpoint;  // written after every update when set
    bool resume = false;               // continue from `checkpoint` if it exists
    /// Called after every update; returning true stops training early.
    std::function<bool(const PolicyModel&, int episodes)> on_update;
};

struct TrainResult {
    std::vector<EpisodeRecord> episodes;
    std::vector<PPOStats> updates;
    int iterations = 0;
    std::size_t skipped_minibatches = 0;
};

struct Rollout {
    std::vector<Transition> transitions;
    std::vector<double> episode_mean_rewards;
};

/// Collects `cfg.episodes_per_update` episodes of at most `cfg.horizon` steps.
inline Rollout collect_rollouts(const PolicyModel& model, const ViewpointEnv& env, const std::vector<EmbeddingVector>& goals,
                                const PPOConfig& cfg, int first_episode, std::mt19937_64& rng) {
    Rollout out;
    for (int e = 0; e < cfg.episodes_per_update; ++e) {
        const int ep = first_episode + e;
        const auto& goal = goals[static_cast<std::size_t>(ep) % goals.size()];
        EnvState s = env.reset(goal, std::nullopt, mix_seed(cfg.seed, 1'000'000 + static_cast<std::uint64_t>(ep)));
        double sum = 0;
        int n = 0;
        for (int t = 0; t < cfg.horizon; ++t) {
            const auto obs = env.observe(s);
            const auto smp = policy_sample(model, obs, rng);
            auto r = env.step(s, smp.action);
            Transition tr{obs, smp.raw, smp.log_prob, r.reward, smp.value, false, 0};
            // Success and the horizon only bound episode length, so both bootstrap V(s');
            // an abort is a true terminal.
            if (r.done || t + 1 == cfg.horizon) {
                tr.done = true;
                tr.terminal_value = r.aborted ? 0.0 : model.evaluate(nn::Batch<double>(1, kStateDim, env.observe(r.state))).value(0, 0);
            }
            out.transitions.push_back(std::move(tr));
            sum += r.reward;
            ++n;
            s = r.state;
            if (r.done) break;
        }
        out.episode_mean_rewards.push_back(sum / n);
    }
    return out;
}

/// Alternates rollout collection and PPO updates until `cfg.max_episodes`.
/// Iteration i draws from mix_seed(seed, i), so a resumed run continues bit-identically.
inline TrainResult train(const ViewpointEnv& env, const std::vector<EmbeddingVector>& goals, PolicyModel& model,
                         const PPOConfig& cfg, const TrainOptions& opts = {}) {
    cfg.validate();
    if (goals.empty()) throw ConfigError("RL training needs at least one goal");
    nn::AdamW<double> opt({cfg.learning_rate, 0.9, 0.999, 1e-8, 0.0});
    const auto params = model.params();
    TrainResult result;
    int iteration = 0, episodes = 0;
    if (opts.resume && !opts.checkpoint.empty() && std::filesystem::exists(opts.checkpoint)) {
        const auto t = nn::read_checkpoint(opts.checkpoint);
        nn::restore(params, t);
        nn::restore_optimizer(opt, params, t, "adamw");
        for (const auto& x : t) {
            if (x.name == "train.iteration") iteration = static_cast<int>(x.values.at(0));
            if (x.name == "train.episodes") episodes = static_cast<int>(x.values.at(0));
        }
    }
    auto best = nn::snapshot(params);
    double best_reward = -std::numeric_limits<double>::infinity();
    auto save = [&](const std::vector<nn::NamedTensor>& values) {
        if (opts.checkpoint.empty()) return;
        auto t = values;
        for (auto& o : nn::snapshot_optimizer(opt, params, "adamw")) t.push_back(std::move(o));
        t.push_back({"train.iteration", {1}, {static_cast<double>(iteration)}});
        t.push_back({"train.episodes", {1}, {static_cast<double>(episodes)}});
        nn::write_checkpoint(opts.checkpoint, t);
    };

    while (episodes < cfg.max_episodes) {
        std::mt19937_64 rng(mix_seed(cfg.seed, static_cast<std::uint64_t>(iteration)));
        PPOConfig icfg = cfg;
        icfg.episodes_per_update = std::min(cfg.episodes_per_update, cfg.max_episodes - episodes);
        auto roll = collect_rollouts(model, env, goals, icfg, episodes, rng);
        double mean = 0;
        for (double r : roll.episode_mean_rewards) mean += r;
        mean /= static_cast<double>(roll.episode_mean_rewards.size());
        if (!std::isfinite(mean)) {
            nn::restore(params, best);
            save(best);
            throw TrainingError("mean episode reward is not finite; best checkpoint retained");
        }
        if (mean > best_reward) {
            best_reward = mean;
            best = nn::snapshot(params);
        }
        const auto batch = make_batch(std::move(roll.transitions), 0.0, cfg);
        const auto stats = ppo_update(model, opt, batch, cfg, rng);
        result.updates.push_back(stats);
        result.skipped_minibatches += stats.skipped;
        for (double r : roll.episode_mean_rewards)
            result.episodes.push_back({++episodes, r, stats.policy_loss, stats.value_loss});
        ++iteration;
        ++result.iterations;
        save(nn::snapshot(params));
        if (opts.on_update && opts.on_update(model, episodes)) break;
    }
    return result;
}

inline void save_policy(PolicyModel& model, const std::filesystem::path& path) {
    nn::write_checkpoint(path, nn::snapshot(model.params()));
}
inline void load_policy(PolicyModel& model, const std::filesystem::path& path) {
    nn::restore(model.params(), nn::read_checkpoint(path));
}

} // namespace voxnav::rl
