#pragma once

#include <optional>
#include <random>
#include <vector>

#include "../block_encoder.hpp"
#include "../camera.hpp"

namespace voxnav::rl {

inline constexpr std::size_t kStateDim = 6;
inline constexpr std::size_t kActionDim = 5;

struct EnvConfig {
    int horizon = 32;
    double success_threshold = 0.98;
    double orientation_step = 0.1;  // quaternion change per unit action
    double depth_step = 0.2;        // depth change per unit action, in units of R
    double min_depth = 1.2;         // in units of R
    double max_depth = 4.0;
    int start_level = 2;            // icosphere level for random starts
    RewardMode mode = RewardMode::Block;
};

struct EnvState {
    Viewpoint viewpoint;
    int step = 0;
    EmbeddingVector goal;
    double last_reward = 0;
    bool empty = false;  // nothing visible at this viewpoint
};

struct StepResult {
    EnvState state;
    double reward = 0;
    bool done = false;
    bool success = false;
    bool aborted = false;  // degenerate orientation
};

/// Camera environment: incremental quaternion/depth actions, reward from a
/// RewardEvaluator in the configured mode.
class ViewpointEnv {
public:
    ViewpointEnv(const RewardEvaluator& evaluator, EnvConfig cfg = {})
        : eval_(&evaluator), cfg_(cfg), range_(DepthRange::for_radius(evaluator.radius(), cfg.min_depth, cfg.max_depth)),
          starts_(icosphere_face_directions(cfg.start_level)) {
        if (cfg_.horizon <= 0) throw ConfigError("environment horizon must be positive");
    }

    const EnvConfig& config() const { return cfg_; }
    const DepthRange& depth_range() const { return range_; }
    ActionScale action_scale() const { return {cfg_.orientation_step, cfg_.depth_step * eval_->radius()}; }

    RewardResult score(const Viewpoint& v, const EmbeddingVector& goal) const { return eval_->evaluate(v, goal, cfg_.mode); }

    /// A random start is a uniformly chosen icosphere direction at mid-range depth.
    Viewpoint random_start(std::uint64_t seed) const {
        std::mt19937_64 rng(mix_seed(seed, 0x57a27));
        const auto& d = starts_[std::uniform_int_distribution<std::size_t>(0, starts_.size() - 1)(rng)];
        Viewpoint v = viewpoint_from_direction(d, range_.mid());
        if (v.orientation.w < 0) v.orientation = v.orientation * -1.0;
        return v;
    }

    EnvState reset(const EmbeddingVector& goal, std::optional<Viewpoint> start, std::uint64_t seed) const {
        if (goal.is_zero() || !goal.all_finite()) throw ConfigError("goal embedding must be finite and nonzero");
        EnvState s;
        s.viewpoint = start ? *start : random_start(seed);
        s.goal = goal;
        const auto r = score(s.viewpoint, goal);
        s.last_reward = r.reward;
        s.empty = r.empty;
        return s;
    }

    /// Applies a (clipped) action and scores the new viewpoint.
    StepResult step(const EnvState& s, const Action& action) const {
        Action a = action;
        for (auto& x : a) x = std::clamp(x, -1.0, 1.0);
        StepResult out;
        out.state = s;
        out.state.step = s.step + 1;
        try {
            out.state.viewpoint = apply_action(s.viewpoint, a, action_scale(), range_);
            // q and -q are the same rotation; keep w >= 0 so the policy sees one representative.
            if (out.state.viewpoint.orientation.w < 0) out.state.viewpoint.orientation = out.state.viewpoint.orientation * -1.0;
        } catch (const DegenerateError&) {
            out.reward = -1;
            out.state.last_reward = -1;
            out.done = out.aborted = true;
            return out;
        }
        const auto r = score(out.state.viewpoint, s.goal);
        out.reward = r.reward;
        out.state.last_reward = r.reward;
        out.state.empty = r.empty;
        out.success = r.reward >= cfg_.success_threshold;
        out.done = out.success || out.state.step >= cfg_.horizon;
        return out;
    }

    /// Policy input: quaternion, depth mapped to [-1, 1], last reward.
    std::vector<double> observe(const EnvState& s) const {
        const Quat& q = s.viewpoint.orientation;
        const double d = 2 * (s.viewpoint.depth - range_.min) / (range_.max - range_.min) - 1;
        return {q.w, q.x, q.y, q.z, d, s.last_reward};
    }

private:
    const RewardEvaluator* eval_;
    EnvConfig cfg_;
    DepthRange range_;
    std::vector<Vec3> starts_;
};

} // namespace voxnav::rl
