#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <numbers>
#include <random>

#include "support/gradcheck.hpp"
#include "voxnav/rl/train.hpp"
#include "voxnav/toy.hpp"

using namespace voxnav;
using namespace voxnav::rl;

namespace {

/// A small toy scene with an untrained block encoder; rewards are smooth but arbitrary.
struct Scene {
    Volume vol = make_toy_volume(32);
    FrozenBlockEncoder enc{BlockEncoderModel({}, 3), BlockScene::build(vol, partition(vol, {2, 2, 2}))};
    RewardEvaluator eval{&enc, {}, vol.radius()};

    EmbeddingVector goal_at(const Viewpoint& v) const {
        return enc.encode(to_camera_frame(v, std::numbers::pi / 4, 1.0, vol.radius())).vector;
    }
};

const Scene& scene() {
    static const Scene s;
    return s;
}

Transition tr(double r, double v, bool done = false, double tv = 0) {
    Transition t;
    t.state.assign(kStateDim, 0.0);
    t.reward = r;
    t.value = v;
    t.done = done;
    t.terminal_value = tv;
    return t;
}

std::filesystem::path temp_path(const std::string& name) {
    return std::filesystem::temp_directory_path() / ("voxnav_rl_" + name);
}

} // namespace

// --- Advantage estimation ---------------------------------------------------

TEST(Gae, SingleStepUnitDiscountIsOneTermSum) {
    const auto g = compute_gae({tr(0.7, 0.2)}, 0.5, 1.0, 1.0);
    EXPECT_DOUBLE_EQ(g.advantages[0], 0.7 + 0.5 - 0.2);
    EXPECT_DOUBLE_EQ(g.returns[0], 0.7 + 0.5);
}

TEST(Gae, ZeroRewardsAndValuesGiveZeroAdvantages) {
    std::vector<Transition> ts(6, tr(0, 0));
    ts.back().done = true;
    for (double a : compute_gae(ts, 0, 0.99, 0.95).advantages) EXPECT_EQ(a, 0.0);
}

TEST(Gae, MatchesDirectDoubleLoop) {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(-1, 1);
    for (int trial = 0; trial < 20; ++trial) {
        std::vector<Transition> ts;
        for (int t = 0; t < 5; ++t) ts.push_back(tr(u(rng), u(rng)));
        const double boot = u(rng), gamma = 0.9 + 0.1 * std::abs(u(rng)), lambda = 0.8 + 0.2 * std::abs(u(rng));
        const auto g = compute_gae(ts, boot, gamma, lambda);
        std::vector<double> next(5);
        for (int t = 0; t < 5; ++t) next[t] = t + 1 < 5 ? ts[t + 1].value : boot;
        for (int t = 0; t < 5; ++t) {
            double a = 0;
            for (int l = 0; t + l < 5; ++l) {
                const double delta = ts[t + l].reward + gamma * next[t + l] - ts[t + l].value;
                a += std::pow(gamma * lambda, l) * delta;
            }
            EXPECT_NEAR(g.advantages[t], a, 1e-12);
            EXPECT_NEAR(g.returns[t], a + ts[t].value, 1e-12);
        }
    }
}

TEST(Gae, EpisodeBoundaryStopsTheSum) {
    // Two episodes back to back: the first ends done with V(s') = 0.4.
    std::vector<Transition> ts{tr(1, 0.1), tr(2, 0.2, true, 0.4), tr(3, 0.3), tr(4, 0.5)};
    const double g = 0.9, l = 0.8;
    const auto out = compute_gae(ts, 0.6, g, l);
    const double d1 = 2 + g * 0.4 - 0.2, d0 = 1 + g * 0.2 - 0.1;
    const double d3 = 4 + g * 0.6 - 0.5, d2 = 3 + g * 0.5 - 0.3;
    EXPECT_NEAR(out.advantages[1], d1, 1e-12);
    EXPECT_NEAR(out.advantages[0], d0 + g * l * d1, 1e-12);
    EXPECT_NEAR(out.advantages[3], d3, 1e-12);
    EXPECT_NEAR(out.advantages[2], d2 + g * l * d3, 1e-12);
}

TEST(Gae, EmptyTrajectoryIsLogicError) { EXPECT_THROW(compute_gae({}, 0, 0.99, 0.95), LogicError); }

TEST(Gae, NormalizedAdvantagesHaveZeroMeanUnitVariance) {
    const auto a = normalize_advantages({1, 4, -2, 7, 0.5});
    double m = 0, v = 0;
    for (double x : a) m += x;
    m /= 5;
    for (double x : a) v += (x - m) * (x - m);
    EXPECT_NEAR(m, 0, 1e-12);
    EXPECT_NEAR(v / 5, 1, 1e-8);
}

// --- Policy -----------------------------------------------------------------

TEST(Policy, LogProbMatchesClosedFormDensity) {
    PolicyModel m(4);
    std::mt19937_64 rng(5);
    const std::vector<double> s{0.5, 0.5, -0.5, 0.5, 0.1, 0.3};
    for (int i = 0; i < 10; ++i) {
        const auto smp = policy_sample(m, s, rng);
        double density = 1;
        for (std::size_t k = 0; k < kActionDim; ++k) {
            const double sd = std::exp(m.log_std(k)), z = (smp.raw[k] - smp.mean[k]) / sd;
            density *= std::exp(-0.5 * z * z) / (sd * std::sqrt(2 * std::numbers::pi));
        }
        EXPECT_NEAR(smp.log_prob, std::log(density), 1e-10);
        for (std::size_t k = 0; k < kActionDim; ++k) {
            EXPECT_GE(smp.action[k], -1.0);
            EXPECT_LE(smp.action[k], 1.0);
            EXPECT_EQ(smp.action[k], std::clamp(smp.raw[k], -1.0, 1.0));
        }
    }
}

TEST(Policy, EqualSeedsGiveIdenticalSamples) {
    PolicyModel m(4);
    std::mt19937_64 a(9), b(9);
    const std::vector<double> s(kStateDim, 0.2);
    for (int i = 0; i < 5; ++i) {
        const auto x = policy_sample(m, s, a), y = policy_sample(m, s, b);
        EXPECT_EQ(x.raw, y.raw);
        EXPECT_EQ(x.log_prob, y.log_prob);
    }
}

TEST(Policy, StdFloorGivesMeanAction) {
    PolicyModel m(4);
    for (auto& v : m.log_std_param().values) v = -50;
    for (std::size_t k = 0; k < kActionDim; ++k) EXPECT_DOUBLE_EQ(std::exp(m.log_std(k)), 1e-3);
    std::mt19937_64 rng(1);
    const std::vector<double> s(kStateDim, -0.3);
    const auto mean = policy_mean(m, s);
    for (int i = 0; i < 20; ++i) {
        const auto smp = policy_sample(m, s, rng);
        for (std::size_t k = 0; k < kActionDim; ++k) EXPECT_NEAR(smp.action[k], mean[k], 6e-3);
    }
}

TEST(Policy, StdCappedAtOne) {
    PolicyModel m(4, 3.0);
    for (std::size_t k = 0; k < kActionDim; ++k) EXPECT_EQ(m.log_std(k), 0.0);
}

// --- Surrogate --------------------------------------------------------------

TEST(Surrogate, ClipSaturationZeroesGradient) {
    const double eps = 0.2;
    const auto pos = clipped_surrogate(std::log(1 + 2 * eps), 0, 1.5, eps, true);
    EXPECT_NEAR(pos.ratio, 1 + 2 * eps, 1e-12);
    EXPECT_NEAR(pos.objective, (1 + eps) * 1.5, 1e-12);
    EXPECT_EQ(pos.d_log_prob, 0.0);
    const auto neg = clipped_surrogate(std::log(1 - 2 * eps), 0, -2.0, eps, true);
    EXPECT_NEAR(neg.objective, (1 - eps) * -2.0, 1e-12);
    EXPECT_EQ(neg.d_log_prob, 0.0);
    // Pessimistic side stays unclipped: A > 0 with a small ratio.
    const auto low = clipped_surrogate(std::log(0.5), 0, 1.0, eps, true);
    EXPECT_NEAR(low.objective, 0.5, 1e-12);
    EXPECT_NEAR(low.d_log_prob, 0.5, 1e-12);
}

TEST(Surrogate, ClipDisabledEqualsUnclippedObjective) {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(-1, 1);
    for (int i = 0; i < 50; ++i) {
        const double lp = u(rng), old = u(rng), a = 3 * u(rng);
        const auto s = clipped_surrogate(lp, old, a, 0.2, false);
        EXPECT_DOUBLE_EQ(s.objective, std::exp(lp - old) * a);
    }
}

namespace {

PPOBatch random_batch(const PolicyModel& m, std::size_t n, std::uint64_t seed, double lp_offset) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(-1, 1);
    std::vector<Transition> ts;
    for (std::size_t i = 0; i < n; ++i) {
        Transition t = tr(u(rng), u(rng));
        for (auto& x : t.state) x = u(rng);
        const auto smp = policy_sample(m, t.state, rng);
        t.action = smp.raw;
        t.log_prob = smp.log_prob + lp_offset * u(rng);
        ts.push_back(std::move(t));
    }
    ts.back().done = true;
    PPOConfig cfg;
    return make_batch(std::move(ts), 0, cfg);
}

double total_loss(PolicyModel& m, const PPOBatch& b, const PPOConfig& cfg) {
    std::vector<std::size_t> idx(b.transitions.size());
    std::iota(idx.begin(), idx.end(), 0);
    PPOStats st;
    nn::zero_grads(m.params());
    ppo_minibatch_gradient(m, b, idx, cfg, st);
    return st.policy_loss + cfg.value_coef * st.value_loss - cfg.entropy_coef * st.entropy;
}

} // namespace

TEST(Surrogate, SingleSampleHandComputed) {
    PolicyModel m(7);
    PPOConfig cfg;
    Transition t = tr(0.3, 0.1, true);
    t.state = {0.9, 0.1, -0.2, 0.3, 0.5, 0.4};
    t.action = {0.2, -0.1, 0.05, 0.3, -0.4};
    const auto out = m.evaluate(nn::Batch<double>(1, kStateDim, t.state));
    // Hand density from the model mean and std.
    double lp = 0;
    for (std::size_t k = 0; k < kActionDim; ++k) {
        const double sd = std::exp(m.log_std(k)), z = (t.action[k] - out.mean(0, k)) / sd;
        lp += -0.5 * z * z - std::log(sd) - 0.5 * std::log(2 * std::numbers::pi);
    }
    t.log_prob = lp - 0.1;  // ratio e^0.1 inside the clip window
    PPOBatch b{{t}, {0.8}, {0.9}};
    PPOStats st;
    ppo_minibatch_gradient(m, b, {0}, cfg, st);
    EXPECT_NEAR(st.policy_loss, -std::exp(0.1) * 0.8, 1e-12);
    EXPECT_NEAR(st.value_loss, (out.value(0, 0) - 0.9) * (out.value(0, 0) - 0.9), 1e-12);
    double h = 0;
    for (std::size_t k = 0; k < kActionDim; ++k) h += m.log_std(k) + 0.5 * (1 + std::log(2 * std::numbers::pi));
    EXPECT_NEAR(st.entropy, h, 1e-12);

    // Outside the window with A > 0 the clipped value is used.
    b.transitions[0].log_prob = lp - 0.5;
    PPOStats st2;
    ppo_minibatch_gradient(m, b, {0}, cfg, st2);
    EXPECT_NEAR(st2.policy_loss, -(1 + cfg.clip_epsilon) * 0.8, 1e-12);
}

TEST(Surrogate, IdentityRatioGivesZeroPolicyLoss) {
    PolicyModel m(8);
    const auto b = random_batch(m, 40, 2, 0.0);
    PPOStats st;
    std::vector<std::size_t> idx(40);
    std::iota(idx.begin(), idx.end(), 0);
    ppo_minibatch_gradient(m, b, idx, PPOConfig{}, st);
    EXPECT_NEAR(st.policy_loss, 0.0, 1e-12);
}

TEST(Surrogate, GradientMatchesFiniteDifferences) {
    PolicyModel m(12);
    for (auto& v : m.log_std_param().values) v = -0.7;
    const auto b = random_batch(m, 24, 4, 0.1);  // ratios within the clip window
    PPOConfig cfg;
    auto params = m.params();
    total_loss(m, b, cfg);
    std::vector<std::vector<double>> analytic;
    for (auto* p : params) analytic.push_back(p->grad);
    voxnav::testing::GradCheck gc;
    std::mt19937_64 pick(1);
    for (std::size_t pi = 0; pi < params.size(); ++pi) {
        auto* p = params[pi];
        for (int n = 0; n < 6; ++n) {
            const std::size_t i = pick() % p->size();
            const double num = voxnav::testing::central_difference(p->values[i], [&] { return total_loss(m, b, cfg); });
            voxnav::testing::record(gc, analytic[pi][i], num, p->name + "[" + std::to_string(i) + "]");
        }
    }
    EXPECT_LT(gc.max_rel_error, 1e-5) << gc.worst;
}

TEST(Surrogate, NonFiniteRatioSkipsUpdate) {
    PolicyModel m(8);
    auto b = random_batch(m, 8, 2, 0.0);
    for (auto& t : b.transitions) t.log_prob = -std::numeric_limits<double>::infinity();
    const auto before = nn::snapshot(m.params());
    nn::AdamW<double> opt({1e-3, 0.9, 0.999, 1e-8, 0});
    PPOConfig cfg;
    std::mt19937_64 rng(1);
    const auto st = ppo_update(m, opt, b, cfg, rng);
    EXPECT_EQ(st.minibatches, 0u);
    EXPECT_EQ(st.skipped, static_cast<std::size_t>(cfg.epochs));
    const auto after = nn::snapshot(m.params());
    for (std::size_t i = 0; i < before.size(); ++i) EXPECT_EQ(before[i].values, after[i].values);
}

TEST(Config, RejectsOutOfRange) {
    PPOConfig c;
    c.clip_epsilon = 1.0;
    EXPECT_THROW(c.validate(), ConfigError);
    c = {};
    c.gamma = 0;
    EXPECT_THROW(c.validate(), ConfigError);
    c = {};
    c.lambda = 1.5;
    EXPECT_THROW(c.validate(), ConfigError);
    c = {};
    c.minibatch = 0;
    EXPECT_THROW(c.validate(), ConfigError);
    EXPECT_NO_THROW(PPOConfig{}.validate());
}

// --- Environment ------------------------------------------------------------

TEST(Env, GivenStartIsEchoedExactly) {
    ViewpointEnv env(scene().eval);
    const Viewpoint v{Quat{0.3, -0.5, 0.7, 0.1}.normalized(), 2.0 * scene().vol.radius(), {}};
    const auto s = env.reset(scene().goal_at(v), v, 0);
    EXPECT_EQ(s.viewpoint.orientation, v.orientation);
    EXPECT_EQ(s.viewpoint.depth, v.depth);
    EXPECT_EQ(s.step, 0);
}

TEST(Env, RandomStartsAreSeededAndInRange) {
    ViewpointEnv env(scene().eval);
    EXPECT_EQ(env.random_start(5).orientation, env.random_start(5).orientation);
    for (std::uint64_t s = 0; s < 1000; ++s) {
        const auto v = env.random_start(s);
        EXPECT_GE(v.depth, env.depth_range().min);
        EXPECT_LE(v.depth, env.depth_range().max);
        EXPECT_NEAR(v.orientation.norm(), 1.0, 1e-12);
    }
}

TEST(Env, ZeroGoalRejected) {
    ViewpointEnv env(scene().eval);
    EXPECT_THROW(env.reset(EmbeddingVector{}, std::nullopt, 0), ConfigError);
}

TEST(Env, ZeroActionKeepsReward) {
    ViewpointEnv env(scene().eval);
    const auto start = env.random_start(3);
    const auto goal = scene().goal_at(env.random_start(4));
    const auto s = env.reset(goal, start, 0);
    const auto r = env.step(s, Action{});
    EXPECT_EQ(r.reward, env.score(start, goal).reward);
    EXPECT_EQ(r.reward, s.last_reward);
}

TEST(Env, SelfGoalSucceedsImmediately) {
    ViewpointEnv env(scene().eval);
    const auto start = env.random_start(3);
    const auto s = env.reset(scene().goal_at(start), start, 0);
    EXPECT_NEAR(s.last_reward, 1.0, 1e-12);
    const auto r = env.step(s, Action{});
    EXPECT_TRUE(r.done);
    EXPECT_TRUE(r.success);
}

TEST(Env, HorizonEndsWithoutSuccess) {
    EnvConfig cfg;
    cfg.horizon = 3;
    cfg.success_threshold = 2.0;  // unreachable
    ViewpointEnv env(scene().eval, cfg);
    auto s = env.reset(scene().goal_at(env.random_start(1)), env.random_start(2), 0);
    StepResult r;
    for (int i = 0; i < 3; ++i) {
        EXPECT_FALSE(r.done);
        r = env.step(s, Action{0.3, 0.1, 0, 0, 0.2});
        s = r.state;
    }
    EXPECT_TRUE(r.done);
    EXPECT_FALSE(r.success);
    EXPECT_EQ(r.state.step, 3);
}

TEST(Env, RandomActionsStayValidAndRewardsBounded) {
    ViewpointEnv env(scene().eval);
    std::mt19937_64 rng(21);
    std::uniform_real_distribution<double> u(-3, 3);  // beyond the box: clipped
    auto s = env.reset(scene().goal_at(env.random_start(7)), env.random_start(8), 0);
    for (int i = 0; i < 300; ++i) {
        Action a;
        for (auto& x : a) x = u(rng);
        const auto r = env.step(s, a);
        ASSERT_FALSE(r.aborted);
        EXPECT_GE(r.reward, -1.0);
        EXPECT_LE(r.reward, 1.0);
        EXPECT_NEAR(r.state.viewpoint.orientation.norm(), 1.0, 1e-12);
        EXPECT_GE(r.state.viewpoint.orientation.w, 0.0);
        EXPECT_GE(r.state.viewpoint.depth, env.depth_range().min);
        EXPECT_LE(r.state.viewpoint.depth, env.depth_range().max);
        s = r.state;
        s.step = 0;
        const auto obs = env.observe(s);
        ASSERT_EQ(obs.size(), kStateDim);
        EXPECT_GE(obs[4], -1.0 - 1e-12);
        EXPECT_LE(obs[4], 1.0 + 1e-12);
    }
}

TEST(Env, CollapsedOrientationAborts) {
    ViewpointEnv env(scene().eval, {.orientation_step = 1.0});
    const Viewpoint v{Quat{1, 0, 0, 0}, 2.6 * scene().vol.radius(), {}};
    const auto s = env.reset(scene().goal_at(v), v, 0);
    const auto r = env.step(s, Action{-1, 0, 0, 0, 0});
    EXPECT_TRUE(r.aborted);
    EXPECT_TRUE(r.done);
    EXPECT_EQ(r.reward, -1.0);
}

// --- Training ---------------------------------------------------------------

namespace {

struct TrainSetup {
    ViewpointEnv env{scene().eval};
    std::vector<EmbeddingVector> goals{scene().goal_at(viewpoint_from_direction({1, 0.5, 0.3}, 2.6 * scene().vol.radius()))};
    PPOConfig cfg = [] {
        PPOConfig c;
        c.max_episodes = 16;
        c.horizon = 8;
        c.seed = 5;
        return c;
    }();
};

} // namespace

TEST(Train, RatioIdentityAfterRollout) {
    TrainSetup t;
    PolicyModel m(1);
    std::mt19937_64 rng(2);
    const auto roll = collect_rollouts(m, t.env, t.goals, t.cfg, 0, rng);
    const auto lp = recompute_log_probs(m, roll.transitions);
    ASSERT_EQ(lp.size(), roll.transitions.size());
    for (std::size_t i = 0; i < lp.size(); ++i) EXPECT_EQ(lp[i], roll.transitions[i].log_prob) << i;
}

TEST(Train, SeededRunsAreBitIdentical) {
    TrainSetup t;
    PolicyModel a(1), b(1);
    const auto ra = train(t.env, t.goals, a, t.cfg), rb = train(t.env, t.goals, b, t.cfg);
    EXPECT_EQ(format_training_log(ra.episodes), format_training_log(rb.episodes));
    const auto pa = nn::snapshot(a.params()), pb = nn::snapshot(b.params());
    for (std::size_t i = 0; i < pa.size(); ++i) EXPECT_EQ(pa[i].values, pb[i].values);
}

TEST(Train, ResumeReproducesTrajectory) {
    TrainSetup t;
    const auto ckpt = temp_path("resume.ckpt");
    std::filesystem::remove(ckpt);
    PolicyModel full(1);
    const auto rf = train(t.env, t.goals, full, t.cfg);

    PolicyModel part(1);
    auto half = t.cfg;
    half.max_episodes = 8;
    train(t.env, t.goals, part, half, {ckpt});
    PolicyModel resumed(99);  // weights come from the checkpoint
    const auto rr = train(t.env, t.goals, resumed, t.cfg, {ckpt, true});
    ASSERT_EQ(rr.episodes.size(), 8u);
    for (std::size_t i = 0; i < 8; ++i) {
        EXPECT_EQ(rr.episodes[i].episode, rf.episodes[8 + i].episode);
        EXPECT_EQ(rr.episodes[i].mean_reward, rf.episodes[8 + i].mean_reward);
        EXPECT_EQ(rr.episodes[i].policy_loss, rf.episodes[8 + i].policy_loss);
    }
    const auto pf = nn::snapshot(full.params()), pr = nn::snapshot(resumed.params());
    for (std::size_t i = 0; i < pf.size(); ++i) EXPECT_EQ(pf[i].values, pr[i].values);
    std::filesystem::remove(ckpt);
}

TEST(Train, ZeroLearningRateLeavesPolicyAndFlatCurve) {
    TrainSetup t;
    t.cfg.learning_rate = 0;
    t.cfg.max_episodes = 60;
    PolicyModel m(1);
    const auto before = nn::snapshot(m.params());
    const auto r = train(t.env, t.goals, m, t.cfg);
    const auto after = nn::snapshot(m.params());
    for (std::size_t i = 0; i < before.size(); ++i) EXPECT_EQ(before[i].values, after[i].values);
    // No trend: least-squares slope within three standard errors of zero.
    const double n = static_cast<double>(r.episodes.size());
    double mx = 0, my = 0;
    for (const auto& e : r.episodes) {
        mx += e.episode;
        my += e.mean_reward;
    }
    mx /= n;
    my /= n;
    double sxx = 0, sxy = 0;
    for (const auto& e : r.episodes) {
        sxx += (e.episode - mx) * (e.episode - mx);
        sxy += (e.episode - mx) * (e.mean_reward - my);
    }
    const double slope = sxy / sxx;
    double sse = 0;
    for (const auto& e : r.episodes) {
        const double res = e.mean_reward - my - slope * (e.episode - mx);
        sse += res * res;
    }
    const double se = std::sqrt(sse / (n - 2) / sxx);
    EXPECT_LT(std::abs(slope), 3 * se + 1e-12);
}

TEST(Train, LogFormat) {
    const std::vector<EpisodeRecord> recs{{1, 0.5, -0.25, 2}, {2, 0.75, 0.125, 1}};
    EXPECT_EQ(format_training_log(recs), "1\t0.5\t-0.25\t2\n2\t0.75\t0.125\t1\n");
}

TEST(Train, EmptyGoalsRejected) {
    TrainSetup t;
    PolicyModel m(1);
    EXPECT_THROW(train(t.env, {}, m, t.cfg), ConfigError);
}

TEST(Train, PolicyFileRoundTrip) {
    PolicyModel a(3), b(4);
    const auto p = temp_path("policy.ckpt");
    save_policy(a, p);
    load_policy(b, p);
    const std::vector<double> s{0.1, 0.2, 0.3, 0.4, 0.5, 0.6};
    EXPECT_EQ(policy_mean(a, s), policy_mean(b, s));
    std::filesystem::remove(p);
}

// --- Inference --------------------------------------------------------------

TEST(BestViewpoint, GoalMatchingStartReturnedUnchanged) {
    ViewpointEnv env(scene().eval);
    PolicyModel m(2);
    const auto start = env.random_start(17);
    const auto best = best_viewpoint(m, env, scene().goal_at(start), start, 1, 0);
    EXPECT_EQ(best.viewpoint.orientation, start.orientation);
    EXPECT_EQ(best.viewpoint.depth, start.depth);
    EXPECT_EQ(best.trajectory.viewpoints.size(), 1u);
}

TEST(BestViewpoint, MoreRestartsNeverWorse) {
    ViewpointEnv env(scene().eval);
    PolicyModel m(2);
    const auto goal = scene().goal_at(env.random_start(40));
    double prev = -2;
    for (int k = 1; k <= 6; ++k) {
        const auto b = best_viewpoint(m, env, goal, std::nullopt, k, 9);
        EXPECT_GE(b.reward, prev);
        prev = b.reward;
    }
}

TEST(BestViewpoint, RewardMatchesReevaluation) {
    ViewpointEnv env(scene().eval);
    PolicyModel m(2);
    const auto goal = scene().goal_at(env.random_start(41));
    const auto b = best_viewpoint(m, env, goal, std::nullopt, 3, 1);
    EXPECT_EQ(b.reward, env.score(b.viewpoint, goal).reward);
}

TEST(BestViewpoint, ZeroRestartsRejected) {
    ViewpointEnv env(scene().eval);
    PolicyModel m(2);
    EXPECT_THROW(best_viewpoint(m, env, scene().goal_at(env.random_start(1)), std::nullopt, 0, 0), ConfigError);
}
