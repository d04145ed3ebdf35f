#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <numbers>
#include <numeric>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "camera.hpp"
#include "embedding/alignment.hpp"
#include "nn/checkpoint.hpp"
#include "nn/loss.hpp"
#include "nn/network.hpp"
#include "nn/optim.hpp"
#include "render.hpp"
#include "volume.hpp"

namespace voxnav {

struct BlockEncoderDims {
    std::size_t lattice = 16;     // blocks are resampled to lattice^3 voxels
    std::size_t conv1 = 8;
    std::size_t conv2 = 16;
    std::size_t feature = 128;    // d_f
    std::size_t positional = 32;  // d_p
    std::size_t hidden = 512;
    std::size_t embedding = kEmbeddingDim;  // d_e
};

/// Trilinear resampling of a block onto an L^3 lattice of cell centres. Each
/// interpolation step is a + t(b - a), so a constant block resamples exactly.
inline std::vector<double> resample_block(const ScalarField& block, std::size_t L) {
    const Int3 d = block.dims;
    if (d.x <= 0 || d.y <= 0 || d.z <= 0 || L == 0) throw LogicError("cannot resample an empty block");
    struct Tap {
        int i0, i1;
        double t;
    };
    auto taps = [&](int n) {
        std::vector<Tap> out(L);
        for (std::size_t i = 0; i < L; ++i) {
            const double u = std::clamp((static_cast<double>(i) + 0.5) * n / static_cast<double>(L) - 0.5, 0.0,
                                        static_cast<double>(n - 1));
            const int i0 = static_cast<int>(std::floor(u));
            out[i] = {i0, std::min(i0 + 1, n - 1), u - i0};
        }
        return out;
    };
    const auto tx = taps(d.x), ty = taps(d.y), tz = taps(d.z);
    auto lerp = [](double a, double b, double t) { return a + t * (b - a); };
    std::vector<double> out(L * L * L);
    for (std::size_t z = 0; z < L; ++z)
        for (std::size_t y = 0; y < L; ++y)
            for (std::size_t x = 0; x < L; ++x) {
                const auto& X = tx[x];
                const auto& Y = ty[y];
                const auto& Z = tz[z];
                auto row = [&](int yy, int zz) { return lerp(block.at(X.i0, yy, zz), block.at(X.i1, yy, zz), X.t); };
                const double v0 = lerp(row(Y.i0, Z.i0), row(Y.i1, Z.i0), Y.t);
                const double v1 = lerp(row(Y.i0, Z.i1), row(Y.i1, Z.i1), Y.t);
                out[(z * L + y) * L + x] = lerp(v0, v1, Z.t);
            }
    return out;
}

/// Feature net f, positional net p* and fusion net e. The fusion net's final
/// dense layer is kept separate because it is linear: pooling before it gives
/// the same mean as pooling the per-block outputs.
class BlockEncoderModel {
public:
    explicit BlockEncoderModel(BlockEncoderDims dims = {}, std::uint64_t seed = 0) : dims_(dims) {
        using nn::LayerSpec;
        const std::size_t L = dims.lattice;
        feature_ = nn::Sequential<double>::build("feature", L * L * L,
                                                 {LayerSpec::conv3d(dims.conv1, 3, 2, 1), LayerSpec::relu(),
                                                  LayerSpec::conv3d(dims.conv2, 3, 2, 1), LayerSpec::relu(),
                                                  LayerSpec::global_avg_pool(), LayerSpec::dense(dims.feature)},
                                                 1, L);
        positional_ = nn::Sequential<double>::build(
            "positional", 3, {LayerSpec::dense(dims.positional), LayerSpec::relu(), LayerSpec::dense(dims.positional)});
        fusion_ = nn::Sequential<double>::build("fusion", dims.feature + dims.positional,
                                                {LayerSpec::dense(dims.hidden), LayerSpec::relu()});
        fusion_out_ = nn::Sequential<double>::build("fusion_out", dims.hidden, {LayerSpec::dense(dims.embedding)});
        feature_.initialize(mix_seed(seed, 11));
        positional_.initialize(mix_seed(seed, 12));
        fusion_.initialize(mix_seed(seed, 13));
        fusion_out_.initialize(mix_seed(seed, 14));
    }

    const BlockEncoderDims& dims() const { return dims_; }
    nn::Sequential<double>& feature_net() { return feature_; }
    nn::Sequential<double>& positional_net() { return positional_; }
    nn::Sequential<double>& fusion_net() { return fusion_; }
    nn::Sequential<double>& fusion_output() { return fusion_out_; }
    const nn::Sequential<double>& feature_net() const { return feature_; }
    const nn::Sequential<double>& positional_net() const { return positional_; }
    const nn::Sequential<double>& fusion_net() const { return fusion_; }
    const nn::Sequential<double>& fusion_output() const { return fusion_out_; }

    std::vector<nn::ParamTensor<double>*> params() {
        std::vector<nn::ParamTensor<double>*> out;
        for (auto* net : {&feature_, &positional_, &fusion_, &fusion_out_})
            for (auto* p : net->params()) out.push_back(p);
        return out;
    }
    void zero_parameters() {
        for (auto* p : params()) std::fill(p->values.begin(), p->values.end(), 0.0);
    }
    bool all_finite() {
        for (auto* p : params())
            if (!p->all_finite()) return false;
        return true;
    }

    void save(const std::filesystem::path& path) { nn::write_checkpoint(path, nn::snapshot(params())); }
    void load(const std::filesystem::path& path) { nn::restore(params(), nn::read_checkpoint(path)); }

private:
    BlockEncoderDims dims_;
    nn::Sequential<double> feature_, positional_, fusion_, fusion_out_;
};

/// e_j for one block: fusion([f(resampled voxels) ; p*(p_ij / d_max)]).
inline std::vector<double> encode_block(const BlockEncoderModel& model, const std::vector<double>& lattice,
                                        const Vec3& p_cam, double d_max) {
    const std::size_t L = model.dims().lattice;
    if (lattice.size() != L * L * L)
        throw LogicError("block lattice has " + std::to_string(lattice.size()) + " voxels, model expects " +
                         std::to_string(L * L * L));
    if (!(d_max > 0) || !std::isfinite(p_cam.x) || !std::isfinite(p_cam.y) || !std::isfinite(p_cam.z))
        throw LogicError("block position must be finite and d_max positive");
    const auto f = model.feature_net().predict(nn::Batch<double>(1, lattice.size(), lattice));
    const auto p = model.positional_net().predict(nn::Batch<double>(1, 3, {p_cam.x / d_max, p_cam.y / d_max, p_cam.z / d_max}));
    std::vector<double> x(f.data);
    x.insert(x.end(), p.data.begin(), p.data.end());
    const auto h = model.fusion_net().predict(nn::Batch<double>(1, x.size(), x));
    return model.fusion_output().predict(h).data;
}

inline std::vector<double> encode_block(const BlockEncoderModel& model, const ScalarField& voxels, const Vec3& p_cam,
                                        double d_max) {
    return encode_block(model, resample_block(voxels, model.dims().lattice), p_cam, d_max);
}

/// Resampled block lattices of a partitioned volume and the positional scale d_max.
struct BlockScene {
    BlockGrid grid{{0, 0, 0}, {0, 0, 0}, {}};
    double d_max = 0;
    std::size_t lattice = 16;
    nn::Batch<double> lattices;  // one row per block

    static BlockScene build(const Volume& vol, const BlockGrid& grid, std::size_t lattice = 16, double d_max = 0) {
        BlockScene s;
        s.grid = grid;
        s.d_max = d_max > 0 ? d_max : DepthRange::for_radius(vol.radius()).max;
        s.lattice = lattice;
        const std::size_t n = lattice * lattice * lattice;
        s.lattices = nn::Batch<double>(grid.size(), n);
        for (std::size_t j = 0; j < grid.size(); ++j) {
            const auto r = resample_block(block_voxels(vol, grid[j]), lattice);
            std::copy(r.begin(), r.end(), s.lattices.row(j));
        }
        return s;
    }
};

/// Pooled view embedding. `empty` marks the zero sentinel of an empty visibility set.
struct ViewEmbedding {
    EmbeddingVector vector;
    std::vector<std::size_t> blocks;
    bool empty = true;
};

/// Visibility and camera-space block centres for a fixed list of frames.
struct ViewGeometry {
    std::vector<std::vector<std::size_t>> visible;  // per frame, ascending block index
    std::vector<std::size_t> row_block;             // per (frame, visible block) row
    std::vector<std::size_t> row_view;              // index into `views`
    std::vector<std::size_t> views;                 // frames with a nonempty visibility set
    nn::Batch<double> positions;                    // p_ij / d_max per row
};

inline ViewGeometry view_geometry(const BlockScene& scene, const std::vector<CameraFrame>& frames) {
    ViewGeometry g;
    std::vector<double> pos;
    for (std::size_t v = 0; v < frames.size(); ++v) {
        g.visible.push_back(visible_blocks(scene.grid, frames[v]));
        if (g.visible.back().empty()) continue;
        const std::size_t slot = g.views.size();
        g.views.push_back(v);
        for (auto j : g.visible.back()) {
            const Vec3 p = project_block(scene.grid[j], frames[v]) * (1.0 / scene.d_max);
            pos.insert(pos.end(), {p.x, p.y, p.z});
            g.row_block.push_back(j);
            g.row_view.push_back(slot);
        }
    }
    g.positions = nn::Batch<double>(g.row_block.size(), 3, std::move(pos));
    return g;
}

/// Forward state of a batch of views, kept for the backward pass.
struct ViewPass {
    nn::ForwardPass<double> positional, fusion, output;
    std::vector<double> counts;  // visible blocks per pooled row
};

/// Pooled embeddings (one row per nonempty view) from per-block features.
/// Rows are summed in ascending block order within each view, whatever their enumeration order.
inline ViewPass view_forward(const BlockEncoderModel& model, const nn::Batch<double>& features, const ViewGeometry& g) {
    ViewPass pass;
    const std::size_t df = model.dims().feature, dp = model.dims().positional, H = model.dims().hidden;
    const std::size_t rows = g.row_block.size();
    pass.positional = model.positional_net().forward(g.positions);
    nn::Batch<double> x(rows, df + dp);
    for (std::size_t r = 0; r < rows; ++r) {
        std::copy_n(features.row(g.row_block[r]), df, x.row(r));
        std::copy_n(pass.positional.output().row(r), dp, x.row(r) + df);
    }
    pass.fusion = model.fusion_net().forward(x);
    const auto& h = pass.fusion.output();
    nn::Batch<double> pooled(g.views.size(), H);
    pass.counts.assign(g.views.size(), 0.0);
    std::vector<std::size_t> order(rows);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return std::pair(g.row_view[a], g.row_block[a]) < std::pair(g.row_view[b], g.row_block[b]);
    });
    for (std::size_t r : order) {
        nn::kernels::axpy(H, 1.0, h.row(r), pooled.row(g.row_view[r]));
        pass.counts[g.row_view[r]] += 1;
    }
    for (std::size_t v = 0; v < pooled.rows; ++v)
        for (std::size_t c = 0; c < H; ++c) pooled(v, c) /= pass.counts[v];
    pass.output = model.fusion_output().forward(pooled);
    return pass;
}

/// Backpropagates dL/d(pooled embeddings) into the fusion and positional nets
/// and returns dL/d(features) per block.
inline nn::Batch<double> view_backward(BlockEncoderModel& model, const ViewPass& pass, const ViewGeometry& g,
                                       const nn::Batch<double>& d_embed, std::size_t blocks) {
    const std::size_t df = model.dims().feature, dp = model.dims().positional, H = model.dims().hidden;
    const auto d_pooled = model.fusion_output().backward(pass.output, d_embed);
    nn::Batch<double> dh(g.row_block.size(), H);
    for (std::size_t r = 0; r < dh.rows; ++r) {
        const double inv = 1.0 / pass.counts[g.row_view[r]];
        for (std::size_t c = 0; c < H; ++c) dh(r, c) = d_pooled(g.row_view[r], c) * inv;
    }
    const auto dx = model.fusion_net().backward(pass.fusion, dh);
    nn::Batch<double> dpos(dx.rows, dp), dfeat(blocks, df);
    for (std::size_t r = 0; r < dx.rows; ++r) {
        std::copy_n(dx.row(r) + df, dp, dpos.row(r));
        nn::kernels::axpy(df, 1.0, dx.row(r), dfeat.row(g.row_block[r]));
    }
    model.positional_net().backward(pass.positional, dpos);
    return dfeat;
}

inline nn::Batch<double> block_features(const BlockEncoderModel& model, const BlockScene& scene) {
    if (scene.lattice != model.dims().lattice) throw LogicError("scene lattice does not match the model");
    return model.feature_net().predict(scene.lattices);
}

/// ê for one frame given precomputed block features.
inline ViewEmbedding encode_view(const BlockEncoderModel& model, const BlockScene& scene,
                                 const nn::Batch<double>& features, const CameraFrame& frame) {
    const auto g = view_geometry(scene, {frame});
    ViewEmbedding out;
    out.blocks = g.visible[0];
    if (g.views.empty()) return out;
    out.vector = EmbeddingVector(view_forward(model, features, g).output.output().data);
    out.empty = false;
    return out;
}

inline ViewEmbedding encode_view(const BlockEncoderModel& model, const BlockScene& scene, const CameraFrame& frame) {
    return encode_view(model, scene, block_features(model, scene), frame);
}

struct BlockEncoderConfig {
    std::size_t steps = 3000;
    double learning_rate = 1e-3;
    double weight_decay = 0.0;
    std::size_t views_per_step = 0;  // 0 trains on every nonempty view each step
    std::uint64_t seed = 0;
    std::filesystem::path checkpoint;  // written at the end when set
};

struct BlockEncoderResult {
    std::vector<double> loss_curve;  // step k's (minibatch) loss before its update, then the full final loss
    double final_loss = 0;
    std::size_t used_views = 0;
    std::size_t empty_views = 0;
};

/// Mean over nonempty views of 1 - cos(ê_v, target_v); accumulates gradients when `backprop`.
inline double block_encoder_loss(BlockEncoderModel& model, const BlockScene& scene, const ViewGeometry& g,
                                 const std::vector<EmbeddingVector>& targets, bool backprop) {
    if (g.views.empty()) throw ConfigError("no viewpoint sees any block");
    const auto fpass = model.feature_net().forward(scene.lattices);
    const auto pass = view_forward(model, fpass.output(), g);
    const auto& e = pass.output.output();
    const double inv_v = 1.0 / static_cast<double>(g.views.size());
    double loss = 0;
    nn::Batch<double> d_embed(e.rows, e.cols);
    for (std::size_t v = 0; v < g.views.size(); ++v) {
        const auto& t = targets[g.views[v]];
        const auto c = nn::cosine_embedding_loss(e.row(v), t.data(), e.cols);
        loss += c.loss * inv_v;
        for (std::size_t k = 0; k < e.cols; ++k) d_embed(v, k) = c.grad[k] * inv_v;
    }
    if (backprop) {
        const auto dfeat = view_backward(model, pass, g, d_embed, scene.lattices.rows);
        model.feature_net().backward(fpass, dfeat);
    }
    return loss;
}

/// The pooled rows of `keep` (indices into g.views), in the given order.
inline ViewGeometry subset_views(const ViewGeometry& g, const std::vector<std::size_t>& keep) {
    std::vector<std::size_t> slot(g.views.size(), SIZE_MAX);
    ViewGeometry out;
    out.visible = g.visible;
    for (std::size_t k = 0; k < keep.size(); ++k) {
        slot[keep[k]] = k;
        out.views.push_back(g.views[keep[k]]);
    }
    std::vector<double> pos;
    for (std::size_t r = 0; r < g.row_block.size(); ++r) {
        if (slot[g.row_view[r]] == SIZE_MAX) continue;
        out.row_block.push_back(g.row_block[r]);
        out.row_view.push_back(slot[g.row_view[r]]);
        pos.insert(pos.end(), g.positions.row(r), g.positions.row(r) + 3);
    }
    out.positions = nn::Batch<double>(out.row_block.size(), 3, std::move(pos));
    return out;
}

/// AdamW on the cosine embedding loss, over every view or a seeded random
/// subset of `views_per_step` views per step.
inline BlockEncoderResult train_block_encoder(BlockEncoderModel& model, const BlockScene& scene,
                                              const std::vector<CameraFrame>& frames,
                                              const std::vector<EmbeddingVector>& targets,
                                              const BlockEncoderConfig& cfg) {
    if (frames.size() != targets.size()) throw ConfigError("block encoder needs one target per viewpoint");
    for (const auto& t : targets)
        if (!t.all_finite() || t.is_zero()) throw ConfigError("block encoder targets must be finite and nonzero");
    const auto g = view_geometry(scene, frames);
    if (g.views.empty()) throw ConfigError("no viewpoint in the training set sees any block");
    BlockEncoderResult out;
    out.used_views = g.views.size();
    out.empty_views = frames.size() - g.views.size();
    nn::AdamW<double> opt({cfg.learning_rate, 0.9, 0.999, 1e-8, cfg.weight_decay});
    const auto params = model.params();
    const bool minibatch = cfg.views_per_step > 0 && cfg.views_per_step < g.views.size();
    std::vector<std::size_t> order(g.views.size());
    for (std::size_t s = 0; s < cfg.steps; ++s) {
        nn::zero_grads(params);
        double l = 0;
        if (minibatch) {
            std::iota(order.begin(), order.end(), 0);
            std::mt19937_64 rng(mix_seed(cfg.seed, s));
            for (std::size_t i = 0; i < cfg.views_per_step; ++i)
                std::swap(order[i], order[std::uniform_int_distribution<std::size_t>(i, order.size() - 1)(rng)]);
            std::vector<std::size_t> keep(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(cfg.views_per_step));
            std::sort(keep.begin(), keep.end());
            l = block_encoder_loss(model, scene, subset_views(g, keep), targets, true);
        } else {
            l = block_encoder_loss(model, scene, g, targets, true);
        }
        if (!std::isfinite(l)) throw TrainingError("block encoder loss is not finite at step " + std::to_string(s));
        out.loss_curve.push_back(l);
        opt.step(params);
    }
    out.final_loss = block_encoder_loss(model, scene, g, targets, false);
    out.loss_curve.push_back(out.final_loss);
    if (!cfg.checkpoint.empty()) model.save(cfg.checkpoint);
    return out;
}

inline std::vector<CameraFrame> frames_for(const ViewpointSet& set, double radius, double fov = std::numbers::pi / 4,
                                           double aspect = 1.0) {
    std::vector<CameraFrame> out;
    out.reserve(set.size());
    for (const auto& v : set.viewpoints) out.push_back(to_camera_frame(v, fov, aspect, radius));
    return out;
}

/// Trained encoder bound to one scene, with block features computed once.
class FrozenBlockEncoder {
public:
    FrozenBlockEncoder(BlockEncoderModel model, BlockScene scene)
        : model_(std::move(model)), scene_(std::move(scene)), features_(block_features(model_, scene_)) {}

    ViewEmbedding encode(const CameraFrame& frame) const { return encode_view(model_, scene_, features_, frame); }
    const BlockEncoderModel& model() const { return model_; }
    const BlockScene& scene() const { return scene_; }

private:
    BlockEncoderModel model_;
    BlockScene scene_;
    nn::Batch<double> features_;
};

struct RewardResult {
    double reward = -1;
    bool empty = false;  // nothing visible (block mode): worst reward
};

/// cos(ê, g); an empty visibility set (or a degenerate zero ê) gives -1.
inline RewardResult reward_block(const FrozenBlockEncoder& enc, const CameraFrame& frame, const EmbeddingVector& goal) {
    const auto view = enc.encode(frame);
    if (view.empty || view.vector.is_zero()) return {-1.0, true};
    return {cosine(view.vector, goal), false};
}

inline RewardResult reward_image(const SemanticBackbone& backbone, const Image& rendered, const EmbeddingVector& goal) {
    return {cosine(backbone.embed_image(rendered), goal), false};
}

enum class RewardMode { Block, Image };

inline RewardMode parse_reward_mode(std::string_view s) {
    if (s == "block") return RewardMode::Block;
    if (s == "image") return RewardMode::Image;
    throw ConfigError("reward mode must be 'block' or 'image', got '" + std::string(s) + "'");
}
inline std::string to_string(RewardMode m) { return m == RewardMode::Block ? "block" : "image"; }

/// Scores viewpoints against a goal in either reward mode.
class RewardEvaluator {
public:
    struct ImageSettings {
        const Volume* volume = nullptr;
        const TransferFunction* tf = nullptr;
        const SemanticBackbone* backbone = nullptr;
        RenderSettings render;
        int size = 256;
    };

    RewardEvaluator(const FrozenBlockEncoder* block, ImageSettings image, double radius,
                    double fov = std::numbers::pi / 4)
        : block_(block), image_(image), radius_(radius), fov_(fov) {}

    RewardResult evaluate(const Viewpoint& v, const EmbeddingVector& goal, RewardMode mode) const {
        const CameraFrame f = to_camera_frame(v, fov_, 1.0, radius_);
        if (mode == RewardMode::Block) {
            if (!block_) throw ConfigError("block reward mode needs a trained block encoder");
            return reward_block(*block_, f, goal);
        }
        if (!image_.volume || !image_.tf || !image_.backbone)
            throw ConfigError("image reward mode needs a volume, transfer function and embedding backbone");
        return reward_image(*image_.backbone, render(*image_.volume, *image_.tf, f, image_.render, image_.size, image_.size),
                            goal);
    }

    double radius() const { return radius_; }
    double fov() const { return fov_; }

private:
    const FrozenBlockEncoder* block_;
    ImageSettings image_;
    double radius_;
    double fov_;
};

} // namespace voxnav
