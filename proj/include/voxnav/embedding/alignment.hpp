#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <limits>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include "../nn/checkpoint.hpp"
#include "../nn/loss.hpp"
#include "../nn/network.hpp"
#include "../nn/optim.hpp"
#include "../png.hpp"
#include "../text.hpp"
#include "provider.hpp"

namespace voxnav {

/// One image-caption pair. The image is either inline or loaded from `image_path`.
struct PairedSample {
    std::string image_path;
    Image image;
    std::string caption;
    std::string provenance;
};

inline std::string format_pair_manifest(const std::vector<PairedSample>& pairs) {
    std::string out;
    for (const auto& p : pairs) {
        if (p.caption.find_first_of("\t\n") != std::string::npos || p.image_path.find_first_of("\t\n") != std::string::npos)
            throw MalformedInputError("pair fields must not contain tabs or newlines");
        out += p.image_path + "\t" + p.caption + "\t" + p.provenance + "\n";
    }
    return out;
}

/// Parses "image-path<TAB>caption<TAB>provenance" lines; relative paths resolve against `base`.
inline std::vector<PairedSample> parse_pair_manifest(std::string_view text, const std::filesystem::path& base = {}) {
    std::vector<PairedSample> out;
    std::size_t line_no = 0;
    for (const auto& line : split_lines(text)) {
        ++line_no;
        if (trim(line).empty()) continue;
        const auto f = split(line, '\t');
        if (f.size() != 3) throw MalformedInputError("pair manifest line " + std::to_string(line_no) + " needs 3 fields");
        if (trim(f[1]).empty()) throw MalformedInputError("pair manifest line " + std::to_string(line_no) + " has an empty caption");
        std::filesystem::path p(f[0]);
        if (p.is_relative() && !base.empty()) p = base / p;
        out.push_back({p.string(), {}, f[1], f[2]});
    }
    return out;
}

inline std::vector<PairedSample> read_pair_manifest(const std::filesystem::path& path) {
    return parse_pair_manifest(read_text_file(path), path.parent_path());
}

/// Trainable projection heads over frozen base embeddings plus a learned temperature.
class AlignmentModel {
public:
    static constexpr double kInitialTemperature = 0.07;

    AlignmentModel() : AlignmentModel(kEmbeddingDim, 512, 0) {}
    AlignmentModel(std::size_t base_dim, std::size_t hidden, std::uint64_t seed)
        : image_head_(head("image_head", base_dim, hidden)),
          text_head_(head("text_head", base_dim, hidden)),
          log_tau_("log_temperature", {1}) {
        image_head_.initialize(mix_seed(seed, 1));
        text_head_.initialize(mix_seed(seed, 2));
        log_tau_.values[0] = std::log(kInitialTemperature);
    }

    nn::Sequential<double>& image_head() { return image_head_; }
    nn::Sequential<double>& text_head() { return text_head_; }
    const nn::Sequential<double>& image_head() const { return image_head_; }
    const nn::Sequential<double>& text_head() const { return text_head_; }
    double log_temperature() const { return log_tau_.values[0]; }
    double temperature() const { return std::exp(log_tau_.values[0]); }
    nn::ParamTensor<double>& log_temperature_param() { return log_tau_; }

    std::vector<nn::ParamTensor<double>*> params() {
        auto p = image_head_.params();
        for (auto* t : text_head_.params()) p.push_back(t);
        p.push_back(&log_tau_);
        return p;
    }

    EmbeddingVector project_image(const EmbeddingVector& base) const { return project(image_head_, base); }
    EmbeddingVector project_text(const EmbeddingVector& base) const { return project(text_head_, base); }

    void save(const std::filesystem::path& path) { nn::write_checkpoint(path, nn::snapshot(params())); }
    void load(const std::filesystem::path& path) { nn::restore(params(), nn::read_checkpoint(path)); }

private:
    static nn::Sequential<double> head(const std::string& name, std::size_t base_dim, std::size_t hidden) {
        using nn::LayerSpec;
        return nn::Sequential<double>::build(name, base_dim,
                                             {LayerSpec::dense(hidden), LayerSpec::relu(), LayerSpec::dense(kEmbeddingDim)});
    }
    static EmbeddingVector project(const nn::Sequential<double>& net, const EmbeddingVector& base) {
        const nn::Batch<double> x(1, base.size(), base.values());
        return EmbeddingVector(net.predict(x).data).normalized();
    }

    nn::Sequential<double> image_head_;
    nn::Sequential<double> text_head_;
    nn::ParamTensor<double> log_tau_;
};

struct AlignmentConfig {
    std::size_t batch_size = 128;
    double learning_rate = 5e-5;
    std::size_t epochs = 100;
    double weight_decay = 0.01;
    bool drop_last = true;
    double holdout_fraction = 0.2;
    std::uint64_t seed = 7;
    std::filesystem::path checkpoint;  // written after every epoch when set
};

/// Base embeddings of one pair under a frozen provider.
struct EmbeddedPair {
    EmbeddingVector image;
    EmbeddingVector text;
    std::string caption;
};

inline std::vector<EmbeddedPair> embed_pairs(const std::vector<PairedSample>& pairs, const EmbeddingProvider& provider) {
    std::vector<EmbeddedPair> out;
    out.reserve(pairs.size());
    for (const auto& p : pairs) {
        if (trim(p.caption).empty()) throw MalformedInputError("paired sample with an empty caption");
        const Image img = p.image.width > 0 ? p.image : read_png(p.image_path);
        out.push_back({provider.embed_image(img), provider.embed_text(p.caption), p.caption});
    }
    return out;
}

struct AlignmentResult {
    std::vector<double> loss_curve;  // training-set loss before training and after each epoch
    double heldout_top1 = 0;         // text-to-image top-1 accuracy on the held-out split
    std::size_t train_size = 0;
    std::size_t heldout_size = 0;
    std::size_t steps = 0;
};

/// Deterministic train/held-out split of `n` items.
inline std::pair<std::vector<std::size_t>, std::vector<std::size_t>> split_indices(std::size_t n, double holdout,
                                                                                     std::uint64_t seed) {
    if (holdout < 0 || holdout >= 1) throw ConfigError("holdout fraction must lie in [0, 1)");
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    std::mt19937_64 rng(mix_seed(seed, 0x5917));
    std::shuffle(idx.begin(), idx.end(), rng);
    const auto held = static_cast<std::size_t>(std::floor(holdout * static_cast<double>(n)));
    std::vector<std::size_t> test(idx.end() - static_cast<std::ptrdiff_t>(held), idx.end());
    idx.resize(n - held);
    return {idx, test};
}

namespace detail {

inline nn::Batch<double> gather(const std::vector<EmbeddedPair>& pairs, const std::vector<std::size_t>& idx,
                                bool image) {
    nn::Batch<double> b(idx.size(), kEmbeddingDim);
    for (std::size_t r = 0; r < idx.size(); ++r) {
        const auto& e = image ? pairs[idx[r]].image : pairs[idx[r]].text;
        std::copy(e.values().begin(), e.values().end(), b.row(r));
    }
    return b;
}

inline std::vector<std::vector<std::size_t>> make_batches(const std::vector<std::size_t>& idx, std::size_t batch,
                                                          bool drop_last) {
    std::vector<std::vector<std::size_t>> out;
    for (std::size_t s = 0; s < idx.size(); s += batch) {
        const std::size_t e = std::min(idx.size(), s + batch);
        if (e - s < batch && drop_last) break;
        out.emplace_back(idx.begin() + static_cast<std::ptrdiff_t>(s), idx.begin() + static_cast<std::ptrdiff_t>(e));
    }
    return out;
}

} // namespace detail

/// Symmetric contrastive loss of `model` on one batch; accumulates gradients when `backprop`.
inline double alignment_batch_loss(AlignmentModel& model, const std::vector<EmbeddedPair>& pairs,
                                   const std::vector<std::size_t>& idx, bool backprop) {
    const auto xi = detail::gather(pairs, idx, true);
    const auto xt = detail::gather(pairs, idx, false);
    const auto pi = model.image_head().forward(xi);
    const auto pt = model.text_head().forward(xt);
    const auto res = nn::contrastive_loss(pi.output(), pt.output(), model.log_temperature());
    if (backprop) {
        model.image_head().backward(pi, res.grad_image);
        model.text_head().backward(pt, res.grad_text);
        model.log_temperature_param().grad[0] += res.grad_log_temperature;
    }
    return res.loss;
}

/// Mean text-to-image top-1 accuracy over `idx`; a hit retrieves an image whose caption matches the query's.
inline double retrieval_top1(const AlignmentModel& model, const std::vector<EmbeddedPair>& pairs,
                             const std::vector<std::size_t>& idx) {
    if (idx.empty()) return 0;
    std::vector<EmbeddingVector> imgs;
    imgs.reserve(idx.size());
    for (auto i : idx) imgs.push_back(model.project_image(pairs[i].image));
    std::size_t hits = 0;
    for (auto q : idx) {
        const auto t = model.project_text(pairs[q].text);
        std::size_t best = 0;
        double best_s = -std::numeric_limits<double>::infinity();
        for (std::size_t k = 0; k < imgs.size(); ++k) {
            const double s = nn::kernels::dot(kEmbeddingDim, t.data(), imgs[k].data());
            if (s > best_s) best_s = s, best = k;
        }
        hits += pairs[idx[best]].caption == pairs[q].caption;
    }
    return static_cast<double>(hits) / static_cast<double>(idx.size());
}

/// Trains the projection heads and temperature with AdamW on precomputed base embeddings.
inline AlignmentResult train_alignment(AlignmentModel& model, const std::vector<EmbeddedPair>& pairs,
                                       const AlignmentConfig& cfg) {
    if (cfg.batch_size == 0) throw ConfigError("alignment batch size must be positive");
    const auto [train, held] = split_indices(pairs.size(), cfg.holdout_fraction, cfg.seed);
    if (train.empty()) throw ConfigError("alignment needs at least one training pair");
    if (cfg.drop_last && train.size() < cfg.batch_size)
        throw ConfigError("training split (" + std::to_string(train.size()) + ") is smaller than the batch size (" +
                          std::to_string(cfg.batch_size) + ") with drop-last enabled");
    AlignmentResult out;
    out.train_size = train.size();
    out.heldout_size = held.size();

    const auto eval_batches = detail::make_batches(train, cfg.batch_size, cfg.drop_last);
    auto train_loss = [&] {
        double s = 0;
        for (const auto& b : eval_batches) s += alignment_batch_loss(model, pairs, b, false);
        return s / static_cast<double>(eval_batches.size());
    };

    nn::AdamW<double> opt({cfg.learning_rate, 0.9, 0.999, 1e-8, cfg.weight_decay});
    const auto params = model.params();
    auto good = nn::snapshot(params);
    auto save = [&] {
        if (cfg.checkpoint.empty()) return;
        auto t = good;
        for (auto& o : nn::snapshot_optimizer(opt, params, "adamw")) t.push_back(std::move(o));
        nn::write_checkpoint(cfg.checkpoint, t);
    };
    auto diverged = [&](const std::string& why) {
        nn::restore(params, good);
        save();
        return TrainingError("alignment diverged (" + why + "); last good state retained");
    };

    out.loss_curve.push_back(train_loss());
    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        std::vector<std::size_t> order = train;
        std::mt19937_64 rng(mix_seed(cfg.seed, 1000 + epoch));
        std::shuffle(order.begin(), order.end(), rng);
        for (const auto& b : detail::make_batches(order, cfg.batch_size, cfg.drop_last)) {
            nn::zero_grads(params);
            double loss = 0;
            try {
                loss = alignment_batch_loss(model, pairs, b, true);
                if (!std::isfinite(loss)) throw NumericError("non-finite loss");
                opt.step(params);
            } catch (const NumericError& e) {
                throw diverged(e.what());
            }
            ++out.steps;
        }
        double l = 0;
        try {
            l = train_loss();
        } catch (const NumericError& e) {
            throw diverged(e.what());
        }
        if (!std::isfinite(l)) throw diverged("non-finite training loss");
        good = nn::snapshot(params);
        out.loss_curve.push_back(l);
        save();
    }
    save();
    out.heldout_top1 = retrieval_top1(model, pairs, held);
    return out;
}

inline AlignmentResult train_alignment(AlignmentModel& model, const std::vector<PairedSample>& dataset,
                                       const EmbeddingProvider& provider, const AlignmentConfig& cfg) {
    return train_alignment(model, embed_pairs(dataset, provider), cfg);
}

/// Provider plus optional projection heads: the embedding space shared by
/// goals, rendered views and block-encoder targets.
class SemanticBackbone {
public:
    SemanticBackbone(const EmbeddingProvider& provider, const AlignmentModel* alignment = nullptr)
        : provider_(&provider), alignment_(alignment) {}

    const EmbeddingProvider& provider() const { return *provider_; }
    bool aligned() const { return alignment_ != nullptr; }

    EmbeddingVector embed_text(std::string_view text) const {
        const auto base = provider_->embed_text(text);
        return alignment_ ? alignment_->project_text(base) : base.normalized();
    }
    EmbeddingVector embed_image(const Image& img) const {
        const auto base = provider_->embed_image(img);
        return alignment_ ? alignment_->project_image(base) : base.normalized();
    }

private:
    const EmbeddingProvider* provider_;
    const AlignmentModel* alignment_;
};

} // namespace voxnav
