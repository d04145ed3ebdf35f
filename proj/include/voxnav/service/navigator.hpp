#pragma once

#include <memory>
#include <optional>
#include <string>

#include "../embedding/captioner.hpp"
#include "../png.hpp"
#include "../rl/train.hpp"
#include "config.hpp"

namespace voxnav::service {

/// A pipeline stage output is absent; the message names the command that produces it.
class MissingArtifactError : public Error {
public:
    explicit MissingArtifactError(const std::string& what) : Error("missing_artifact", what) {}
};

inline std::unique_ptr<EmbeddingProvider> make_provider(const EmbeddingConfig& cfg) {
    if (cfg.provider == "http") return std::make_unique<HttpProvider>(cfg.http);
    return std::make_unique<ReferenceProvider>(cfg.reference_seed);
}

/// Volume, transfer function, caption vocabulary and block grid of one dataset.
struct DatasetAssets {
    Volume volume;
    TransferFunction tf;
    DatasetDescriptor descriptor;
    BlockGrid grid;
};

inline DatasetAssets load_dataset_assets(const DatasetConfig& d) {
    if (!std::filesystem::exists(d.volume)) throw IoError("volume file " + d.volume.string() + " does not exist");
    auto meta = read_metadata(d.metadata);
    if (meta.name.empty()) meta.name = d.name;
    Volume vol = load_volume(d.volume, meta);
    TransferFunction tf = read_transfer_function(d.transfer_function);
    DatasetDescriptor desc = load_descriptor(d.descriptor);
    BlockGrid grid = partition(vol, d.grid);
    return {std::move(vol), std::move(tf), std::move(desc), std::move(grid)};
}

/// JSON-free view of a viewpoint for logs and CLI output.
inline std::string describe(const Viewpoint& v) {
    std::ostringstream os;
    os.precision(10);
    os << "orientation=(" << v.orientation.w << ", " << v.orientation.x << ", " << v.orientation.y << ", "
       << v.orientation.z << ") depth=" << v.depth << " look_at=(" << v.look_at.x << ", " << v.look_at.y << ", "
       << v.look_at.z << ")";
    return os.str();
}

/// Everything needed to answer prompts for one dataset: the trained encoder,
/// alignment heads and policy over immutable volume data. Safe for concurrent use.
class Navigator {
public:
    struct Parts {
        std::string name;
        DatasetAssets assets;
        std::unique_ptr<EmbeddingProvider> provider;
        std::optional<AlignmentModel> alignment;
        BlockEncoderModel encoder;
        std::optional<rl::PolicyModel> policy;
    };

    Navigator(Parts parts, const ProjectConfig& cfg)
        : name_(std::move(parts.name)),
          assets_(std::move(parts.assets)),
          provider_(std::move(parts.provider)),
          alignment_(std::move(parts.alignment)),
          backbone_(*provider_, alignment_ ? &*alignment_ : nullptr),
          range_(cfg.depth_range(assets_.volume.radius())),
          encoder_(std::move(parts.encoder),
                   BlockScene::build(assets_.volume, assets_.grid, cfg.encoder.dims.lattice, range_.max)),
          evaluator_(&encoder_,
                     {&assets_.volume, &assets_.tf, &backbone_, cfg.render.settings(), cfg.render.frame_size},
                     assets_.volume.radius(), cfg.render.fov()),
          policy_(std::move(parts.policy)),
          rl_(cfg.rl),
          render_(cfg.render) {}

    Navigator(const Navigator&) = delete;
    Navigator& operator=(const Navigator&) = delete;

    const std::string& name() const { return name_; }
    const DatasetAssets& assets() const { return assets_; }
    const Volume& volume() const { return assets_.volume; }
    double radius() const { return assets_.volume.radius(); }
    const DepthRange& depth_range() const { return range_; }
    const SemanticBackbone& backbone() const { return backbone_; }
    const FrozenBlockEncoder& encoder() const { return encoder_; }
    const RewardEvaluator& evaluator() const { return evaluator_; }
    bool has_policy() const { return policy_.has_value(); }
    const rl::PolicyModel& policy() const {
        if (!policy_) throw MissingArtifactError("no trained policy for '" + name_ + "'; run `voxnav train-rl` first");
        return *policy_;
    }
    const RlSection& rl_config() const { return rl_; }

    /// Default overview: frontal camera at mid-range depth.
    Viewpoint overview() const { return {Quat{}, range_.mid(), {}}; }

    rl::ViewpointEnv env(RewardMode mode) const {
        auto c = rl_.env;
        c.mode = mode;
        return rl::ViewpointEnv(evaluator_, c);
    }

    EmbeddingVector embed_goal(std::string_view text) const {
        if (trim(text).empty()) throw MalformedInputError("prompt text is empty");
        return backbone_.embed_text(text);
    }

    RewardResult score(const Viewpoint& v, const EmbeddingVector& goal, RewardMode mode) const {
        return evaluator_.evaluate(v, goal, mode);
    }

    CameraFrame camera(const Viewpoint& v) const { return to_camera_frame(v, render_.fov(), 1.0, radius()); }

    Image frame(const Viewpoint& v, int size) const {
        return render(assets_.volume, assets_.tf, camera(v), render_.settings(), size, size);
    }
    Image frame(const Viewpoint& v) const { return frame(v, render_.frame_size); }

    struct AnswerOptions {
        RewardMode mode = RewardMode::Block;
        int restarts = 4;
        std::uint64_t seed = 0;
        bool train_per_prompt = false;
    };

    /// best_viewpoint from `start` plus random restarts; optionally fine-tunes a
    /// copy of the policy on this goal first.
    rl::BestViewpoint answer(const EmbeddingVector& goal, const Viewpoint& start, const AnswerOptions& o) const {
        const auto e = env(o.mode);
        if (!o.train_per_prompt) return rl::best_viewpoint(policy(), e, goal, start, o.restarts, o.seed);
        rl::PolicyModel tuned = policy();
        auto ppo = rl_.ppo;
        ppo.max_episodes = rl_.per_prompt_episodes;
        ppo.seed = mix_seed(o.seed, 0x9e9);
        rl::train(e, {goal}, tuned, ppo);
        return rl::best_viewpoint(tuned, e, goal, start, o.restarts, o.seed);
    }

private:
    std::string name_;
    DatasetAssets assets_;
    std::unique_ptr<EmbeddingProvider> provider_;
    std::optional<AlignmentModel> alignment_;
    SemanticBackbone backbone_;
    DepthRange range_;
    FrozenBlockEncoder encoder_;
    RewardEvaluator evaluator_;
    std::optional<rl::PolicyModel> policy_;
    RlSection rl_;
    RenderConfig render_;
};

} // namespace voxnav::service
