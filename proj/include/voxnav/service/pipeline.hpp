#pragma once

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <iomanip>
#include <iostream>
#include <map>
#include <set>
#include <sstream>

#include "../toy.hpp"
#include "navigator.hpp"

namespace voxnav::service {

// ---------------------------------------------------------------------------
// Stage manifests: ordered key=value lines, no timestamps, so identical inputs
// and seeds give byte-identical files.

class Manifest {
public:
    explicit Manifest(std::string stage) { set("stage", std::move(stage)); }

    template <class T>
    Manifest& set(const std::string& key, const T& value) {
        std::ostringstream os;
        os.precision(17);
        os << value;
        for (auto& [k, v] : entries_)
            if (k == key) return v = os.str(), *this;
        entries_.emplace_back(key, os.str());
        return *this;
    }

    std::string get(const std::string& key) const {
        for (const auto& [k, v] : entries_)
            if (k == key) return v;
        throw MalformedInputError("manifest lacks '" + key + "'");
    }

    std::string text() const {
        std::string out;
        for (const auto& [k, v] : entries_) out += k + "=" + v + "\n";
        return out;
    }

    static Manifest parse(std::string_view text) {
        Manifest m("");
        m.entries_.clear();
        for (auto& [k, v] : parse_key_values(text)) m.entries_.emplace_back(std::move(k), std::move(v));
        return m;
    }

private:
    std::vector<std::pair<std::string, std::string>> entries_;
};

inline std::string hex64(std::uint64_t h) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

inline std::string file_hash(const std::filesystem::path& p) {
    const auto bytes = read_binary_file(p);
    return hex64(fnv1a64(bytes.data(), bytes.size()));
}

/// Artifact layout of one dataset inside the work directory.
struct Workspace {
    std::filesystem::path root;

    std::filesystem::path manifest(const std::string& stage) const { return root / (stage + ".manifest"); }
    std::filesystem::path viewpoints() const { return root / "viewpoints.txt"; }
    std::filesystem::path images() const { return root / "images"; }
    std::filesystem::path image(std::size_t i) const {
        char name[32];
        std::snprintf(name, sizeof name, "%04zu.png", i);
        return images() / name;
    }
    std::filesystem::path pairs() const { return root / "pairs.tsv"; }
    std::filesystem::path alignment() const { return root / "alignment.ckpt"; }
    std::filesystem::path alignment_log() const { return root / "alignment_loss.tsv"; }
    std::filesystem::path encoder() const { return root / "encoder.ckpt"; }
    std::filesystem::path encoder_log() const { return root / "encoder_loss.tsv"; }
    std::filesystem::path goals() const { return root / "goals.txt"; }
    std::filesystem::path policy() const { return root / "policy.ckpt"; }
    std::filesystem::path training_log() const { return root / "train_log.tsv"; }
    std::filesystem::path sweep() const { return root / "sweep.tsv"; }
    std::filesystem::path caption_cache() const { return root / "caption_cache"; }
};

/// The command that writes each stage's manifest.
inline const std::map<std::string, std::string>& stage_commands() {
    static const std::map<std::string, std::string> m{
        {"sample", "sample"},   {"render", "render-dataset"}, {"caption", "caption"},      {"align", "align"},
        {"encode", "encode"},   {"train-rl", "train-rl"},     {"sweep", "sweep-blocks"}};
    return m;
}

/// Reads an upstream manifest or explains which command produces it.
inline Manifest require_stage(const Workspace& ws, const std::string& stage) {
    const auto p = ws.manifest(stage);
    if (!std::filesystem::exists(p))
        throw MissingArtifactError("missing " + p.string() + "; run `voxnav " + stage_commands().at(stage) + "` first");
    return Manifest::parse(read_text_file(p));
}

/// Content hash of an upstream manifest, recorded downstream to detect stale artifacts.
inline std::string stage_hash(const Workspace& ws, const std::string& stage) {
    require_stage(ws, stage);
    return file_hash(ws.manifest(stage));
}

/// Stage seeds derive from the project seed by a fixed stream per stage.
enum class SeedStream : std::uint64_t { Sample = 1, Alignment = 4, AlignmentInit, Encoder, EncoderInit, Rl, PolicyInit, Goals, Query, Sweep };

inline std::uint64_t stage_seed(const ProjectConfig& cfg, SeedStream s) {
    return mix_seed(cfg.seed, static_cast<std::uint64_t>(s));
}

struct QueryOptions {
    std::optional<RewardMode> mode;
    std::optional<int> restarts;
    bool train_per_prompt = false;
    std::filesystem::path out;  // defaults to <work>/<dataset>/query.png
};
struct QueryResult {
    Viewpoint viewpoint;
    double reward = 0;
    RewardMode mode = RewardMode::Block;
    std::size_t restart = 0;
    std::size_t trajectory_length = 0;
    std::filesystem::path image;
};


/// Writes the toy volume (raw + sidecar) into `dir` and, unless one exists, a
/// project config `voxnav.toml` that uses it. Returns the config path.
inline std::filesystem::path generate_toy_project(const std::filesystem::path& dir, int side = 64,
                                                  std::string_view extra_config = {}) {
    std::filesystem::create_directories(dir);
    const Volume vol = make_toy_volume(side);
    write_raw_volume(dir / "toy.raw", vol, VoxelType::U8);
    write_metadata(dir / "toy.meta", {"toy", vol.dims(), VoxelType::U8, vol.spacing()});
    const auto cfg = dir / "voxnav.toml";
    if (!std::filesystem::exists(cfg))
        write_text_file(cfg, "[project]\nwork_dir = \"work\"\nseed = 7\n\n[datasets.toy]\nvolume = \"toy.raw\"\ngrid = [4, 4, 4]\n" +
                                 std::string(extra_config));
    return cfg;
}

class Pipeline {
public:
    Pipeline(ProjectConfig cfg, std::string dataset = {}, std::ostream* log = &std::cerr)
        : cfg_(std::move(cfg)), ds_(cfg_.dataset(dataset)), ws_{cfg_.dataset_dir(ds_)}, log_(log) {}

    const ProjectConfig& config() const { return cfg_; }
    const DatasetConfig& dataset() const { return ds_; }
    const Workspace& workspace() const { return ws_; }

    const DatasetAssets& assets() {
        if (!assets_) assets_ = std::make_unique<DatasetAssets>(load_dataset_assets(ds_));
        return *assets_;
    }

    // --- sample ---------------------------------------------------------------
    ViewpointSet sample() {
        const auto& a = assets();
        const auto& s = cfg_.sampling;
        const double R = a.volume.radius();
        const auto seed = stage_seed(cfg_, SeedStream::Sample);
        ViewpointSet set = icosphere_viewpoints(s.level, cfg_.depth_range(R).mid());
        const auto blocks = choose_blocks(a.grid, s.blocks, seed);
        set.append(block_centered_viewpoints(set, a.grid, blocks, s.dirs_per_block, seed));
        std::filesystem::create_directories(ws_.root);
        write_text_file(ws_.viewpoints(), format_viewpoint_set(set));
        Manifest m("sample");
        m.set("dataset", ds_.name)
            .set("volume", file_hash(ds_.volume))
            .set("grid", format_int3(ds_.grid))
            .set("level", s.level)
            .set("blocks", s.blocks)
            .set("dirs_per_block", s.dirs_per_block)
            .set("d_min_factor", s.d_min_factor)
            .set("d_max_factor", s.d_max_factor)
            .set("seed", seed)
            .set("count", set.size())
            .set("viewpoints", file_hash(ws_.viewpoints()));
        write(m);
        say("sample: " + std::to_string(set.size()) + " viewpoints -> " + ws_.viewpoints().string());
        return set;
    }

    ViewpointSet viewpoints() {
        require_stage(ws_, "sample");
        return parse_viewpoint_set(read_text_file(ws_.viewpoints()), &assets().grid);
    }

    // --- render-dataset -------------------------------------------------------
    std::size_t render_dataset() {
        const auto upstream = stage_hash(ws_, "sample");
        const auto set = viewpoints();
        const auto& a = assets();
        std::filesystem::create_directories(ws_.images());
        std::uint64_t h = fnv1a64(std::string_view{});
        for (std::size_t i = 0; i < set.size(); ++i) {
            const auto f = to_camera_frame(set.viewpoints[i], cfg_.render.fov(), 1.0, a.volume.radius());
            const auto png = encode_png(render(a.volume, a.tf, f, cfg_.render.settings(), cfg_.render.image_size,
                                               cfg_.render.image_size));
            write_binary_file(ws_.image(i), png.data(), png.size());
            h = fnv1a64(png.data(), png.size(), h);
        }
        Manifest m("render");
        m.set("sample", upstream)
            .set("transfer_function", file_hash(ds_.transfer_function))
            .set("image_size", cfg_.render.image_size)
            .set("fov_deg", cfg_.render.fov_deg)
            .set("step", cfg_.render.step)
            .set("count", set.size())
            .set("images", hex64(h));
        write(m);
        say("render-dataset: " + std::to_string(set.size()) + " images -> " + ws_.images().string());
        return set.size();
    }

    // --- caption --------------------------------------------------------------
    std::vector<PairedSample> caption() {
        const auto upstream = stage_hash(ws_, "render");
        const auto set = viewpoints();
        const auto& a = assets();
        std::unique_ptr<Captioner> cap;
        if (cfg_.caption.mode == "external")
            cap = std::make_unique<ExternalCaptioner>(cfg_.caption.http, a.descriptor,
                                                      cfg_.caption.cache.empty() ? ws_.caption_cache() : cfg_.caption.cache);
        else
            cap = std::make_unique<TemplateCaptioner>(a.descriptor, cfg_.depth_range(a.volume.radius()), &a.grid);
        std::vector<PairedSample> pairs;
        for (std::size_t i = 0; i < set.size(); ++i) {
            CaptionInput in;
            Image img;
            if (cfg_.caption.mode == "external") {
                img = read_png(ws_.image(i));
                in.image = &img;
            }
            in.viewpoint = set.viewpoints[i];
            in.provenance = set.provenance[i];
            in.index = i;
            PairedSample p;
            p.image_path = std::filesystem::relative(ws_.image(i), ws_.root).generic_string();
            p.caption = cap->caption(in);
            for (char& c : p.caption)
                if (c == '\t' || c == '\n' || c == '\r') c = ' ';
            p.provenance = set.provenance[i].kind == ViewpointKind::Uniform
                               ? "uniform"
                               : "block:" + std::to_string(set.provenance[i].block);
            pairs.push_back(std::move(p));
        }
        write_text_file(ws_.pairs(), format_pair_manifest(pairs));
        Manifest m("caption");
        m.set("render", upstream).set("captioner", cap->identity()).set("count", pairs.size()).set("pairs", file_hash(ws_.pairs()));
        write(m);
        say("caption: " + std::to_string(pairs.size()) + " pairs -> " + ws_.pairs().string());
        return pairs;
    }

    // --- align ----------------------------------------------------------------
    AlignmentResult align() {
        const auto upstream = stage_hash(ws_, "caption");
        const auto provider = make_provider(cfg_.embedding);
        const auto pairs = read_pair_manifest(ws_.pairs());
        AlignmentModel model(kEmbeddingDim, cfg_.alignment.hidden, stage_seed(cfg_, SeedStream::AlignmentInit));
        auto tc = cfg_.alignment.train;
        tc.seed = stage_seed(cfg_, SeedStream::Alignment);
        tc.checkpoint = ws_.alignment();
        const auto r = train_alignment(model, pairs, *provider, tc);
        std::ostringstream log;
        log.precision(17);
        for (std::size_t e = 0; e < r.loss_curve.size(); ++e) log << e << '\t' << r.loss_curve[e] << '\n';
        write_text_file(ws_.alignment_log(), log.str());
        Manifest m("align");
        m.set("caption", upstream)
            .set("provider", provider->identity())
            .set("hidden", cfg_.alignment.hidden)
            .set("batch_size", tc.batch_size)
            .set("learning_rate", tc.learning_rate)
            .set("epochs", tc.epochs)
            .set("seed", tc.seed)
            .set("train_size", r.train_size)
            .set("heldout_size", r.heldout_size)
            .set("initial_loss", r.loss_curve.front())
            .set("final_loss", r.loss_curve.back())
            .set("heldout_top1", r.heldout_top1)
            .set("checkpoint", file_hash(ws_.alignment()));
        write(m);
        say("align: loss " + fmt(r.loss_curve.front()) + " -> " + fmt(r.loss_curve.back()) + ", held-out top-1 " +
            fmt(r.heldout_top1));
        return r;
    }

    /// Image embeddings of the dataset renders under the aligned backbone: the encoder targets.
    std::vector<EmbeddingVector> encoder_targets() {
        require_stage(ws_, "align");
        const auto provider = make_provider(cfg_.embedding);
        AlignmentModel model(kEmbeddingDim, cfg_.alignment.hidden, 0);
        model.load(ws_.alignment());
        const SemanticBackbone backbone(*provider, &model);
        const auto set = viewpoints();
        std::vector<EmbeddingVector> targets;
        targets.reserve(set.size());
        for (std::size_t i = 0; i < set.size(); ++i) targets.push_back(backbone.embed_image(read_png(ws_.image(i))));
        return targets;
    }

    // --- encode ---------------------------------------------------------------
    BlockEncoderResult encode() {
        const auto upstream = stage_hash(ws_, "align");
        const auto targets = encoder_targets();
        const auto& a = assets();
        const double R = a.volume.radius();
        const auto scene = BlockScene::build(a.volume, a.grid, cfg_.encoder.dims.lattice, cfg_.depth_range(R).max);
        BlockEncoderModel model(cfg_.encoder.dims, stage_seed(cfg_, SeedStream::EncoderInit));
        auto tc = cfg_.encoder.train;
        tc.seed = stage_seed(cfg_, SeedStream::Encoder);
        tc.checkpoint = ws_.encoder();
        const auto r = train_block_encoder(model, scene, frames_for(viewpoints(), R, cfg_.render.fov()), targets, tc);
        std::ostringstream log;
        log.precision(17);
        for (std::size_t s = 0; s < r.loss_curve.size(); ++s) log << s << '\t' << r.loss_curve[s] << '\n';
        write_text_file(ws_.encoder_log(), log.str());
        const auto& d = cfg_.encoder.dims;
        Manifest m("encode");
        m.set("align", upstream)
            .set("provider", make_provider(cfg_.embedding)->identity())
            .set("grid", format_int3(ds_.grid))
            .set("dims", std::to_string(d.lattice) + "," + std::to_string(d.conv1) + "," + std::to_string(d.conv2) + "," +
                             std::to_string(d.feature) + "," + std::to_string(d.positional) + "," +
                             std::to_string(d.hidden) + "," + std::to_string(d.embedding))
            .set("steps", tc.steps)
            .set("learning_rate", tc.learning_rate)
            .set("views_per_step", tc.views_per_step)
            .set("seed", tc.seed)
            .set("used_views", r.used_views)
            .set("empty_views", r.empty_views)
            .set("initial_loss", r.loss_curve.front())
            .set("final_loss", r.final_loss)
            .set("checkpoint", file_hash(ws_.encoder()));
        write(m);
        say("encode: loss " + fmt(r.loss_curve.front()) + " -> " + fmt(r.final_loss) + " over " +
            std::to_string(r.used_views) + " views");
        return r;
    }

    /// Distinct captions, a seeded subset of at most rl.goals of them, in sorted order.
    std::vector<std::string> goal_captions(std::size_t count) {
        require_stage(ws_, "caption");
        std::set<std::string> distinct;
        for (const auto& p : read_pair_manifest(ws_.pairs())) distinct.insert(p.caption);
        std::vector<std::string> all(distinct.begin(), distinct.end());
        std::mt19937_64 rng(stage_seed(cfg_, SeedStream::Goals));
        std::shuffle(all.begin(), all.end(), rng);
        all.resize(std::min(all.size(), count));
        std::sort(all.begin(), all.end());
        return all;
    }

    /// Loads the trained artifacts; the policy only when `with_policy`.
    std::unique_ptr<Navigator> navigator(bool with_policy = true) {
        const auto enc = require_stage(ws_, "encode");
        if (enc.get("align") != stage_hash(ws_, "align"))
            throw MissingArtifactError("encoder is older than the alignment; rerun `voxnav encode`");
        Navigator::Parts parts{ds_.name, load_dataset_assets(ds_), make_provider(cfg_.embedding), std::nullopt,
                               BlockEncoderModel(cfg_.encoder.dims, 0), std::nullopt};
        parts.alignment.emplace(kEmbeddingDim, cfg_.alignment.hidden, 0);
        parts.alignment->load(ws_.alignment());
        parts.encoder.load(ws_.encoder());
        if (with_policy) {
            const auto t = require_stage(ws_, "train-rl");
            if (t.get("encode") != stage_hash(ws_, "encode"))
                throw MissingArtifactError("policy is older than the encoder; rerun `voxnav train-rl`");
            parts.policy.emplace(0, cfg_.rl.initial_log_std);
            rl::load_policy(*parts.policy, ws_.policy());
        }
        return std::make_unique<Navigator>(std::move(parts), cfg_);
    }

    // --- train-rl -------------------------------------------------------------
    rl::TrainResult train_rl(std::optional<RewardMode> mode = std::nullopt, std::optional<int> episodes = std::nullopt) {
        const auto upstream = stage_hash(ws_, "encode");
        const auto nav = navigator(false);
        const auto captions = goal_captions(cfg_.rl.goals);
        std::string goals_text;
        std::vector<EmbeddingVector> goals;
        for (const auto& c : captions) {
            goals_text += c + "\n";
            goals.push_back(nav->embed_goal(c));
        }
        write_text_file(ws_.goals(), goals_text);
        const RewardMode m = mode.value_or(cfg_.rl.env.mode);
        auto ppo = cfg_.rl.ppo;
        ppo.horizon = cfg_.rl.env.horizon;
        ppo.seed = stage_seed(cfg_, SeedStream::Rl);
        if (episodes) ppo.max_episodes = *episodes;
        rl::PolicyModel policy(stage_seed(cfg_, SeedStream::PolicyInit), cfg_.rl.initial_log_std);
        const auto env = nav->env(m);
        const auto r = rl::train(env, goals, policy, ppo);
        rl::save_policy(policy, ws_.policy());
        write_text_file(ws_.training_log(), rl::format_training_log(r.episodes));
        double tail = 0;
        const std::size_t n = std::max<std::size_t>(1, r.episodes.size() / 10);
        for (std::size_t i = r.episodes.size() - std::min(n, r.episodes.size()); i < r.episodes.size(); ++i)
            tail += r.episodes[i].mean_reward / static_cast<double>(std::min(n, r.episodes.size()));
        Manifest man("train-rl");
        man.set("encode", upstream)
            .set("reward_mode", to_string(m))
            .set("goals", captions.size())
            .set("goal_texts", file_hash(ws_.goals()))
            .set("episodes", r.episodes.size())
            .set("learning_rate", ppo.learning_rate)
            .set("seed", ppo.seed)
            .set("skipped_minibatches", r.skipped_minibatches)
            .set("final_mean_reward", r.episodes.empty() ? 0.0 : tail)
            .set("checkpoint", file_hash(ws_.policy()));
        write(man);
        say("train-rl: " + std::to_string(r.episodes.size()) + " episodes over " + std::to_string(goals.size()) +
            " goals, final mean reward " + fmt(r.episodes.empty() ? 0.0 : tail));
        return r;
    }

    // --- query ----------------------------------------------------------------
    QueryResult query(std::string_view text, const QueryOptions& o = {}) {
        if (trim(text).empty()) throw MalformedInputError("query text is empty");
        const auto nav = navigator(true);
        return query(*nav, text, o);
    }

    QueryResult query(const Navigator& nav, std::string_view text, const QueryOptions& o = {}) {
        const auto goal = nav.embed_goal(text);
        Navigator::AnswerOptions a;
        a.mode = o.mode.value_or(cfg_.service.reward_mode);
        a.restarts = o.restarts.value_or(cfg_.rl.restarts);
        a.seed = stage_seed(cfg_, SeedStream::Query);
        a.train_per_prompt = o.train_per_prompt;
        const auto best = nav.answer(goal, nav.overview(), a);
        QueryResult r{best.viewpoint, best.reward, a.mode, best.restart, best.trajectory.viewpoints.size(),
                      o.out.empty() ? ws_.root / "query.png" : o.out};
        write_png(r.image, nav.frame(best.viewpoint));
        return r;
    }

    // --- sweep-blocks ---------------------------------------------------------
    struct SweepRow {
        Int3 grid;
        std::size_t blocks = 0;
        double final_loss = 0;
        double train_seconds = 0;
        double mean_best_reward = 0;
        double eval_ms = 0;
    };

    /// Per grid: trains an encoder, then for each goal takes the best block reward over a
    /// fixed candidate set, timing every evaluation.
    std::vector<SweepRow> sweep_blocks() {
        const auto upstream = stage_hash(ws_, "align");
        const auto targets = encoder_targets();
        const auto& a = assets();
        const double R = a.volume.radius();
        const auto range = cfg_.depth_range(R);
        const auto frames = frames_for(viewpoints(), R, cfg_.render.fov());
        const auto provider = make_provider(cfg_.embedding);
        AlignmentModel align(kEmbeddingDim, cfg_.alignment.hidden, 0);
        align.load(ws_.alignment());
        const SemanticBackbone backbone(*provider, &align);
        std::vector<EmbeddingVector> goals;
        for (const auto& c : goal_captions(cfg_.sweep.goals)) goals.push_back(backbone.embed_text(c));
        const auto candidates = icosphere_viewpoints(cfg_.sweep.candidate_level, range.mid());

        std::vector<SweepRow> rows;
        std::ostringstream tsv;
        tsv.precision(10);
        tsv << "grid\tblocks\tfinal_loss\ttrain_s\tmean_best_reward\teval_ms\n";
        for (int g : cfg_.sweep.grids) {
            SweepRow row;
            row.grid = {g, g, g};
            const auto grid = partition(a.volume, row.grid);
            row.blocks = grid.size();
            const auto scene = BlockScene::build(a.volume, grid, cfg_.encoder.dims.lattice, range.max);
            BlockEncoderModel model(cfg_.encoder.dims, stage_seed(cfg_, SeedStream::EncoderInit));
            BlockEncoderConfig tc = cfg_.encoder.train;
            tc.steps = cfg_.sweep.steps;
            tc.views_per_step = cfg_.sweep.views_per_step;
            tc.seed = stage_seed(cfg_, SeedStream::Sweep);
            tc.checkpoint.clear();
            const auto t0 = std::chrono::steady_clock::now();
            row.final_loss = train_block_encoder(model, scene, frames, targets, tc).final_loss;
            row.train_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
            const FrozenBlockEncoder enc(std::move(model), scene);
            double total = 0, eval_s = 0;
            std::size_t evals = 0;
            for (const auto& goal : goals) {
                double best = -1;
                for (const auto& v : candidates.viewpoints) {
                    const auto e0 = std::chrono::steady_clock::now();
                    const double rwd = reward_block(enc, to_camera_frame(v, cfg_.render.fov(), 1.0, R), goal).reward;
                    eval_s += std::chrono::duration<double>(std::chrono::steady_clock::now() - e0).count();
                    ++evals;
                    best = std::max(best, rwd);
                }
                total += best;
            }
            row.mean_best_reward = goals.empty() ? 0 : total / static_cast<double>(goals.size());
            row.eval_ms = evals ? 1000 * eval_s / static_cast<double>(evals) : 0;
            tsv << format_int3(row.grid) << '\t' << row.blocks << '\t' << row.final_loss << '\t' << row.train_seconds
                << '\t' << row.mean_best_reward << '\t' << row.eval_ms << '\n';
            say("sweep-blocks: grid " + format_int3(row.grid) + " loss " + fmt(row.final_loss) + " reward " +
                fmt(row.mean_best_reward) + " eval " + fmt(row.eval_ms) + " ms");
            rows.push_back(row);
        }
        write_text_file(ws_.sweep(), tsv.str());
        // Timings vary run to run, so the manifest records only the deterministic columns.
        Manifest m("sweep");
        m.set("align", upstream).set("steps", cfg_.sweep.steps).set("views_per_step", cfg_.sweep.views_per_step);
        for (const auto& r : rows)
            m.set("grid." + format_int3(r.grid), fmt(r.final_loss) + "," + fmt(r.mean_best_reward));
        write(m);
        return rows;
    }

private:
    static std::string format_int3(Int3 v) {
        return std::to_string(v.x) + "x" + std::to_string(v.y) + "x" + std::to_string(v.z);
    }
    static std::string fmt(double x) {
        std::ostringstream os;
        os.precision(6);
        os << x;
        return os.str();
    }
    void say(const std::string& s) const {
        if (log_) *log_ << s << '\n';
    }
    void write(const Manifest& m) const {
        std::filesystem::create_directories(ws_.root);
        write_text_file(ws_.manifest(m.get("stage")), m.text());
    }

    ProjectConfig cfg_;
    DatasetConfig ds_;
    Workspace ws_;
    std::ostream* log_;
    std::unique_ptr<DatasetAssets> assets_;
};

} // namespace voxnav::service
