#pragma once

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <map>
#include <numbers>
#include <set>
#include <string>
#include <variant>
#include <vector>

#include "../block_encoder.hpp"
#include "../embedding/alignment.hpp"
#include "../embedding/http_provider.hpp"
#include "../rl/env.hpp"
#include "../rl/ppo.hpp"
#include "../text.hpp"

namespace voxnav::service {

// ---------------------------------------------------------------------------
// TOML subset: [table] and [table.sub] headers, key = value with basic strings,
// integers, floats, booleans and single-line arrays of those; '#' comments.

struct TomlValue;
using TomlArray = std::vector<TomlValue>;

struct TomlValue {
    std::variant<bool, long long, double, std::string, TomlArray> v;
};

/// Flat view of a document: "table.key" -> value, plus the line each key came from.
struct TomlDocument {
    std::map<std::string, TomlValue> values;
    std::map<std::string, int> lines;
    std::vector<std::string> tables;  // in declaration order
};

namespace detail {

class TomlLineParser {
public:
    TomlLineParser(std::string_view s, int line) : s_(s), line_(line) {}

    TomlValue value() {
        skip_ws();
        if (at_end()) fail("missing value");
        const char c = s_[i_];
        if (c == '"') return {string()};
        if (c == '[') return {array()};
        if (s_.substr(i_, 4) == "true") return advance(4), TomlValue{true};
        if (s_.substr(i_, 5) == "false") return advance(5), TomlValue{false};
        return number();
    }

    void expect_end() {
        skip_ws();
        if (!at_end() && s_[i_] != '#') fail("unexpected trailing text");
    }

    [[noreturn]] void fail(const std::string& what) const {
        throw ConfigError("config line " + std::to_string(line_) + ": " + what);
    }

private:
    bool at_end() const { return i_ >= s_.size(); }
    void advance(std::size_t n) { i_ += n; }
    void skip_ws() {
        while (!at_end() && (s_[i_] == ' ' || s_[i_] == '\t')) ++i_;
    }

    std::string string() {
        ++i_;
        std::string out;
        while (true) {
            if (at_end()) fail("unterminated string");
            const char c = s_[i_++];
            if (c == '"') return out;
            if (c != '\\') {
                out += c;
                continue;
            }
            if (at_end()) fail("unterminated escape");
            switch (s_[i_++]) {
                case '"': out += '"'; break;
                case '\\': out += '\\'; break;
                case 'n': out += '\n'; break;
                case 't': out += '\t'; break;
                default: fail("unsupported escape in string");
            }
        }
    }

    TomlArray array() {
        ++i_;
        TomlArray out;
        while (true) {
            skip_ws();
            if (at_end()) fail("unterminated array");
            if (s_[i_] == ']') {
                ++i_;
                return out;
            }
            out.push_back(value());
            skip_ws();
            if (at_end()) fail("unterminated array");
            if (s_[i_] == ',') ++i_;
            else if (s_[i_] != ']') fail("expected ',' or ']' in array");
        }
    }

    TomlValue number() {
        const std::size_t start = i_;
        while (!at_end() && (std::isalnum(static_cast<unsigned char>(s_[i_])) || s_[i_] == '.' || s_[i_] == '-' ||
                             s_[i_] == '+' || s_[i_] == '_'))
            ++i_;
        std::string tok(s_.substr(start, i_ - start));
        std::erase(tok, '_');
        if (tok.empty()) fail("expected a value");
        const bool is_float = tok.find_first_of(".eE") != std::string::npos && tok.rfind("0x", 0) != 0;
        char* end = nullptr;
        if (is_float) {
            const double d = std::strtod(tok.c_str(), &end);
            if (*end != '\0') fail("bad number '" + tok + "'");
            return {d};
        }
        const long long v = std::strtoll(tok.c_str(), &end, 0);
        if (*end != '\0') fail("bad value '" + tok + "' (strings must be quoted)");
        return {v};
    }

    std::string_view s_;
    std::size_t i_ = 0;
    int line_;
};

inline bool valid_key(std::string_view k) {
    if (k.empty()) return false;
    for (char c : k)
        if (!std::isalnum(static_cast<unsigned char>(c)) && c != '_' && c != '-') return false;
    return true;
}

} // namespace detail

inline TomlDocument parse_toml(std::string_view text) {
    TomlDocument doc;
    std::string table;
    std::set<std::string> seen_tables;
    int line_no = 0;
    for (const auto& raw : split_lines(text)) {
        ++line_no;
        const std::string line = trim(raw);
        if (line.empty() || line[0] == '#') continue;
        detail::TomlLineParser err(line, line_no);
        if (line[0] == '[') {
            const auto close = line.find(']');
            if (close == std::string::npos) err.fail("unterminated table header");
            table = trim(std::string_view(line).substr(1, close - 1));
            for (const auto& part : split(table, '.'))
                if (!detail::valid_key(part)) err.fail("bad table name '" + table + "'");
            const std::string rest = trim(std::string_view(line).substr(close + 1));
            if (!rest.empty() && rest[0] != '#') err.fail("unexpected text after table header");
            if (!seen_tables.insert(table).second) err.fail("duplicate table [" + table + "]");
            doc.tables.push_back(table);
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) err.fail("expected key = value");
        const std::string key = trim(std::string_view(line).substr(0, eq));
        if (!detail::valid_key(key)) err.fail("bad key '" + key + "'");
        detail::TomlLineParser p(std::string_view(line).substr(eq + 1), line_no);
        TomlValue v = p.value();
        p.expect_end();
        const std::string full = table.empty() ? key : table + "." + key;
        if (doc.values.count(full)) err.fail("duplicate key '" + full + "'");
        doc.values.emplace(full, std::move(v));
        doc.lines[full] = line_no;
    }
    return doc;
}

// ---------------------------------------------------------------------------
// Project configuration

struct DatasetConfig {
    std::string name;
    std::filesystem::path volume;             // raw voxels
    std::filesystem::path metadata;           // sidecar; defaults to the raw path with extension ".meta"
    std::filesystem::path transfer_function;  // defaults to <assets>/tf/<name>.tf
    std::string descriptor;                   // caption descriptor name or path; defaults to the dataset name
    Int3 grid{4, 4, 4};
};

struct SamplingConfig {
    int level = 2;            // icosphere subdivision level k
    int blocks = 10;          // block-centred budget: blocks ...
    int dirs_per_block = 10;  // ... times directions per block
    double d_min_factor = 1.2;
    double d_max_factor = 4.0;
};

struct RenderConfig {
    int image_size = 224;  // dataset images
    int frame_size = 256;  // query and service frames, image-mode reward
    int trajectory_frame_size = 128;
    double fov_deg = 45;
    double step = 0;
    int threads = 0;

    RenderSettings settings() const {
        RenderSettings s;
        s.step = step;
        s.threads = threads;
        return s;
    }
    double fov() const { return fov_deg * std::numbers::pi / 180.0; }
};

struct EmbeddingConfig {
    std::string provider = "reference";  // reference | http
    std::uint64_t reference_seed = 0x5eed;
    HttpClientConfig http;
};

struct CaptionConfig {
    std::string mode = "template";  // template | external
    HttpClientConfig http{"http://127.0.0.1:8701"};
    std::filesystem::path cache;  // external captions; defaults to <work>/<dataset>/caption_cache
};

struct AlignmentSection {
    AlignmentConfig train;
    std::size_t hidden = 512;
};

struct EncoderSection {
    BlockEncoderDims dims;
    BlockEncoderConfig train;
};

struct RlSection {
    rl::PPOConfig ppo;
    rl::EnvConfig env;
    double initial_log_std = -0.5;
    std::size_t goals = 16;          // distinct template captions used as training goals
    int restarts = 4;                // best_viewpoint restarts at query time
    int per_prompt_episodes = 40;    // --train-per-prompt budget
};

struct SweepConfig {
    std::vector<int> grids{2, 4, 8};
    std::size_t steps = 100;
    std::size_t views_per_step = 16;
    std::size_t goals = 4;
    int candidate_level = 1;  // icosphere level of the exhaustive candidate set
};

struct ServiceConfig {
    std::string listen = "127.0.0.1:8080";
    RewardMode reward_mode = RewardMode::Block;
    int restarts = 4;
};

struct ProjectConfig {
    std::filesystem::path work_dir = "work";
    std::uint64_t seed = 7;
    std::vector<DatasetConfig> datasets;
    SamplingConfig sampling;
    RenderConfig render;
    EmbeddingConfig embedding;
    CaptionConfig caption;
    AlignmentSection alignment;
    EncoderSection encoder;
    RlSection rl;
    SweepConfig sweep;
    ServiceConfig service;

    const DatasetConfig& dataset(std::string_view name = {}) const {
        if (datasets.empty()) throw ConfigError("the project configures no datasets");
        if (name.empty()) return datasets.front();
        for (const auto& d : datasets)
            if (d.name == name) return d;
        throw ConfigError("unknown dataset '" + std::string(name) + "'");
    }
    std::filesystem::path dataset_dir(const DatasetConfig& d) const { return work_dir / d.name; }
    DepthRange depth_range(double radius) const {
        return DepthRange::for_radius(radius, sampling.d_min_factor, sampling.d_max_factor);
    }
    void validate() const;
};

namespace detail {

/// Typed reads that mark keys as consumed; anything left over is an unknown key.
class ConfigReader {
public:
    explicit ConfigReader(const TomlDocument& doc) : doc_(doc) {}

    bool has(const std::string& key) const { return doc_.values.count(key) > 0; }

    template <class T>
    void read(const std::string& key, T& out) {
        const auto it = doc_.values.find(key);
        if (it == doc_.values.end()) return;
        used_.insert(key);
        convert(key, it->second, out);
    }

    void finish() const {
        for (const auto& [k, v] : doc_.values)
            if (!used_.count(k))
                throw ConfigError("config line " + std::to_string(doc_.lines.at(k)) + ": unknown key '" + k + "'");
    }

private:
    [[noreturn]] void type_error(const std::string& key, const char* want) const {
        throw ConfigError("config line " + std::to_string(doc_.lines.at(key)) + ": '" + key + "' must be " + want);
    }
    static bool as_number(const TomlValue& v, double& out) {
        if (auto* i = std::get_if<long long>(&v.v)) return out = static_cast<double>(*i), true;
        if (auto* d = std::get_if<double>(&v.v)) return out = *d, true;
        return false;
    }
    void convert(const std::string& key, const TomlValue& v, double& out) const {
        if (!as_number(v, out)) type_error(key, "a number");
    }
    void convert(const std::string& key, const TomlValue& v, bool& out) const {
        auto* b = std::get_if<bool>(&v.v);
        if (!b) type_error(key, "true or false");
        out = *b;
    }
    void convert(const std::string& key, const TomlValue& v, std::string& out) const {
        auto* s = std::get_if<std::string>(&v.v);
        if (!s) type_error(key, "a quoted string");
        out = *s;
    }
    void convert(const std::string& key, const TomlValue& v, std::filesystem::path& out) const {
        std::string s;
        convert(key, v, s);
        out = s;
    }
    template <class I>
        requires std::is_integral_v<I>
    void convert(const std::string& key, const TomlValue& v, I& out) const {
        auto* i = std::get_if<long long>(&v.v);
        if (!i) type_error(key, "an integer");
        if (std::is_unsigned_v<I> && *i < 0) type_error(key, "non-negative");
        out = static_cast<I>(*i);
    }
    void convert(const std::string& key, const TomlValue& v, std::vector<int>& out) const {
        auto* a = std::get_if<TomlArray>(&v.v);
        if (!a) type_error(key, "an array of integers");
        out.clear();
        for (const auto& x : *a) {
            auto* i = std::get_if<long long>(&x.v);
            if (!i) type_error(key, "an array of integers");
            out.push_back(static_cast<int>(*i));
        }
    }
    void convert(const std::string& key, const TomlValue& v, Int3& out) const {
        std::vector<int> xs;
        convert(key, v, xs);
        if (xs.size() != 3) type_error(key, "an array of 3 integers");
        out = {xs[0], xs[1], xs[2]};
    }
    void convert(const std::string& key, const TomlValue& v, RewardMode& out) const {
        std::string s;
        convert(key, v, s);
        out = parse_reward_mode(s);
    }

    const TomlDocument& doc_;
    std::set<std::string> used_;
};

inline void read_http(ConfigReader& r, const std::string& prefix, HttpClientConfig& h) {
    r.read(prefix + "url", h.base_url);
    r.read(prefix + "timeout_s", h.timeout_s);
    r.read(prefix + "retries", h.retries);
    r.read(prefix + "max_in_flight", h.max_in_flight);
    r.read(prefix + "backoff_s", h.backoff_s);
}

inline std::filesystem::path resolve(const std::filesystem::path& base, const std::filesystem::path& p) {
    if (p.empty() || p.is_absolute() || base.empty()) return p;
    return base / p;
}

} // namespace detail

inline void ProjectConfig::validate() const {
    std::set<std::string> names;
    for (const auto& d : datasets) {
        if (!names.insert(d.name).second) throw ConfigError("dataset '" + d.name + "' is configured twice");
        if (d.volume.empty()) throw ConfigError("dataset '" + d.name + "' has no volume path");
        if (d.grid.x <= 0 || d.grid.y <= 0 || d.grid.z <= 0) throw ConfigError("dataset '" + d.name + "' grid must be positive");
    }
    if (sampling.level < 0 || sampling.blocks < 0 || sampling.dirs_per_block < 0)
        throw ConfigError("sampling counts must be non-negative");
    if (!(sampling.d_min_factor > 0 && sampling.d_max_factor > sampling.d_min_factor))
        throw ConfigError("depth factors must satisfy 0 < d_min_factor < d_max_factor");
    if (render.image_size <= 0 || render.frame_size <= 0 || render.trajectory_frame_size <= 0)
        throw ConfigError("render sizes must be positive");
    if (!(render.fov_deg > 0 && render.fov_deg < 180)) throw ConfigError("render fov_deg must lie in (0, 180)");
    if (embedding.provider != "reference" && embedding.provider != "http")
        throw ConfigError("embedding.provider must be 'reference' or 'http'");
    if (caption.mode != "template" && caption.mode != "external")
        throw ConfigError("caption.mode must be 'template' or 'external'");
    if (alignment.hidden == 0 || alignment.train.batch_size == 0) throw ConfigError("alignment sizes must be positive");
    rl.ppo.validate();
    if (rl.env.horizon <= 0) throw ConfigError("rl.horizon must be positive");
    if (rl.restarts < 1 || service.restarts < 1) throw ConfigError("restarts must be at least 1");
    if (rl.goals == 0) throw ConfigError("rl.goals must be positive");
    for (int g : sweep.grids)
        if (g <= 0) throw ConfigError("sweep grids must be positive");
}

/// Builds a configuration from a parsed document; relative paths resolve against `base_dir`.
inline ProjectConfig project_config(const TomlDocument& doc, const std::filesystem::path& base_dir = {}) {
    using detail::resolve;
    ProjectConfig c;
    detail::ConfigReader r(doc);
    r.read("project.work_dir", c.work_dir);
    r.read("project.seed", c.seed);

    for (const auto& t : doc.tables) {
        if (t.rfind("datasets.", 0) != 0) continue;
        DatasetConfig d;
        d.name = t.substr(9);
        if (d.name.find('.') != std::string::npos) throw ConfigError("bad dataset table [" + t + "]");
        const std::string p = t + ".";
        r.read(p + "volume", d.volume);
        r.read(p + "metadata", d.metadata);
        r.read(p + "transfer_function", d.transfer_function);
        r.read(p + "descriptor", d.descriptor);
        r.read(p + "grid", d.grid);
        d.volume = resolve(base_dir, d.volume);
        d.metadata = d.metadata.empty() ? std::filesystem::path(d.volume).replace_extension(".meta")
                                        : resolve(base_dir, d.metadata);
        d.transfer_function = d.transfer_function.empty() ? asset_dir() / "tf" / (d.name + ".tf")
                                                          : resolve(base_dir, d.transfer_function);
        if (d.descriptor.empty()) d.descriptor = d.name;
        else if (std::filesystem::path(d.descriptor).has_parent_path()) d.descriptor = resolve(base_dir, d.descriptor).string();
        c.datasets.push_back(std::move(d));
    }

    auto& s = c.sampling;
    r.read("sampling.level", s.level);
    r.read("sampling.blocks", s.blocks);
    r.read("sampling.dirs_per_block", s.dirs_per_block);
    r.read("sampling.d_min_factor", s.d_min_factor);
    r.read("sampling.d_max_factor", s.d_max_factor);

    auto& rd = c.render;
    r.read("render.image_size", rd.image_size);
    r.read("render.frame_size", rd.frame_size);
    r.read("render.trajectory_frame_size", rd.trajectory_frame_size);
    r.read("render.fov_deg", rd.fov_deg);
    r.read("render.step", rd.step);
    r.read("render.threads", rd.threads);

    r.read("embedding.provider", c.embedding.provider);
    r.read("embedding.reference_seed", c.embedding.reference_seed);
    detail::read_http(r, "embedding.", c.embedding.http);
    c.embedding.http = with_env_url(c.embedding.http, "VOXNAV_EMBED_URL");

    r.read("caption.mode", c.caption.mode);
    r.read("caption.cache", c.caption.cache);
    c.caption.cache = resolve(base_dir, c.caption.cache);
    detail::read_http(r, "caption.", c.caption.http);
    c.caption.http = with_env_url(c.caption.http, "VOXNAV_CAPTION_URL");

    auto& a = c.alignment;
    r.read("alignment.batch_size", a.train.batch_size);
    r.read("alignment.learning_rate", a.train.learning_rate);
    r.read("alignment.epochs", a.train.epochs);
    r.read("alignment.weight_decay", a.train.weight_decay);
    r.read("alignment.drop_last", a.train.drop_last);
    r.read("alignment.holdout_fraction", a.train.holdout_fraction);
    r.read("alignment.hidden", a.hidden);

    auto& e = c.encoder;
    r.read("encoder.lattice", e.dims.lattice);
    r.read("encoder.conv1", e.dims.conv1);
    r.read("encoder.conv2", e.dims.conv2);
    r.read("encoder.feature", e.dims.feature);
    r.read("encoder.positional", e.dims.positional);
    r.read("encoder.hidden", e.dims.hidden);
    r.read("encoder.steps", e.train.steps);
    r.read("encoder.learning_rate", e.train.learning_rate);
    r.read("encoder.weight_decay", e.train.weight_decay);
    r.read("encoder.views_per_step", e.train.views_per_step);

    auto& p = c.rl.ppo;
    r.read("rl.gamma", p.gamma);
    r.read("rl.lambda", p.lambda);
    r.read("rl.clip_epsilon", p.clip_epsilon);
    r.read("rl.epochs", p.epochs);
    r.read("rl.minibatch", p.minibatch);
    r.read("rl.entropy_coef", p.entropy_coef);
    r.read("rl.value_coef", p.value_coef);
    r.read("rl.learning_rate", p.learning_rate);
    r.read("rl.episodes", p.max_episodes);
    r.read("rl.episodes_per_update", p.episodes_per_update);
    r.read("rl.horizon", c.rl.env.horizon);
    p.horizon = c.rl.env.horizon;
    r.read("rl.success_threshold", c.rl.env.success_threshold);
    r.read("rl.orientation_step", c.rl.env.orientation_step);
    r.read("rl.depth_step", c.rl.env.depth_step);
    r.read("rl.reward_mode", c.rl.env.mode);
    r.read("rl.initial_log_std", c.rl.initial_log_std);
    r.read("rl.goals", c.rl.goals);
    r.read("rl.restarts", c.rl.restarts);
    r.read("rl.per_prompt_episodes", c.rl.per_prompt_episodes);
    c.rl.env.min_depth = c.sampling.d_min_factor;
    c.rl.env.max_depth = c.sampling.d_max_factor;

    r.read("sweep.grids", c.sweep.grids);
    r.read("sweep.steps", c.sweep.steps);
    r.read("sweep.views_per_step", c.sweep.views_per_step);
    r.read("sweep.goals", c.sweep.goals);
    r.read("sweep.candidate_level", c.sweep.candidate_level);

    r.read("service.listen", c.service.listen);
    r.read("service.reward_mode", c.service.reward_mode);
    r.read("service.restarts", c.service.restarts);

    r.finish();
    for (const auto& t : doc.tables) {
        static const std::set<std::string> known{"project", "sampling", "render", "embedding", "caption", "alignment",
                                                 "encoder", "rl", "sweep", "service"};
        if (!known.count(t) && t.rfind("datasets.", 0) != 0) throw ConfigError("unknown config table [" + t + "]");
    }
    c.work_dir = resolve(base_dir, c.work_dir);
    c.validate();
    return c;
}

inline ProjectConfig load_project_config(const std::filesystem::path& path) {
    return project_config(parse_toml(read_text_file(path)), path.parent_path());
}

} // namespace voxnav::service
