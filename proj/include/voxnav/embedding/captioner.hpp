#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <string>
#include <vector>

#include "../camera.hpp"
#include "../png.hpp"
#include "../text.hpp"
#include "../volume.hpp"
#include "http_provider.hpp"

namespace voxnav {

/// Per-dataset caption vocabulary and instruction prompts.
struct DatasetDescriptor {
    std::string name;
    std::string subject;
    std::string overview = "overall structure";
    std::array<std::vector<std::string>, 3> axis;  // region tokens along x, y, z
    std::vector<std::string> prompts;

    const std::string& prompt_for(std::size_t index) const {
        if (prompts.empty()) throw ConfigError("descriptor '" + name + "' has no prompts");
        return prompts[index % prompts.size()];
    }
};

inline DatasetDescriptor parse_descriptor(std::string_view text) {
    DatasetDescriptor d;
    for (const auto& [key, value] : parse_key_values(text)) {
        if (key == "name") d.name = value;
        else if (key == "subject") d.subject = value;
        else if (key == "overview") d.overview = value;
        else if (key == "prompt") d.prompts.push_back(value);
        else if (key == "axis.x" || key == "axis.y" || key == "axis.z") {
            auto& vocab = d.axis[static_cast<std::size_t>(key.back() - 'x')];
            vocab.clear();
            for (const auto& t : split(value, ',')) {
                const auto tok = trim(t);
                if (tok.empty()) throw MalformedInputError("empty region token in " + key);
                vocab.push_back(tok);
            }
        } else {
            throw MalformedInputError("unknown descriptor key '" + key + "'");
        }
    }
    if (d.name.empty()) throw MalformedInputError("descriptor lacks a name");
    if (d.subject.empty()) d.subject = d.name;
    for (int a = 0; a < 3; ++a)
        if (d.axis[a].empty()) throw MalformedInputError("descriptor '" + d.name + "' lacks region vocabulary for axis " +
                                                         std::string(1, static_cast<char>('x' + a)));
    return d;
}

inline std::filesystem::path asset_dir() {
    if (const char* v = std::getenv("VOXNAV_ASSETS"); v && *v) return v;
#ifdef VOXNAV_ASSET_DIR
    return VOXNAV_ASSET_DIR;
#else
    return "assets";
#endif
}

/// Loads a descriptor from a file path, or by dataset name from the asset directory.
inline DatasetDescriptor load_descriptor(const std::string& name_or_path) {
    std::filesystem::path p(name_or_path);
    if (!std::filesystem::exists(p)) p = asset_dir() / "captions" / (name_or_path + ".txt");
    return parse_descriptor(read_text_file(p));
}

/// "close-up", "mid-range" or "distant" by depth tercile of the allowed range.
inline std::string distance_phrase(double depth, const DepthRange& range) {
    const double t = (depth - range.min) / (range.max - range.min);
    if (t < 1.0 / 3.0) return "close-up";
    if (t < 2.0 / 3.0) return "mid-range";
    return "distant";
}

/// Direction phrase from the eye position relative to the look-at point: the
/// dominant axis picks the view, the other two add modifiers when pronounced.
inline std::string direction_phrase(const Viewpoint& v) {
    const Vec3 u = normalized(v.forward() * -1.0);
    const std::array<double, 3> c{u.x, u.y, u.z};
    int dom = 0;
    for (int a = 1; a < 3; ++a)
        if (std::abs(c[a]) > std::abs(c[dom])) dom = a;
    static const std::array<std::array<const char*, 2>, 3> views{
        {{"left-side", "right-side"}, {"bottom-up", "top-down"}, {"frontal", "rear"}}};
    static const std::array<std::array<const char*, 2>, 3> mods{{{"left", "right"}, {"low", "high"}, {"front", "rear"}}};
    std::string out;
    for (int a : {1, 0, 2}) {
        if (a == dom || std::abs(c[a]) <= 0.35) continue;
        out += mods[a][c[a] > 0];
        out += ' ';
    }
    return out + views[dom][c[dom] > 0];
}

/// Region token for a grid index: each axis index maps proportionally into
/// that axis's vocabulary; tokens are joined y, x, z when distinct.
inline std::string region_token(const DatasetDescriptor& d, Int3 grid_dims, Int3 index) {
    const std::array<int, 3> idx{index.x, index.y, index.z}, dims{grid_dims.x, grid_dims.y, grid_dims.z};
    std::array<std::string, 3> part;
    for (int a = 0; a < 3; ++a) {
        const auto& vocab = d.axis[a];
        const std::size_t k =
            std::min(vocab.size() - 1, static_cast<std::size_t>(idx[a]) * vocab.size() / static_cast<std::size_t>(dims[a]));
        part[a] = vocab[k];
    }
    return part[1] + " " + part[0] + " " + part[2];
}

/// Data handed to a captioner for one rendered view.
struct CaptionInput {
    const Image* image = nullptr;
    Viewpoint viewpoint;
    Provenance provenance;
    std::size_t index = 0;  // position in the viewpoint set; selects the prompt
};

class Captioner {
public:
    virtual ~Captioner() = default;
    virtual std::string identity() const = 0;
    virtual std::string caption(const CaptionInput& in) const = 0;
};

/// Deterministic template fill from viewpoint provenance and block statistics.
class TemplateCaptioner final : public Captioner {
public:
    TemplateCaptioner(DatasetDescriptor descriptor, DepthRange range, const BlockGrid* grid = nullptr)
        : d_(std::move(descriptor)), range_(range) {
        if (grid) {
            grid_dims_ = grid->grid_dims();
            for (const auto& b : grid->blocks()) means_.push_back(b.mean_density);
            std::vector<double> sorted = means_;
            std::sort(sorted.begin(), sorted.end());
            if (!sorted.empty()) median_ = sorted[sorted.size() / 2];
            indices_.reserve(grid->size());
            for (const auto& b : grid->blocks()) indices_.push_back(b.index);
        }
    }

    std::string identity() const override { return "template:" + d_.name; }

    std::string caption(const CaptionInput& in) const override {
        std::string s = distance_phrase(in.viewpoint.depth, range_) + " " + direction_phrase(in.viewpoint) + " view of " +
                        d_.subject;
        if (in.provenance.kind == ViewpointKind::BlockCentered) {
            const int j = in.provenance.block;
            if (j < 0 || static_cast<std::size_t>(j) >= indices_.size())
                throw LogicError("block-centred caption needs the block grid that produced the viewpoint");
            const char* density = means_[static_cast<std::size_t>(j)] >= median_ ? "dense" : "sparse";
            s += " focusing on the " + std::string(density) + " " +
                 region_token(d_, grid_dims_, indices_[static_cast<std::size_t>(j)]) + " region";
        } else {
            s += " showing " + d_.overview;
        }
        return s;
    }

    const DatasetDescriptor& descriptor() const { return d_; }

private:
    DatasetDescriptor d_;
    DepthRange range_;
    Int3 grid_dims_{};
    std::vector<double> means_;
    std::vector<Int3> indices_;
    double median_ = 0;
};

/// Sends the image and an instruction prompt to an external captioning
/// service; responses are cached on disk keyed by image bytes and prompt.
class ExternalCaptioner final : public Captioner {
public:
    ExternalCaptioner(HttpClientConfig cfg, DatasetDescriptor descriptor, std::filesystem::path cache_dir = {})
        : client_(std::move(cfg)), d_(std::move(descriptor)), cache_dir_(std::move(cache_dir)) {}

    std::string identity() const override { return "external:" + client_.config().base_url; }

    std::string caption(const CaptionInput& in) const override {
        if (!in.image) throw LogicError("external captioning needs the rendered image");
        const auto png = encode_png(*in.image);
        const std::string& prompt = d_.prompt_for(in.index);
        const std::uint64_t key = fnv1a64(prompt, fnv1a64(png.data(), png.size()));
        char name[32];
        std::snprintf(name, sizeof name, "%016llx.txt", static_cast<unsigned long long>(key));
        const auto cached = cache_dir_.empty() ? std::filesystem::path{} : cache_dir_ / name;
        if (!cached.empty() && std::filesystem::exists(cached)) return read_text_file(cached);
        const auto j = client_.post("/caption", {{"png_base64", base64_encode(png)}, {"prompt", prompt}});
        if (!j.is_object() || !j.contains("text") || !j["text"].is_string())
            throw MalformedInputError("caption response lacks a \"text\" string");
        std::string text = j["text"].get<std::string>();
        if (trim(text).empty()) throw MalformedInputError("caption service returned empty text");
        if (!cached.empty()) write_text_file(cached, text);
        return text;
    }

private:
    JsonHttpClient client_;
    DatasetDescriptor d_;
    std::filesystem::path cache_dir_;
};

} // namespace voxnav
