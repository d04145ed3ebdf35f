#pragma once

#include <cctype>
#include <cmath>
#include <memory>
#include <numeric>
#include <numbers>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "../error.hpp"
#include "../math.hpp"
#include "../nn/tensor.hpp"
#include "../render.hpp"
#include "vector.hpp"

namespace voxnav {

/// Text and image embedder. Implementations must be safe for concurrent use.
class EmbeddingProvider {
public:
    virtual ~EmbeddingProvider() = default;
    /// Stable identifier recorded in manifests (backend and its parameters).
    virtual std::string identity() const = 0;
    virtual EmbeddingVector embed_text(std::string_view text) const = 0;
    virtual EmbeddingVector embed_image(const Image& img) const = 0;
};

/// Lowercased alphanumeric runs; bytes >= 0x80 are kept inside tokens.
inline std::vector<std::string> tokenize(std::string_view text) {
    std::vector<std::string> tokens;
    std::string cur;
    for (char ch : text) {
        const auto c = static_cast<unsigned char>(ch);
        if (std::isalnum(c) || c >= 0x80) {
            cur += static_cast<char>(std::tolower(c));
        } else if (!cur.empty()) {
            tokens.push_back(std::move(cur));
            cur.clear();
        }
    }
    if (!cur.empty()) tokens.push_back(std::move(cur));
    return tokens;
}

/// Bucket and sign of a token under the reference text embedding.
struct HashedToken {
    std::size_t bucket;
    double sign;
};

inline HashedToken hash_token(std::string_view token) {
    const std::uint64_t h = fnv1a64(token);
    return {static_cast<std::size_t>(h % kEmbeddingDim), (h >> 63) ? -1.0 : 1.0};
}

namespace detail {

inline constexpr int kLumaGrid = 16;
inline constexpr int kColorGrid = 4;
inline constexpr int kOrientationBins = 8;
inline constexpr std::size_t kImageFeatures =
    kLumaGrid * kLumaGrid + 3 * kColorGrid * kColorGrid + kOrientationBins + 4 + 1;
inline constexpr double kBiasFeature = 0.1;

inline double luminance(const float* p) { return 0.2126 * p[0] + 0.7152 * p[1] + 0.0722 * p[2]; }

} // namespace detail

/// Hand-built image descriptor: 16x16 luminance means and 4x4 RGB means, each
/// centred on its image-wide mean so layout rather than background dominates;
/// an 8-bin gradient orientation histogram; the global luminance and RGB means;
/// and a small constant term so a black image still has a direction.
inline std::vector<double> reference_image_features(const Image& img) {
    using namespace detail;
    if (img.width <= 0 || img.height <= 0) throw MalformedInputError("cannot embed an empty image");
    std::vector<double> f(kImageFeatures, 0.0);
    std::vector<double> luma_count(kLumaGrid * kLumaGrid, 0.0), color_count(kColorGrid * kColorGrid, 0.0);
    const std::size_t color_off = kLumaGrid * kLumaGrid;
    const std::size_t hist_off = color_off + 3 * kColorGrid * kColorGrid;
    const std::size_t global_off = hist_off + kOrientationBins;
    double global[4] = {0, 0, 0, 0};
    for (int y = 0; y < img.height; ++y)
        for (int x = 0; x < img.width; ++x) {
            const float* p = img.at(x, y);
            const double l = luminance(p);
            const int lc = (y * kLumaGrid / img.height) * kLumaGrid + x * kLumaGrid / img.width;
            f[lc] += l;
            luma_count[lc] += 1;
            const int cc = (y * kColorGrid / img.height) * kColorGrid + x * kColorGrid / img.width;
            for (int c = 0; c < 3; ++c) f[color_off + 3 * cc + c] += p[c];
            color_count[cc] += 1;
            global[0] += l;
            for (int c = 0; c < 3; ++c) global[1 + c] += p[c];
        }
    const double pixels = static_cast<double>(img.width) * img.height;
    for (auto& g : global) g /= pixels;
    // Cells a small image does not reach take the image mean (zero after centring).
    for (std::size_t i = 0; i < luma_count.size(); ++i) f[i] = luma_count[i] > 0 ? f[i] / luma_count[i] - global[0] : 0.0;
    for (std::size_t i = 0; i < color_count.size(); ++i)
        for (int c = 0; c < 3; ++c) {
            double& v = f[color_off + 3 * i + c];
            v = color_count[i] > 0 ? v / color_count[i] - global[1 + c] : 0.0;
        }
    // Central differences on luminance, magnitude-weighted, normalized by pixel count.
    auto lum = [&](int x, int y) {
        x = std::clamp(x, 0, img.width - 1);
        y = std::clamp(y, 0, img.height - 1);
        return luminance(img.at(x, y));
    };
    for (int y = 0; y < img.height; ++y)
        for (int x = 0; x < img.width; ++x) {
            const double gx = 0.5 * (lum(x + 1, y) - lum(x - 1, y));
            const double gy = 0.5 * (lum(x, y + 1) - lum(x, y - 1));
            const double mag = std::hypot(gx, gy);
            if (mag == 0) continue;
            double a = std::atan2(gy, gx);
            if (a < 0) a += 2 * std::numbers::pi;
            const int bin = std::min(kOrientationBins - 1,
                                     static_cast<int>(a / (2 * std::numbers::pi) * kOrientationBins));
            f[hist_off + bin] += mag;
        }
    for (int b = 0; b < kOrientationBins; ++b) f[hist_off + b] /= pixels;
    for (int g = 0; g < 4; ++g) f[global_off + g] = global[g];
    f.back() = kBiasFeature;
    return f;
}

/// Deterministic, network-free provider: signed feature hashing for text and a
/// fixed orthonormal projection of reference_image_features for images.
class ReferenceProvider final : public EmbeddingProvider {
public:
    explicit ReferenceProvider(std::uint64_t seed = 0x5eed) : seed_(seed), projection_(build_projection(seed)) {}

    std::string identity() const override { return "reference:seed=" + std::to_string(seed_); }

    EmbeddingVector embed_text(std::string_view text) const override {
        const auto tokens = tokenize(text);
        if (tokens.empty()) throw MalformedInputError("cannot embed empty text");
        std::vector<double> v(kEmbeddingDim, 0.0);
        for (const auto& t : tokens) {
            const auto h = hash_token(t);
            v[h.bucket] += h.sign;
        }
        EmbeddingVector e(std::move(v));
        if (e.is_zero()) {
            // Every bucket cancelled; fall back to the first token alone.
            std::vector<double> w(kEmbeddingDim, 0.0);
            const auto h = hash_token(tokens.front());
            w[h.bucket] = h.sign;
            return EmbeddingVector(std::move(w));
        }
        return e.normalized();
    }

    EmbeddingVector embed_image(const Image& img) const override {
        const auto f = reference_image_features(img);
        std::vector<double> v(kEmbeddingDim, 0.0);
        // projection_ is stored feature-major: column j of the 768xF matrix is contiguous.
        for (std::size_t j = 0; j < f.size(); ++j)
            if (f[j] != 0) nn::kernels::axpy(kEmbeddingDim, f[j], &projection_[j * kEmbeddingDim], v.data());
        return EmbeddingVector(std::move(v)).normalized();
    }

    /// Column j of the projection (length 768); columns are orthonormal.
    const double* projection_column(std::size_t j) const { return &projection_[j * kEmbeddingDim]; }

private:
    static std::vector<double> build_projection(std::uint64_t seed) {
        const std::size_t F = detail::kImageFeatures;
        std::vector<double> q(F * kEmbeddingDim);
        std::mt19937_64 rng(mix_seed(seed, 0x1a9e));
        std::normal_distribution<double> n(0, 1);
        for (auto& v : q) v = n(rng);
        // Modified Gram-Schmidt over the F columns.
        auto dot = [](const double* a, const double* b) { return std::inner_product(a, a + kEmbeddingDim, b, 0.0); };
        for (std::size_t j = 0; j < F; ++j) {
            double* cj = &q[j * kEmbeddingDim];
            for (std::size_t k = 0; k < j; ++k) {
                const double* ck = &q[k * kEmbeddingDim];
                const double c = dot(ck, cj);
                for (std::size_t i = 0; i < kEmbeddingDim; ++i) cj[i] -= c * ck[i];
            }
            const double len = std::sqrt(dot(cj, cj));
            for (std::size_t i = 0; i < kEmbeddingDim; ++i) cj[i] /= len;
        }
        return q;
    }

    std::uint64_t seed_;
    std::vector<double> projection_;
};

} // namespace voxnav
