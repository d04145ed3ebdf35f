#pragma once

#include <array>
#include <cmath>
#include <numeric>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "camera.hpp"
#include "embedding/alignment.hpp"
#include "embedding/vector.hpp"
#include "render.hpp"
#include "volume.hpp"

namespace voxnav {

/// Three Gaussian blobs of distinct density, placed so no mirror or rotation
/// maps the volume onto itself.
inline Volume make_toy_volume(int side = 64) {
    struct Blob {
        Vec3 c;
        double r, density;
    };
    static constexpr std::array<Blob, 3> blobs{{{{0.22, 0.02, -0.04}, 0.14, 0.9},
                                                {{-0.16, 0.2, 0.08}, 0.1, 0.55},
                                                {{-0.02, -0.14, -0.24}, 0.11, 0.3}}};
    ScalarField f({side, side, side});
    for (int z = 0; z < side; ++z)
        for (int y = 0; y < side; ++y)
            for (int x = 0; x < side; ++x) {
                const Vec3 p{(x + 0.5) / side - 0.5, (y + 0.5) / side - 0.5, (z + 0.5) / side - 0.5};
                double v = 0;
                for (const auto& b : blobs) {
                    const double d2 = dot(p - b.c, p - b.c) / (b.r * b.r);
                    v = std::max(v, b.density * std::exp(-d2 * 2.0));
                }
                f.at(x, y, z) = static_cast<float>(v);
            }
    return Volume("toy", {1, 1, 1}, std::move(f));
}

inline TransferFunction toy_transfer_function() {
    return TransferFunction({{0.0, {0, 0, 0, 0}},
                             {0.12, {0.1, 0.2, 0.9, 0.0}},
                             {0.3, {0.2, 0.4, 1.0, 0.25}},
                             {0.55, {0.2, 0.9, 0.3, 0.45}},
                             {0.9, {1.0, 0.25, 0.1, 0.8}},
                             {1.0, {1, 1, 1, 0.9}}});
}

/// "left lower front" style name of an octant index (bit 0: +x, bit 1: +y, bit 2: +z).
inline std::string octant_name(int octant) {
    return std::string(octant & 1 ? "right" : "left") + (octant & 2 ? " upper" : " lower") +
           (octant & 4 ? " rear" : " front");
}

/// Image-caption pairs rendered from random directions whose caption names
/// the octant of the eye. Pair i views octant i % 8.
inline std::vector<PairedSample> synthetic_octant_pairs(const Volume& vol, const TransferFunction& tf, std::size_t n,
                                                        std::uint64_t seed, int image_size = 32) {
    std::mt19937_64 rng(mix_seed(seed, 0x0c7a));
    std::uniform_real_distribution<double> mag(0.25, 1.0);
    const double R = vol.radius();
    const double depth = DepthRange::for_radius(R).mid();
    RenderSettings rs;
    rs.threads = 1;
    std::vector<PairedSample> out;
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        const int o = static_cast<int>(i % 8);
        const Vec3 dir{(o & 1 ? 1 : -1) * mag(rng), (o & 2 ? 1 : -1) * mag(rng), (o & 4 ? 1 : -1) * mag(rng)};
        const Viewpoint v = viewpoint_from_direction(dir, depth);
        PairedSample p;
        p.image = render(vol, tf, to_camera_frame(v, std::numbers::pi / 4, 1.0, R), rs, image_size, image_size);
        p.caption = octant_name(o) + " octant view of the toy volume";
        p.provenance = "synthetic:octant=" + std::to_string(o);
        out.push_back(std::move(p));
    }
    return out;
}

/// `k` orthonormal vectors of length kEmbeddingDim drawn from a seeded Gaussian.
inline std::vector<EmbeddingVector> random_orthonormal(std::size_t k, std::uint64_t seed) {
    if (k > kEmbeddingDim) throw ConfigError("more orthonormal vectors than dimensions");
    std::mt19937_64 rng(mix_seed(seed, 0x0b7e));
    std::normal_distribution<double> normal;
    std::vector<std::vector<double>> basis;
    for (std::size_t i = 0; i < k; ++i) {
        std::vector<double> v(kEmbeddingDim);
        for (auto& x : v) x = normal(rng);
        for (const auto& b : basis) {
            const double c = std::inner_product(b.begin(), b.end(), v.begin(), 0.0);
            for (std::size_t j = 0; j < v.size(); ++j) v[j] -= c * b[j];
        }
        const double n = std::sqrt(std::inner_product(v.begin(), v.end(), v.begin(), 0.0));
        for (auto& x : v) x /= n;
        basis.push_back(std::move(v));
    }
    return {basis.begin(), basis.end()};
}

/// Octant index of the eye (bit 0: +x, bit 1: +y, bit 2: +z).
inline int eye_octant(const Viewpoint& v) {
    const Vec3 e = v.eye();
    return (e.x >= 0 ? 1 : 0) | (e.y >= 0 ? 2 : 0) | (e.z >= 0 ? 4 : 0);
}

/// One random orthonormal target per eye octant.
inline std::vector<EmbeddingVector> octant_targets(const ViewpointSet& set, std::uint64_t seed) {
    const auto basis = random_orthonormal(8, seed);
    std::vector<EmbeddingVector> out;
    for (const auto& v : set.viewpoints) out.push_back(basis[static_cast<std::size_t>(eye_octant(v))]);
    return out;
}

/// Targets varying smoothly with the view: normalize(B [u; w (d - mid) / half]) with
/// u the unit direction from the look-at point to the eye and B orthonormal.
/// cos(t(v), t(v')) reduces to (u.u' + w^2 s s') / norms, one peak per goal.
inline std::vector<EmbeddingVector> view_direction_targets(const ViewpointSet& set, const DepthRange& range,
                                                           std::uint64_t seed, double depth_weight = 1.0) {
    const auto basis = random_orthonormal(4, seed);
    const double half = (range.max - range.min) / 2;
    std::vector<EmbeddingVector> out;
    for (const auto& v : set.viewpoints) {
        const Vec3 u = -v.forward();
        const std::array<double, 4> c{u.x, u.y, u.z, depth_weight * (v.depth - range.mid()) / half};
        std::vector<double> t(kEmbeddingDim, 0.0);
        for (std::size_t k = 0; k < 4; ++k)
            for (std::size_t j = 0; j < kEmbeddingDim; ++j) t[j] += c[k] * basis[k][j];
        out.push_back(EmbeddingVector(std::move(t)).normalized());
    }
    return out;
}

/// Level-1 icosphere directions (42) at mid depth.
inline ViewpointSet toy_views(double radius) {
    ViewpointSet set;
    const double d = DepthRange::for_radius(radius).mid();
    for (const auto& dir : icosphere_vertices(1)) set.push_back(viewpoint_from_direction(dir, d), {});
    return set;
}

/// The 42 toy directions at each depth ratio in `depths` (units of R).
inline ViewpointSet toy_views(double radius, const std::vector<double>& depths) {
    ViewpointSet set;
    for (const auto& dir : icosphere_vertices(1))
        for (double k : depths) set.push_back(viewpoint_from_direction(dir, k * radius), {});
    return set;
}

} // namespace voxnav
