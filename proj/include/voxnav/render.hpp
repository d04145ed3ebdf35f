#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <thread>
#include <vector>

#include "camera.hpp"
#include "error.hpp"
#include "volume.hpp"

namespace voxnav {

/// RGBA image, row-major from the top-left, channels in [0,1].
struct Image {
    int width = 0;
    int height = 0;
    std::vector<float> pixels;

    Image() = default;
    Image(int w, int h, Rgba fill = {})
        : width(w), height(h), pixels(static_cast<std::size_t>(w) * h * 4) {
        for (std::size_t i = 0; i < pixels.size(); i += 4) {
            pixels[i] = static_cast<float>(fill.r);
            pixels[i + 1] = static_cast<float>(fill.g);
            pixels[i + 2] = static_cast<float>(fill.b);
            pixels[i + 3] = static_cast<float>(fill.a);
        }
    }

    float* at(int x, int y) { return &pixels[(static_cast<std::size_t>(y) * width + x) * 4]; }
    const float* at(int x, int y) const { return &pixels[(static_cast<std::size_t>(y) * width + x) * 4]; }
    bool operator==(const Image&) const = default;
};

struct RenderSettings {
    double step = 0;  // world units; 0 selects half the minimum voxel spacing
    Rgba background{0, 0, 0, 1};
    double termination_alpha = 0.98;
    /// 0 uses std::thread::hardware_concurrency().
    unsigned threads = 0;
};

namespace detail {

/// Slab test; returns the half-open parameter interval [t0, t1) inside the box.
inline bool ray_box(const Vec3& o, const Vec3& d, const Vec3& lo, const Vec3& hi, double& t0, double& t1) {
    t0 = 0;
    t1 = std::numeric_limits<double>::infinity();
    for (int a = 0; a < 3; ++a) {
        if (std::abs(d[a]) < 1e-300) {
            if (o[a] < lo[a] || o[a] >= hi[a]) return false;
            continue;
        }
        double ta = (lo[a] - o[a]) / d[a];
        double tb = (hi[a] - o[a]) / d[a];
        if (ta > tb) std::swap(ta, tb);
        t0 = std::max(t0, ta);
        t1 = std::min(t1, tb);
    }
    return t0 < t1;
}

} // namespace detail

/// Unit ray direction through the centre of pixel (px, py).
inline Vec3 pixel_ray(const CameraFrame& f, int px, int py, int width, int height) {
    const double tv = std::tan(f.fov / 2);
    const double sx = (2.0 * (px + 0.5) / width - 1.0) * tv * f.aspect;
    const double sy = (1.0 - 2.0 * (py + 0.5) / height) * tv;
    return normalized(f.forward + f.right * sx + f.up * sy);
}

/// Emission-absorption raycast with front-to-back compositing and trilinear sampling.
inline Image render(const Volume& vol, const TransferFunction& tf, const CameraFrame& frame,
                    const RenderSettings& settings, int width, int height) {
    if (width <= 0 || height <= 0) throw ConfigError("render size must be positive");
    const double step = settings.step > 0 ? settings.step : 0.5 * vol.min_spacing();
    // Opacities are defined per voxel length and corrected for the sampling step.
    const double opacity_exponent = step / vol.min_spacing();
    const Vec3 lo = vol.box_min();
    const Vec3 hi = vol.box_max();

    Image img(width, height);
    auto shade_rows = [&](int row_begin, int row_end) {
        for (int py = row_begin; py < row_end; ++py)
            for (int px = 0; px < width; ++px) {
                const Vec3 dir = pixel_ray(frame, px, py, width, height);
                double c[3] = {0, 0, 0};
                double acc = 0;
                double t0, t1;
                if (detail::ray_box(frame.eye, dir, lo, hi, t0, t1)) {
                    t0 = std::max(t0, frame.near_plane);
                    t1 = std::min(t1, frame.far_plane);
                    for (double t = t0 + 0.5 * step; t < t1; t += step) {
                        const Rgba s = tf.lookup(vol.sample(frame.eye + dir * t));
                        if (s.a <= 0) continue;
                        const double alpha = s.a >= 1 ? 1.0 : 1.0 - std::pow(1.0 - s.a, opacity_exponent);
                        const double w = (1 - acc) * alpha;
                        c[0] += w * s.r;
                        c[1] += w * s.g;
                        c[2] += w * s.b;
                        acc += w;
                        if (acc >= settings.termination_alpha) break;
                    }
                }
                const Rgba& bg = settings.background;
                float* out = img.at(px, py);
                out[0] = static_cast<float>(std::clamp(c[0] + (1 - acc) * bg.r, 0.0, 1.0));
                out[1] = static_cast<float>(std::clamp(c[1] + (1 - acc) * bg.g, 0.0, 1.0));
                out[2] = static_cast<float>(std::clamp(c[2] + (1 - acc) * bg.b, 0.0, 1.0));
                out[3] = static_cast<float>(std::clamp(acc + (1 - acc) * bg.a, 0.0, 1.0));
            }
    };

    unsigned threads = settings.threads ? settings.threads : std::max(1u, std::thread::hardware_concurrency());
    threads = std::min<unsigned>(threads, static_cast<unsigned>(height));
    if (threads <= 1) {
        shade_rows(0, height);
    } else {
        std::vector<std::jthread> pool;
        const int chunk = (height + static_cast<int>(threads) - 1) / static_cast<int>(threads);
        for (int r = 0; r < height; r += chunk) pool.emplace_back(shade_rows, r, std::min(height, r + chunk));
    }
    return img;
}

/// Accumulated opacity along a single ray, sample by sample (used to check compositing bounds).
inline std::vector<double> ray_alpha_profile(const Volume& vol, const TransferFunction& tf, const Vec3& origin,
                                             const Vec3& dir, double step) {
    std::vector<double> profile;
    double t0, t1;
    if (!detail::ray_box(origin, dir, vol.box_min(), vol.box_max(), t0, t1)) return profile;
    const double exponent = step / vol.min_spacing();
    double acc = 0;
    for (double t = t0 + 0.5 * step; t < t1; t += step) {
        const Rgba s = tf.lookup(vol.sample(origin + dir * t));
        const double alpha = s.a >= 1 ? 1.0 : 1.0 - std::pow(1.0 - s.a, exponent);
        acc += (1 - acc) * alpha;
        profile.push_back(acc);
    }
    return profile;
}

} // namespace voxnav
