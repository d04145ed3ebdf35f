#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include "error.hpp"
#include "math.hpp"
#include "text.hpp"
#include "volume.hpp"

namespace voxnav {

/// Allowed camera distance; defaults to [1.2R, 4R] of the bounding sphere.
struct DepthRange {
    double min = 1.2;
    double max = 4.0;

    static DepthRange for_radius(double radius, double min_factor = 1.2, double max_factor = 4.0) {
        return {min_factor * radius, max_factor * radius};
    }
    double mid() const { return 0.5 * (min + max); }
    double clamp(double d) const { return std::clamp(d, min, max); }
    bool contains(double d) const { return d >= min && d <= max; }
};

/// Orientation plus distance from the look-at point. The canonical view axis is +z,
/// so the eye sits at look_at - forward * depth.
struct Viewpoint {
    Quat orientation;
    double depth = 1;
    Vec3 look_at{};

    Vec3 forward() const { return orientation.rotate({0, 0, 1}); }
    Vec3 up() const { return orientation.rotate({0, 1, 0}); }
    Vec3 right() const { return orientation.rotate({-1, 0, 0}); }
    Vec3 eye() const { return look_at - forward() * depth; }
    bool operator==(const Viewpoint&) const = default;
};

inline bool is_valid(const Viewpoint& v, const DepthRange& range) {
    return std::abs(v.orientation.norm() - 1.0) <= 1e-9 && range.contains(v.depth);
}

struct CameraFrame {
    Vec3 eye;
    Vec3 forward;
    Vec3 right;
    Vec3 up;
    double fov = std::numbers::pi / 4;  // vertical, radians
    double aspect = 1;
    double near_plane = 0.01;
    double far_plane = 100;
};

/// `radius` is the volume's bounding-sphere radius.
inline CameraFrame to_camera_frame(const Viewpoint& v, double fov, double aspect, double radius) {
    CameraFrame f;
    f.forward = v.forward();
    f.up = v.up();
    f.right = v.right();
    f.eye = v.look_at - f.forward * v.depth;
    f.fov = fov;
    f.aspect = aspect;
    f.near_plane = std::max(v.depth - 2 * radius, 0.01 * radius);
    f.far_plane = v.depth + 2 * radius;
    return f;
}

/// Orientation whose forward axis points from `eye` to `target`, with world +y as up hint.
inline Quat look_at_orientation(const Vec3& eye, const Vec3& target) {
    const Vec3 dir = target - eye;
    const double len = norm(dir);
    if (len < 1e-12) throw DegenerateError("eye coincides with look-at target");
    const Vec3 f = dir / len;
    Vec3 r = cross(f, {0, 1, 0});
    if (norm(r) < 1e-9) r = cross(f, {0, 0, 1});
    r = normalized(r);
    const Vec3 u = cross(r, f);
    return Quat::from_matrix(Mat3::from_columns(-r, u, f));
}

// ---------------------------------------------------------------------------
// Viewpoint sets

enum class ViewpointKind { Uniform, BlockCentered };

struct Provenance {
    ViewpointKind kind = ViewpointKind::Uniform;
    int block = -1;  // linear block index for block-centred entries
    bool operator==(const Provenance&) const = default;
};

struct ViewpointSet {
    std::vector<Viewpoint> viewpoints;
    std::vector<Provenance> provenance;

    std::size_t size() const { return viewpoints.size(); }
    bool empty() const { return viewpoints.empty(); }
    void push_back(const Viewpoint& v, Provenance p) {
        viewpoints.push_back(v);
        provenance.push_back(p);
    }
    void append(const ViewpointSet& other) {
        viewpoints.insert(viewpoints.end(), other.viewpoints.begin(), other.viewpoints.end());
        provenance.insert(provenance.end(), other.provenance.begin(), other.provenance.end());
    }
};

namespace detail {

struct Triangle {
    Vec3 a, b, c;
};

inline std::vector<Triangle> icosahedron_faces() {
    const double t = (1.0 + std::sqrt(5.0)) / 2;
    const std::array<Vec3, 12> p = {
        normalized({-1, t, 0}), normalized({1, t, 0}),  normalized({-1, -t, 0}), normalized({1, -t, 0}),
        normalized({0, -1, t}), normalized({0, 1, t}),  normalized({0, -1, -t}), normalized({0, 1, -t}),
        normalized({t, 0, -1}), normalized({t, 0, 1}),  normalized({-t, 0, -1}), normalized({-t, 0, 1})};
    static constexpr int idx[20][3] = {{0, 11, 5}, {0, 5, 1},  {0, 1, 7},   {0, 7, 10}, {0, 10, 11},
                                       {1, 5, 9},  {5, 11, 4}, {11, 10, 2}, {10, 7, 6}, {7, 1, 8},
                                       {3, 9, 4},  {3, 4, 2},  {3, 2, 6},   {3, 6, 8},  {3, 8, 9},
                                       {4, 9, 5},  {2, 4, 11}, {6, 2, 10},  {8, 6, 7},  {9, 8, 1}};
    std::vector<Triangle> faces;
    for (const auto& f : idx) faces.push_back({p[f[0]], p[f[1]], p[f[2]]});
    return faces;
}

/// Splits each face in four; new vertices are pushed onto the unit sphere.
inline std::vector<Triangle> subdivide(const std::vector<Triangle>& faces) {
    std::vector<Triangle> out;
    out.reserve(faces.size() * 4);
    for (const auto& f : faces) {
        const Vec3 ab = normalized((f.a + f.b) * 0.5);
        const Vec3 bc = normalized((f.b + f.c) * 0.5);
        const Vec3 ca = normalized((f.c + f.a) * 0.5);
        out.push_back({f.a, ab, ca});
        out.push_back({ab, f.b, bc});
        out.push_back({ca, bc, f.c});
        out.push_back({ab, bc, ca});
    }
    return out;
}

inline std::vector<Triangle> icosphere_faces(int level) {
    auto faces = icosahedron_faces();
    for (int i = 0; i < level; ++i) faces = subdivide(faces);
    return faces;
}

} // namespace detail

/// Unit directions at the centres of the level-k icosphere faces (20 * 4^k of them).
inline std::vector<Vec3> icosphere_face_directions(int level) {
    if (level < 0) throw ConfigError("icosphere level must be non-negative");
    std::vector<Vec3> dirs;
    for (const auto& f : detail::icosphere_faces(level)) dirs.push_back(normalized((f.a + f.b + f.c) / 3.0));
    return dirs;
}

/// Unique vertices of the level-k icosphere (10 * 4^k + 2 of them), in first-seen order.
inline std::vector<Vec3> icosphere_vertices(int level) {
    if (level < 0) throw ConfigError("icosphere level must be non-negative");
    std::vector<Vec3> out;
    std::map<std::tuple<long long, long long, long long>, bool> seen;
    for (const auto& f : detail::icosphere_faces(level))
        for (const Vec3& v : {f.a, f.b, f.c}) {
            const auto key = std::make_tuple(std::llround(v.x * 1e9), std::llround(v.y * 1e9), std::llround(v.z * 1e9));
            if (seen.emplace(key, true).second) out.push_back(v);
        }
    return out;
}

/// Camera looking at the origin from `dir * depth`.
inline Viewpoint viewpoint_from_direction(const Vec3& dir, double depth, const Vec3& look_at = {}) {
    const Vec3 eye = look_at + normalized(dir) * depth;
    return {look_at_orientation(eye, look_at), depth, look_at};
}

inline ViewpointSet icosphere_viewpoints(int level, double depth) {
    ViewpointSet set;
    for (const auto& d : icosphere_face_directions(level)) set.push_back(viewpoint_from_direction(d, depth), {});
    return set;
}

/// Distinct random block indices, reproducible by seed.
inline std::vector<int> choose_blocks(const BlockGrid& grid, int count, std::uint64_t seed) {
    if (count < 0 || static_cast<std::size_t>(count) > grid.size())
        throw ConfigError("cannot choose " + std::to_string(count) + " blocks from a grid of " +
                          std::to_string(grid.size()));
    std::vector<int> all(grid.size());
    for (std::size_t i = 0; i < all.size(); ++i) all[i] = static_cast<int>(i);
    std::mt19937_64 rng(mix_seed(seed, 1));
    for (int i = 0; i < count; ++i) {
        std::uniform_int_distribution<std::size_t> pick(static_cast<std::size_t>(i), all.size() - 1);
        std::swap(all[static_cast<std::size_t>(i)], all[pick(rng)]);
    }
    all.resize(static_cast<std::size_t>(count));
    return all;
}

/// Keeps each sampled eye position and reorients it toward a block centre.
inline Viewpoint retarget_to(const Vec3& eye, const Vec3& target) {
    const Vec3 d = target - eye;
    const double dist = norm(d);
    if (dist < 1e-12) throw DegenerateError("viewpoint coincides with block centre");
    return {look_at_orientation(eye, target), dist, target};
}

inline ViewpointSet block_centered_viewpoints(const ViewpointSet& base, const BlockGrid& grid,
                                              const std::vector<int>& blocks, int dirs_per_block,
                                              std::uint64_t seed) {
    if (base.empty()) throw ConfigError("block-centred sampling needs a non-empty base set");
    if (dirs_per_block < 0 || static_cast<std::size_t>(dirs_per_block) > base.size())
        throw ConfigError("directions per block must lie in [0, base size]");
    ViewpointSet out;
    std::mt19937_64 rng(mix_seed(seed, 2));
    std::vector<std::size_t> order(base.size());
    for (int blk : blocks) {
        if (blk < 0 || static_cast<std::size_t>(blk) >= grid.size())
            throw LogicError("block index " + std::to_string(blk) + " is outside the grid");
        for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
        for (int i = 0; i < dirs_per_block; ++i) {
            std::uniform_int_distribution<std::size_t> pick(static_cast<std::size_t>(i), order.size() - 1);
            std::swap(order[static_cast<std::size_t>(i)], order[pick(rng)]);
            const Vec3 eye = base.viewpoints[order[static_cast<std::size_t>(i)]].eye();
            out.push_back(retarget_to(eye, grid[static_cast<std::size_t>(blk)].center),
                          {ViewpointKind::BlockCentered, blk});
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Projection and visibility

/// Camera-space coordinates (right, up, forward) of a world point.
inline Vec3 to_camera_space(const Vec3& p, const CameraFrame& f) {
    const Vec3 d = p - f.eye;
    return {dot(d, f.right), dot(d, f.up), dot(d, f.forward)};
}

inline Vec3 project_block(const Block& b, const CameraFrame& f) { return to_camera_space(b.center, f); }

struct Plane {
    Vec3 normal;  // points inside the frustum
    double offset = 0;
    double signed_distance(const Vec3& p) const { return dot(normal, p) + offset; }
};

inline std::array<Plane, 6> frustum_planes(const CameraFrame& f) {
    const double tv = std::tan(f.fov / 2);
    const double th = tv * f.aspect;
    auto through_eye = [&](const Vec3& cam_normal) {
        const Vec3 n = normalized(f.right * cam_normal.x + f.up * cam_normal.y + f.forward * cam_normal.z);
        return Plane{n, -dot(n, f.eye)};
    };
    return {Plane{f.forward, -dot(f.forward, f.eye + f.forward * f.near_plane)},
            Plane{-f.forward, dot(f.forward, f.eye + f.forward * f.far_plane)},
            through_eye({1, 0, th}),
            through_eye({-1, 0, th}),
            through_eye({0, 1, tv}),
            through_eye({0, -1, tv})};
}

/// Conservative box test: rejected only when the box lies wholly outside one plane.
inline bool box_intersects_frustum(const Vec3& lo, const Vec3& hi, const std::array<Plane, 6>& planes) {
    for (const auto& pl : planes) {
        const Vec3 pv{pl.normal.x >= 0 ? hi.x : lo.x, pl.normal.y >= 0 ? hi.y : lo.y,
                      pl.normal.z >= 0 ? hi.z : lo.z};
        if (pl.signed_distance(pv) < 0) return false;
    }
    return true;
}

/// Linear indices of the blocks whose boxes touch the view frustum, ascending.
inline std::vector<std::size_t> visible_blocks(const BlockGrid& grid, const CameraFrame& f) {
    const auto planes = frustum_planes(f);
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < grid.size(); ++i)
        if (box_intersects_frustum(grid[i].world_lo, grid[i].world_hi, planes)) out.push_back(i);
    return out;
}

// ---------------------------------------------------------------------------
// Incremental camera actions

using Action = std::array<double, 5>;

struct ActionScale {
    double orientation = 0.1;  // per unit action component
    double depth = 0.2;        // world units per unit action; usually 0.2R
};

/// Additive quaternion nudge followed by renormalization; depth is clamped to `range`.
inline Viewpoint apply_action(const Viewpoint& v, const Action& a, const ActionScale& scale,
                              const DepthRange& range) {
    Viewpoint out = v;
    const Quat delta = Quat{a[0], a[1], a[2], a[3]} * scale.orientation;
    if (delta != Quat{0, 0, 0, 0} || std::abs(v.orientation.norm() - 1.0) > 1e-12) {
        const Quat q = v.orientation + delta;
        const double n = q.norm();
        if (!(n >= 1e-8)) throw DegenerateError("orientation collapsed to zero norm");
        out.orientation = q * (1.0 / n);
    }
    out.depth = range.clamp(v.depth + a[4] * scale.depth);
    return out;
}

// ---------------------------------------------------------------------------
// Serialization: "tag qw qx qy qz depth [block-index]"

inline std::string format_viewpoint_set(const ViewpointSet& set) {
    std::ostringstream os;
    os.precision(17);
    for (std::size_t i = 0; i < set.size(); ++i) {
        const auto& v = set.viewpoints[i];
        const auto& p = set.provenance[i];
        os << (p.kind == ViewpointKind::Uniform ? "uniform" : "block") << ' ' << v.orientation.w << ' '
           << v.orientation.x << ' ' << v.orientation.y << ' ' << v.orientation.z << ' ' << v.depth;
        if (p.kind == ViewpointKind::BlockCentered) os << ' ' << p.block;
        os << '\n';
    }
    return os.str();
}

/// Block-centred entries recover their look-at point from `grid`.
inline ViewpointSet parse_viewpoint_set(std::string_view text, const BlockGrid* grid) {
    ViewpointSet set;
    for (const auto& raw : split_lines(text)) {
        const std::string line = trim(strip_comment(raw));
        if (line.empty()) continue;
        std::istringstream is(line);
        std::string tag;
        Viewpoint v;
        if (!(is >> tag >> v.orientation.w >> v.orientation.x >> v.orientation.y >> v.orientation.z >> v.depth))
            throw MalformedInputError("bad viewpoint line: '" + line + "'");
        Provenance p;
        if (tag == "block") {
            p.kind = ViewpointKind::BlockCentered;
            if (!(is >> p.block)) throw MalformedInputError("block viewpoint without block index: '" + line + "'");
            if (!grid || p.block < 0 || static_cast<std::size_t>(p.block) >= grid->size())
                throw MalformedInputError("viewpoint block index out of range: '" + line + "'");
            v.look_at = (*grid)[static_cast<std::size_t>(p.block)].center;
        } else if (tag != "uniform") {
            throw MalformedInputError("unknown viewpoint tag '" + tag + "'");
        }
        set.push_back(v, p);
    }
    return set;
}

} // namespace voxnav
