#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "error.hpp"
#include "math.hpp"
#include "text.hpp"

namespace voxnav {

/// Dense 3-D scalar array, x varies fastest.
struct ScalarField {
    Int3 dims;
    std::vector<float> values;

    ScalarField() = default;
    explicit ScalarField(Int3 d, float fill = 0.0f)
        : dims(d), values(static_cast<std::size_t>(d.product()), fill) {}

    std::size_t index(int x, int y, int z) const {
        return static_cast<std::size_t>(x) +
               static_cast<std::size_t>(dims.x) *
                   (static_cast<std::size_t>(y) + static_cast<std::size_t>(dims.y) * z);
    }
    float at(int x, int y, int z) const { return values[index(x, y, z)]; }
    float& at(int x, int y, int z) { return values[index(x, y, z)]; }
};

enum class VoxelType { U8, U16LE };

inline std::string_view to_string(VoxelType t) { return t == VoxelType::U8 ? "u8" : "u16le"; }

inline VoxelType parse_voxel_type(std::string_view s) {
    if (s == "u8" || s == "uint8") return VoxelType::U8;
    if (s == "u16le" || s == "u16" || s == "uint16") return VoxelType::U16LE;
    throw MalformedInputError("unknown voxel dtype '" + std::string(s) + "' (expected u8 or u16le)");
}

inline std::size_t voxel_size(VoxelType t) { return t == VoxelType::U8 ? 1 : 2; }

class Volume {
public:
    Volume(std::string name, Vec3 spacing, ScalarField field)
        : name_(std::move(name)), spacing_(spacing), field_(std::move(field)) {
        const Int3 d = field_.dims;
        if (d.x <= 0 || d.y <= 0 || d.z <= 0)
            throw MalformedInputError("volume dims must be positive");
        if (static_cast<std::int64_t>(field_.values.size()) != d.product())
            throw MalformedInputError("voxel count does not match dims");
        if (!(spacing.x > 0 && spacing.y > 0 && spacing.z > 0))
            throw MalformedInputError("volume spacing must be strictly positive");
        for (float v : field_.values)
            if (!(v >= 0.0f && v <= 1.0f))
                throw MalformedInputError("voxel values must lie in [0,1]");
    }

    const std::string& name() const { return name_; }
    Int3 dims() const { return field_.dims; }
    Vec3 spacing() const { return spacing_; }
    const ScalarField& field() const { return field_; }
    const std::vector<float>& voxels() const { return field_.values; }

    /// World-space size; the volume is centred on the origin.
    Vec3 extent() const {
        return {field_.dims.x * spacing_.x, field_.dims.y * spacing_.y, field_.dims.z * spacing_.z};
    }
    Vec3 box_min() const { return extent() * -0.5; }
    Vec3 box_max() const { return extent() * 0.5; }
    /// Bounding-sphere radius R.
    double radius() const { return norm(extent()) * 0.5; }
    double min_spacing() const { return std::min({spacing_.x, spacing_.y, spacing_.z}); }

    /// World position of a voxel-space coordinate (voxel i spans [i, i+1)).
    Vec3 voxel_to_world(const Vec3& v) const { return hadamard(v, spacing_) - extent() * 0.5; }

    /// Trilinear sample at a world point; coordinates clamp to the voxel-centre lattice.
    double sample(const Vec3& p) const {
        const Vec3 e = extent();
        double u[3];
        int i0[3], i1[3];
        double f[3];
        for (int a = 0; a < 3; ++a) {
            u[a] = (p[a] + e[a] * 0.5) / spacing_[a] - 0.5;
            const int n = field_.dims[a];
            u[a] = std::clamp(u[a], 0.0, static_cast<double>(n - 1));
            i0[a] = std::min(static_cast<int>(u[a]), n - 1);
            i1[a] = std::min(i0[a] + 1, n - 1);
            f[a] = u[a] - i0[a];
        }
        const auto& fld = field_;
        const double c00 = fld.at(i0[0], i0[1], i0[2]) * (1 - f[0]) + fld.at(i1[0], i0[1], i0[2]) * f[0];
        const double c10 = fld.at(i0[0], i1[1], i0[2]) * (1 - f[0]) + fld.at(i1[0], i1[1], i0[2]) * f[0];
        const double c01 = fld.at(i0[0], i0[1], i1[2]) * (1 - f[0]) + fld.at(i1[0], i0[1], i1[2]) * f[0];
        const double c11 = fld.at(i0[0], i1[1], i1[2]) * (1 - f[0]) + fld.at(i1[0], i1[1], i1[2]) * f[0];
        const double c0 = c00 * (1 - f[1]) + c10 * f[1];
        const double c1 = c01 * (1 - f[1]) + c11 * f[1];
        return c0 * (1 - f[2]) + c1 * f[2];
    }

private:
    std::string name_;
    Vec3 spacing_;
    ScalarField field_;
};

// ---------------------------------------------------------------------------
// Raw files and sidecar metadata

struct VolumeMetadata {
    std::string name;
    Int3 dims;
    VoxelType dtype = VoxelType::U8;
    Vec3 spacing{1, 1, 1};
};

inline VolumeMetadata parse_metadata(std::string_view text) {
    VolumeMetadata meta;
    bool have_dims = false;
    for (const auto& [key, value] : parse_key_values(text)) {
        if (key == "name") {
            meta.name = value;
        } else if (key == "dims") {
            const auto v = parse_int_list(value);
            if (v.size() != 3) throw MalformedInputError("metadata dims must have 3 entries");
            meta.dims = {v[0], v[1], v[2]};
            have_dims = true;
        } else if (key == "dtype") {
            meta.dtype = parse_voxel_type(value);
        } else if (key == "spacing") {
            const auto v = parse_double_list(value);
            if (v.size() != 3) throw MalformedInputError("metadata spacing must have 3 entries");
            meta.spacing = {v[0], v[1], v[2]};
        } else {
            throw MalformedInputError("unknown metadata key '" + key + "'");
        }
    }
    if (!have_dims) throw MalformedInputError("metadata is missing dims");
    return meta;
}

inline VolumeMetadata read_metadata(const std::filesystem::path& path) {
    return parse_metadata(read_text_file(path));
}

inline std::string format_metadata(const VolumeMetadata& m) {
    std::ostringstream os;
    os.precision(17);
    os << "name=" << m.name << '\n'
       << "dims=" << m.dims.x << ',' << m.dims.y << ',' << m.dims.z << '\n'
       << "dtype=" << to_string(m.dtype) << '\n'
       << "spacing=" << m.spacing.x << ',' << m.spacing.y << ',' << m.spacing.z << '\n';
    return os.str();
}

inline void write_metadata(const std::filesystem::path& path, const VolumeMetadata& m) {
    write_text_file(path, format_metadata(m));
}

/// Reads raw little-endian voxels and maps the dtype range onto [0,1].
inline Volume load_volume(const std::filesystem::path& path, Int3 dims, VoxelType dtype, Vec3 spacing,
                          std::string name = {}) {
    if (dims.x <= 0 || dims.y <= 0 || dims.z <= 0)
        throw MalformedInputError("volume dims must be positive");
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open volume file " + path.string());
    std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (in.bad()) throw IoError("failed reading volume file " + path.string());

    const std::uint64_t expected = static_cast<std::uint64_t>(dims.product()) * voxel_size(dtype);
    if (bytes.size() != expected)
        throw MalformedInputError("volume file " + path.string() + " has " + std::to_string(bytes.size()) +
                                  " bytes, expected " + std::to_string(expected));

    ScalarField field(dims);
    if (dtype == VoxelType::U8) {
        for (std::size_t i = 0; i < field.values.size(); ++i) field.values[i] = bytes[i] / 255.0f;
    } else {
        for (std::size_t i = 0; i < field.values.size(); ++i) {
            const unsigned v = bytes[2 * i] | (static_cast<unsigned>(bytes[2 * i + 1]) << 8);
            field.values[i] = static_cast<float>(v / 65535.0);
        }
    }
    if (name.empty()) name = path.stem().string();
    return Volume(std::move(name), spacing, std::move(field));
}

inline Volume load_volume(const std::filesystem::path& raw, const VolumeMetadata& meta) {
    return load_volume(raw, meta.dims, meta.dtype, meta.spacing, meta.name);
}

/// Quantizes to the dtype range and writes little-endian raw bytes.
inline void write_raw_volume(const std::filesystem::path& path, const Volume& vol, VoxelType dtype) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write volume file " + path.string());
    for (float v : vol.voxels()) {
        if (dtype == VoxelType::U8) {
            const auto b = static_cast<unsigned char>(std::lround(v * 255.0f));
            out.put(static_cast<char>(b));
        } else {
            const auto w = static_cast<unsigned>(std::lround(v * 65535.0));
            out.put(static_cast<char>(w & 0xff));
            out.put(static_cast<char>((w >> 8) & 0xff));
        }
    }
    if (!out) throw IoError("failed writing volume file " + path.string());
}

// ---------------------------------------------------------------------------
// Transfer function

struct Rgba {
    double r = 0, g = 0, b = 0, a = 0;
    bool operator==(const Rgba&) const = default;
};

class TransferFunction {
public:
    struct ControlPoint {
        double scalar;
        Rgba color;
    };

    TransferFunction() : TransferFunction({{0.0, {0, 0, 0, 0}}, {1.0, {1, 1, 1, 1}}}) {}

    explicit TransferFunction(std::vector<ControlPoint> points) : points_(std::move(points)) {
        if (points_.size() < 2) throw MalformedInputError("transfer function needs at least two control points");
        if (points_.front().scalar != 0.0 || points_.back().scalar != 1.0)
            throw MalformedInputError("transfer function keys must start at 0 and end at 1");
        for (std::size_t i = 0; i < points_.size(); ++i) {
            const auto& c = points_[i].color;
            for (double v : {c.r, c.g, c.b, c.a})
                if (!(v >= 0.0 && v <= 1.0))
                    throw MalformedInputError("transfer function colors must lie in [0,1]");
            if (i > 0 && !(points_[i].scalar > points_[i - 1].scalar))
                throw MalformedInputError("transfer function keys must be strictly increasing");
        }
    }

    const std::vector<ControlPoint>& points() const { return points_; }

    Rgba lookup(double s) const {
        s = std::clamp(s, 0.0, 1.0);
        auto it = std::upper_bound(points_.begin(), points_.end(), s,
                                   [](double v, const ControlPoint& p) { return v < p.scalar; });
        if (it == points_.end()) return points_.back().color;
        const auto& hi = *it;
        const auto& lo = *(it - 1);
        const double t = (s - lo.scalar) / (hi.scalar - lo.scalar);
        return {lo.color.r + t * (hi.color.r - lo.color.r), lo.color.g + t * (hi.color.g - lo.color.g),
                lo.color.b + t * (hi.color.b - lo.color.b), lo.color.a + t * (hi.color.a - lo.color.a)};
    }

    /// Scales every opacity by `k`, clamping at 1.
    TransferFunction with_opacity_scale(double k) const {
        auto pts = points_;
        for (auto& p : pts) p.color.a = std::clamp(p.color.a * k, 0.0, 1.0);
        return TransferFunction(std::move(pts));
    }

private:
    std::vector<ControlPoint> points_;
};

/// Lines of "scalar r g b a"; blank lines and '#' comments are skipped.
inline TransferFunction parse_transfer_function(std::string_view text) {
    std::vector<TransferFunction::ControlPoint> pts;
    for (const auto& raw : split_lines(text)) {
        const std::string line = trim(strip_comment(raw));
        if (line.empty()) continue;
        std::istringstream is(line);
        TransferFunction::ControlPoint p{};
        if (!(is >> p.scalar >> p.color.r >> p.color.g >> p.color.b >> p.color.a))
            throw MalformedInputError("bad transfer function line: '" + line + "'");
        std::string extra;
        if (is >> extra) throw MalformedInputError("bad transfer function line: '" + line + "'");
        pts.push_back(p);
    }
    return TransferFunction(std::move(pts));
}

inline TransferFunction read_transfer_function(const std::filesystem::path& path) {
    return parse_transfer_function(read_text_file(path));
}

inline std::string format_transfer_function(const TransferFunction& tf) {
    std::ostringstream os;
    os.precision(17);
    for (const auto& p : tf.points())
        os << p.scalar << ' ' << p.color.r << ' ' << p.color.g << ' ' << p.color.b << ' ' << p.color.a << '\n';
    return os.str();
}

// ---------------------------------------------------------------------------
// Block partition

struct Block {
    Int3 index;
    Int3 voxel_lo;  // inclusive
    Int3 voxel_hi;  // exclusive
    Vec3 world_lo;
    Vec3 world_hi;
    Vec3 center;
    double mean_density = 0;
    double max_density = 0;

    Int3 extent() const { return {voxel_hi.x - voxel_lo.x, voxel_hi.y - voxel_lo.y, voxel_hi.z - voxel_lo.z}; }
};

class BlockGrid {
public:
    BlockGrid(Int3 grid_dims, Int3 block_dims, std::vector<Block> blocks)
        : grid_dims_(grid_dims), block_dims_(block_dims), blocks_(std::move(blocks)) {}

    Int3 grid_dims() const { return grid_dims_; }
    Int3 block_dims() const { return block_dims_; }
    std::size_t size() const { return blocks_.size(); }
    const std::vector<Block>& blocks() const { return blocks_; }
    const Block& operator[](std::size_t i) const { return blocks_[i]; }

    bool contains(Int3 idx) const {
        return idx.x >= 0 && idx.y >= 0 && idx.z >= 0 && idx.x < grid_dims_.x && idx.y < grid_dims_.y &&
               idx.z < grid_dims_.z;
    }
    std::size_t linear_index(Int3 idx) const {
        if (!contains(idx)) throw LogicError("block index outside the block grid");
        return static_cast<std::size_t>(idx.x) +
               static_cast<std::size_t>(grid_dims_.x) * (idx.y + static_cast<std::size_t>(grid_dims_.y) * idx.z);
    }
    const Block& block(Int3 idx) const { return blocks_[linear_index(idx)]; }

private:
    Int3 grid_dims_;
    Int3 block_dims_;
    std::vector<Block> blocks_;
};

struct BlockStats {
    double mean = 0;
    double max = 0;
};

inline std::vector<BlockStats> block_stats(const Volume& vol, const BlockGrid& grid) {
    std::vector<BlockStats> out;
    out.reserve(grid.size());
    const auto& f = vol.field();
    for (const auto& b : grid.blocks()) {
        double sum = 0, mx = 0;
        for (int z = b.voxel_lo.z; z < b.voxel_hi.z; ++z)
            for (int y = b.voxel_lo.y; y < b.voxel_hi.y; ++y)
                for (int x = b.voxel_lo.x; x < b.voxel_hi.x; ++x) {
                    const double v = f.at(x, y, z);
                    sum += v;
                    mx = std::max(mx, v);
                }
        const double mean = sum / static_cast<double>(b.extent().product());
        out.push_back({std::min(mean, mx), mx});
    }
    return out;
}

/// Splits the volume into grid.x * grid.y * grid.z equal blocks; dims must divide evenly.
inline BlockGrid partition(const Volume& vol, Int3 grid) {
    static constexpr const char* kAxis[3] = {"x", "y", "z"};
    const Int3 dims = vol.dims();
    Int3 bdims;
    for (int a = 0; a < 3; ++a) {
        if (grid[a] <= 0)
            throw ConfigError(std::string("block grid must be positive on axis ") + kAxis[a]);
        if (dims[a] % grid[a] != 0)
            throw ConfigError(std::string("volume dim ") + std::to_string(dims[a]) + " on axis " + kAxis[a] +
                              " is not divisible by block grid " + std::to_string(grid[a]));
        bdims[a] = dims[a] / grid[a];
    }
    std::vector<Block> blocks;
    blocks.reserve(static_cast<std::size_t>(grid.product()));
    for (int z = 0; z < grid.z; ++z)
        for (int y = 0; y < grid.y; ++y)
            for (int x = 0; x < grid.x; ++x) {
                Block b;
                b.index = {x, y, z};
                b.voxel_lo = {x * bdims.x, y * bdims.y, z * bdims.z};
                b.voxel_hi = {b.voxel_lo.x + bdims.x, b.voxel_lo.y + bdims.y, b.voxel_lo.z + bdims.z};
                b.world_lo = vol.voxel_to_world({double(b.voxel_lo.x), double(b.voxel_lo.y), double(b.voxel_lo.z)});
                b.world_hi = vol.voxel_to_world({double(b.voxel_hi.x), double(b.voxel_hi.y), double(b.voxel_hi.z)});
                b.center = (b.world_lo + b.world_hi) * 0.5;
                blocks.push_back(b);
            }
    BlockGrid tmp(grid, bdims, blocks);
    const auto stats = block_stats(vol, tmp);
    for (std::size_t i = 0; i < blocks.size(); ++i) {
        blocks[i].mean_density = stats[i].mean;
        blocks[i].max_density = stats[i].max;
    }
    return BlockGrid(grid, bdims, std::move(blocks));
}

/// Copies the voxels of one block into a fresh array with local origin at the block corner.
inline ScalarField block_voxels(const Volume& vol, const Block& b) {
    const Int3 d = vol.dims();
    for (int a = 0; a < 3; ++a)
        if (b.voxel_lo[a] < 0 || b.voxel_hi[a] > d[a] || b.voxel_hi[a] <= b.voxel_lo[a])
            throw LogicError("block does not belong to this volume's grid");
    ScalarField out(b.extent());
    const auto& f = vol.field();
    for (int z = 0; z < out.dims.z; ++z)
        for (int y = 0; y < out.dims.y; ++y) {
            const auto* src = &f.values[f.index(b.voxel_lo.x, b.voxel_lo.y + y, b.voxel_lo.z + z)];
            std::copy(src, src + out.dims.x, &out.values[out.index(0, y, z)]);
        }
    return out;
}

inline ScalarField block_voxels(const Volume& vol, const BlockGrid& grid, Int3 index) {
    if (grid.block_dims().x * grid.grid_dims().x != vol.dims().x ||
        grid.block_dims().y * grid.grid_dims().y != vol.dims().y ||
        grid.block_dims().z * grid.grid_dims().z != vol.dims().z)
        throw LogicError("block grid was not built from this volume");
    return block_voxels(vol, grid.block(index));
}

} // namespace voxnav
