#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <ostream>
#include <string_view>

namespace voxnav {

struct Vec3 {
    double x = 0, y = 0, z = 0;

    constexpr double& operator[](int i) { return i == 0 ? x : (i == 1 ? y : z); }
    constexpr double operator[](int i) const { return i == 0 ? x : (i == 1 ? y : z); }

    constexpr Vec3 operator+(const Vec3& o) const { return {x + o.x, y + o.y, z + o.z}; }
    constexpr Vec3 operator-(const Vec3& o) const { return {x - o.x, y - o.y, z - o.z}; }
    constexpr Vec3 operator-() const { return {-x, -y, -z}; }
    constexpr Vec3 operator*(double s) const { return {x * s, y * s, z * s}; }
    constexpr Vec3 operator/(double s) const { return {x / s, y / s, z / s}; }
    constexpr Vec3& operator+=(const Vec3& o) { x += o.x; y += o.y; z += o.z; return *this; }
    constexpr Vec3& operator-=(const Vec3& o) { x -= o.x; y -= o.y; z -= o.z; return *this; }
    constexpr Vec3& operator*=(double s) { x *= s; y *= s; z *= s; return *this; }
    constexpr bool operator==(const Vec3&) const = default;
};

constexpr Vec3 operator*(double s, const Vec3& v) { return v * s; }
constexpr double dot(const Vec3& a, const Vec3& b) { return a.x * b.x + a.y * b.y + a.z * b.z; }
constexpr Vec3 cross(const Vec3& a, const Vec3& b) {
    return {a.y * b.z - a.z * b.y, a.z * b.x - a.x * b.z, a.x * b.y - a.y * b.x};
}
inline double norm(const Vec3& v) { return std::sqrt(dot(v, v)); }
inline Vec3 normalized(const Vec3& v) { return v / norm(v); }
constexpr Vec3 hadamard(const Vec3& a, const Vec3& b) { return {a.x * b.x, a.y * b.y, a.z * b.z}; }

inline std::ostream& operator<<(std::ostream& os, const Vec3& v) {
    return os << '(' << v.x << ", " << v.y << ", " << v.z << ')';
}

struct Int3 {
    int x = 0, y = 0, z = 0;

    constexpr int& operator[](int i) { return i == 0 ? x : (i == 1 ? y : z); }
    constexpr int operator[](int i) const { return i == 0 ? x : (i == 1 ? y : z); }
    constexpr std::int64_t product() const {
        return static_cast<std::int64_t>(x) * y * z;
    }
    constexpr bool operator==(const Int3&) const = default;
};

inline std::ostream& operator<<(std::ostream& os, const Int3& v) {
    return os << v.x << 'x' << v.y << 'x' << v.z;
}

// Row-major 3x3.
struct Mat3 {
    std::array<double, 9> m{1, 0, 0, 0, 1, 0, 0, 0, 1};

    constexpr double operator()(int r, int c) const { return m[r * 3 + c]; }
    constexpr double& operator()(int r, int c) { return m[r * 3 + c]; }

    constexpr Vec3 operator*(const Vec3& v) const {
        return {m[0] * v.x + m[1] * v.y + m[2] * v.z,
                m[3] * v.x + m[4] * v.y + m[5] * v.z,
                m[6] * v.x + m[7] * v.y + m[8] * v.z};
    }
    constexpr Vec3 column(int c) const { return {m[c], m[3 + c], m[6 + c]}; }
    static constexpr Mat3 from_columns(const Vec3& a, const Vec3& b, const Vec3& c) {
        Mat3 r;
        for (int i = 0; i < 3; ++i) {
            r(i, 0) = a[i];
            r(i, 1) = b[i];
            r(i, 2) = c[i];
        }
        return r;
    }
    constexpr Mat3 transposed() const {
        Mat3 r;
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) r(i, j) = (*this)(j, i);
        return r;
    }
};

/// Quaternion stored as (w, x, y, z).
struct Quat {
    double w = 1, x = 0, y = 0, z = 0;

    constexpr Quat operator+(const Quat& o) const { return {w + o.w, x + o.x, y + o.y, z + o.z}; }
    constexpr Quat operator*(double s) const { return {w * s, x * s, y * s, z * s}; }
    constexpr bool operator==(const Quat&) const = default;

    constexpr Quat operator*(const Quat& o) const {
        return {w * o.w - x * o.x - y * o.y - z * o.z,
                w * o.x + x * o.w + y * o.z - z * o.y,
                w * o.y - x * o.z + y * o.w + z * o.x,
                w * o.z + x * o.y - y * o.x + z * o.w};
    }

    double norm() const { return std::sqrt(w * w + x * x + y * y + z * z); }
    Quat normalized() const { return *this * (1.0 / norm()); }
    constexpr Quat conjugate() const { return {w, -x, -y, -z}; }

    /// Rotation matrix; assumes unit norm.
    constexpr Mat3 to_matrix() const {
        Mat3 r;
        r(0, 0) = 1 - 2 * (y * y + z * z);
        r(0, 1) = 2 * (x * y - w * z);
        r(0, 2) = 2 * (x * z + w * y);
        r(1, 0) = 2 * (x * y + w * z);
        r(1, 1) = 1 - 2 * (x * x + z * z);
        r(1, 2) = 2 * (y * z - w * x);
        r(2, 0) = 2 * (x * z - w * y);
        r(2, 1) = 2 * (y * z + w * x);
        r(2, 2) = 1 - 2 * (x * x + y * y);
        return r;
    }

    constexpr Vec3 rotate(const Vec3& v) const { return to_matrix() * v; }

    static Quat from_axis_angle(const Vec3& axis, double angle) {
        const Vec3 a = voxnav::normalized(axis);
        const double s = std::sin(angle / 2);
        return {std::cos(angle / 2), a.x * s, a.y * s, a.z * s};
    }

    /// Shepperd's method; result has w >= 0.
    static Quat from_matrix(const Mat3& r) {
        const double trace = r(0, 0) + r(1, 1) + r(2, 2);
        Quat q;
        if (trace > 0) {
            const double s = std::sqrt(trace + 1.0) * 2;
            q = {0.25 * s, (r(2, 1) - r(1, 2)) / s, (r(0, 2) - r(2, 0)) / s, (r(1, 0) - r(0, 1)) / s};
        } else if (r(0, 0) > r(1, 1) && r(0, 0) > r(2, 2)) {
            const double s = std::sqrt(1.0 + r(0, 0) - r(1, 1) - r(2, 2)) * 2;
            q = {(r(2, 1) - r(1, 2)) / s, 0.25 * s, (r(0, 1) + r(1, 0)) / s, (r(0, 2) + r(2, 0)) / s};
        } else if (r(1, 1) > r(2, 2)) {
            const double s = std::sqrt(1.0 + r(1, 1) - r(0, 0) - r(2, 2)) * 2;
            q = {(r(0, 2) - r(2, 0)) / s, (r(0, 1) + r(1, 0)) / s, 0.25 * s, (r(1, 2) + r(2, 1)) / s};
        } else {
            const double s = std::sqrt(1.0 + r(2, 2) - r(0, 0) - r(1, 1)) * 2;
            q = {(r(1, 0) - r(0, 1)) / s, (r(0, 2) + r(2, 0)) / s, (r(1, 2) + r(2, 1)) / s, 0.25 * s};
        }
        if (q.w < 0) q = q * -1.0;
        return q.normalized();
    }
};

inline std::ostream& operator<<(std::ostream& os, const Quat& q) {
    return os << '(' << q.w << ", " << q.x << ", " << q.y << ", " << q.z << ')';
}

/// 64-bit FNV-1a; used wherever a platform-stable hash is needed.
inline std::uint64_t fnv1a64(const void* data, std::size_t len,
                                std::uint64_t h = 0xcbf29ce484222325ULL) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < len; ++i) {
        h ^= p[i];
        h *= 0x100000001b3ULL;
    }
    return h;
}

inline std::uint64_t fnv1a64(std::string_view s, std::uint64_t h = 0xcbf29ce484222325ULL) {
    return fnv1a64(s.data(), s.size(), h);
}

/// splitmix64 finalizer; derives independent seeds from (seed, stream).
constexpr std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream = 0) {
    std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

} // namespace voxnav
