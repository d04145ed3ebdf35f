#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

#include "../error.hpp"
#include "../nn/tensor.hpp"

namespace voxnav {

inline constexpr std::size_t kEmbeddingDim = 768;

/// Shared representation for text, image and pooled block embeddings.
class EmbeddingVector {
public:
    EmbeddingVector() : values_(kEmbeddingDim, 0.0) {}
    explicit EmbeddingVector(std::vector<double> values) : values_(std::move(values)) {
        if (values_.size() != kEmbeddingDim)
            throw MalformedInputError("embedding has " + std::to_string(values_.size()) + " values, expected " +
                                      std::to_string(kEmbeddingDim));
    }

    static EmbeddingVector zeros() { return {}; }

    std::size_t size() const { return values_.size(); }
    double operator[](std::size_t i) const { return values_[i]; }
    double& operator[](std::size_t i) { return values_[i]; }
    const double* data() const { return values_.data(); }
    const std::vector<double>& values() const { return values_; }
    bool operator==(const EmbeddingVector&) const = default;

    double norm() const { return std::sqrt(nn::kernels::dot(size(), data(), data())); }
    bool is_zero() const {
        for (double v : values_)
            if (v != 0) return false;
        return true;
    }
    bool all_finite() const {
        for (double v : values_)
            if (!std::isfinite(v)) return false;
        return true;
    }
    EmbeddingVector normalized() const {
        const double n = norm();
        if (!(n > 0) || !std::isfinite(n)) throw NumericError("cannot normalize a zero or non-finite embedding");
        EmbeddingVector out = *this;
        for (auto& v : out.values_) v /= n;
        return out;
    }
    EmbeddingVector scaled(double s) const {
        EmbeddingVector out = *this;
        for (auto& v : out.values_) v *= s;
        return out;
    }

private:
    std::vector<double> values_;
};

/// Cosine similarity; both vectors must be nonzero.
inline double cosine(const EmbeddingVector& a, const EmbeddingVector& b) {
    const double na = a.norm(), nb = b.norm();
    if (!(na > 0) || !(nb > 0)) throw NumericError("cosine of a zero embedding");
    const double c = nn::kernels::dot(a.size(), a.data(), b.data()) / (na * nb);
    return std::clamp(c, -1.0, 1.0);
}

} // namespace voxnav
