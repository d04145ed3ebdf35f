#pragma once

#include <algorithm>
#include <cmath>
#include <memory>
#include <random>
#include <string>
#include <vector>

#include "../error.hpp"
#include "tensor.hpp"

namespace voxnav::nn {

/// One stage of a network. Layers hold parameters only; activations live in the
/// caller's ForwardPass so a layer can serve several in-flight passes.
template <class T>
class Layer {
public:
    virtual ~Layer() = default;

    virtual std::string kind() const = 0;
    virtual std::size_t in_features() const = 0;
    virtual std::size_t out_features() const = 0;
    virtual Batch<T> forward(const Batch<T>& x) const = 0;
    /// Returns dL/dx and accumulates dL/dparams.
    virtual Batch<T> backward(const Batch<T>& x, const Batch<T>& y, const Batch<T>& dy) = 0;
    virtual std::vector<ParamTensor<T>*> params() { return {}; }
    virtual void initialize(std::mt19937_64&) {}
    virtual std::unique_ptr<Layer> clone() const = 0;
};

template <class T>
class Dense final : public Layer<T> {
public:
    /// Weight is stored [in][out] so the forward inner loop runs over contiguous outputs.
    Dense(std::string name, std::size_t in, std::size_t out)
        : in_(in), out_(out), weight_(name + ".weight", {in, out}), bias_(name + ".bias", {out}) {}

    std::string kind() const override { return "dense"; }
    std::size_t in_features() const override { return in_; }
    std::size_t out_features() const override { return out_; }
    ParamTensor<T>& weight() { return weight_; }
    ParamTensor<T>& bias() { return bias_; }
    const ParamTensor<T>& weight() const { return weight_; }
    const ParamTensor<T>& bias() const { return bias_; }

    void initialize(std::mt19937_64& rng) override {
        const double limit = std::sqrt(6.0 / static_cast<double>(in_ + out_));
        std::uniform_real_distribution<double> u(-limit, limit);
        for (auto& w : weight_.values) w = static_cast<T>(u(rng));
        std::fill(bias_.values.begin(), bias_.values.end(), T(0));
    }

    Batch<T> forward(const Batch<T>& x) const override {
        Batch<T> y(x.rows, out_);
        for (std::size_t n = 0; n < x.rows; ++n) std::copy(bias_.values.begin(), bias_.values.end(), y.row(n));
        kernels::gemm_nn(x.rows, in_, out_, x.data.data(), weight_.values.data(), y.data.data());
        return y;
    }

    Batch<T> backward(const Batch<T>& x, const Batch<T>&, const Batch<T>& dy) override {
        Batch<T> dx(x.rows, in_);
        for (std::size_t n = 0; n < x.rows; ++n) kernels::axpy(out_, T(1), dy.row(n), bias_.grad.data());
        kernels::gemm_tn(x.rows, in_, out_, x.data.data(), dy.data.data(), weight_.grad.data());
        const auto wt = kernels::transpose(in_, out_, weight_.values.data());
        kernels::gemm_nn(x.rows, out_, in_, dy.data.data(), wt.data(), dx.data.data());
        return dx;
    }

    std::vector<ParamTensor<T>*> params() override { return {&weight_, &bias_}; }
    std::unique_ptr<Layer<T>> clone() const override { return std::make_unique<Dense>(*this); }

private:
    std::size_t in_, out_;
    ParamTensor<T> weight_;
    ParamTensor<T> bias_;
};

/// 3-D convolution over a cubic lattice, samples laid out channel-major (C, z, y, x).
template <class T>
class Conv3d final : public Layer<T> {
public:
    Conv3d(std::string name, std::size_t in_channels, std::size_t out_channels, std::size_t input_size,
           std::size_t kernel, std::size_t stride, std::size_t padding)
        : cin_(in_channels),
          cout_(out_channels),
          size_(input_size),
          k_(kernel),
          stride_(stride),
          pad_(padding),
          weight_(name + ".weight", {out_channels, in_channels, kernel, kernel, kernel}),
          bias_(name + ".bias", {out_channels}) {
        if (stride == 0 || kernel == 0 || input_size + 2 * padding < kernel)
            throw ConfigError("conv3d '" + name + "' has an impossible geometry");
        osize_ = (input_size + 2 * padding - kernel) / stride + 1;
    }

    std::string kind() const override { return "conv3d"; }
    std::size_t in_features() const override { return cin_ * size_ * size_ * size_; }
    std::size_t out_features() const override { return cout_ * osize_ * osize_ * osize_; }
    std::size_t output_size() const { return osize_; }
    std::size_t out_channels() const { return cout_; }

    void initialize(std::mt19937_64& rng) override {
        const double k3 = static_cast<double>(k_ * k_ * k_);
        const double limit = std::sqrt(6.0 / (static_cast<double>(cin_ + cout_) * k3));
        std::uniform_real_distribution<double> u(-limit, limit);
        for (auto& w : weight_.values) w = static_cast<T>(u(rng));
        std::fill(bias_.values.begin(), bias_.values.end(), T(0));
    }

    Batch<T> forward(const Batch<T>& x) const override {
        Batch<T> y(x.rows, out_features());
        for (std::size_t n = 0; n < x.rows; ++n) {
            const T* xr = x.row(n);
            T* yr = y.row(n);
            for (std::size_t co = 0; co < cout_; ++co)
                for (std::size_t oz = 0; oz < osize_; ++oz)
                    for (std::size_t oy = 0; oy < osize_; ++oy)
                        for (std::size_t ox = 0; ox < osize_; ++ox) {
                            T acc = bias_.values[co];
                            visit_taps(oz, oy, ox, [&](std::size_t ci, std::size_t widx, std::size_t xidx) {
                                acc += weight_.values[co * wstride() + widx] * xr[ci * vol() + xidx];
                            });
                            yr[out_index(co, oz, oy, ox)] = acc;
                        }
        }
        return y;
    }

    Batch<T> backward(const Batch<T>& x, const Batch<T>&, const Batch<T>& dy) override {
        Batch<T> dx(x.rows, in_features());
        for (std::size_t n = 0; n < x.rows; ++n) {
            const T* xr = x.row(n);
            const T* dyr = dy.row(n);
            T* dxr = dx.row(n);
            for (std::size_t co = 0; co < cout_; ++co)
                for (std::size_t oz = 0; oz < osize_; ++oz)
                    for (std::size_t oy = 0; oy < osize_; ++oy)
                        for (std::size_t ox = 0; ox < osize_; ++ox) {
                            const T g = dyr[out_index(co, oz, oy, ox)];
                            if (g == T(0)) continue;
                            bias_.grad[co] += g;
                            visit_taps(oz, oy, ox, [&](std::size_t ci, std::size_t widx, std::size_t xidx) {
                                weight_.grad[co * wstride() + widx] += g * xr[ci * vol() + xidx];
                                dxr[ci * vol() + xidx] += g * weight_.values[co * wstride() + widx];
                            });
                        }
        }
        return dx;
    }

    std::vector<ParamTensor<T>*> params() override { return {&weight_, &bias_}; }
    std::unique_ptr<Layer<T>> clone() const override { return std::make_unique<Conv3d>(*this); }

private:
    std::size_t vol() const { return size_ * size_ * size_; }
    std::size_t wstride() const { return cin_ * k_ * k_ * k_; }
    std::size_t out_index(std::size_t c, std::size_t z, std::size_t y, std::size_t x) const {
        return ((c * osize_ + z) * osize_ + y) * osize_ + x;
    }

    // Calls f(in_channel, weight offset within the output channel, input offset within the channel)
    // for every in-bounds tap of one output position.
    template <class F>
    void visit_taps(std::size_t oz, std::size_t oy, std::size_t ox, F&& f) const {
        const long s = static_cast<long>(size_);
        for (std::size_t ci = 0; ci < cin_; ++ci)
            for (std::size_t kz = 0; kz < k_; ++kz) {
                const long iz = static_cast<long>(oz * stride_ + kz) - static_cast<long>(pad_);
                if (iz < 0 || iz >= s) continue;
                for (std::size_t ky = 0; ky < k_; ++ky) {
                    const long iy = static_cast<long>(oy * stride_ + ky) - static_cast<long>(pad_);
                    if (iy < 0 || iy >= s) continue;
                    for (std::size_t kx = 0; kx < k_; ++kx) {
                        const long ix = static_cast<long>(ox * stride_ + kx) - static_cast<long>(pad_);
                        if (ix < 0 || ix >= s) continue;
                        f(ci, ((ci * k_ + kz) * k_ + ky) * k_ + kx,
                          static_cast<std::size_t>((iz * s + iy) * s + ix));
                    }
                }
            }
    }

    std::size_t cin_, cout_, size_, k_, stride_, pad_, osize_ = 0;
    ParamTensor<T> weight_;
    ParamTensor<T> bias_;
};

template <class T>
class Relu final : public Layer<T> {
public:
    explicit Relu(std::size_t features) : n_(features) {}
    std::string kind() const override { return "relu"; }
    std::size_t in_features() const override { return n_; }
    std::size_t out_features() const override { return n_; }
    Batch<T> forward(const Batch<T>& x) const override {
        Batch<T> y = x;
        for (auto& v : y.data) v = v > T(0) ? v : T(0);
        return y;
    }
    Batch<T> backward(const Batch<T>& x, const Batch<T>&, const Batch<T>& dy) override {
        Batch<T> dx = dy;
        for (std::size_t i = 0; i < dx.data.size(); ++i)
            if (!(x.data[i] > T(0))) dx.data[i] = T(0);
        return dx;
    }
    std::unique_ptr<Layer<T>> clone() const override { return std::make_unique<Relu>(*this); }

private:
    std::size_t n_;
};

template <class T>
class Tanh final : public Layer<T> {
public:
    explicit Tanh(std::size_t features) : n_(features) {}
    std::string kind() const override { return "tanh"; }
    std::size_t in_features() const override { return n_; }
    std::size_t out_features() const override { return n_; }
    Batch<T> forward(const Batch<T>& x) const override {
        Batch<T> y = x;
        for (auto& v : y.data) v = std::tanh(v);
        return y;
    }
    Batch<T> backward(const Batch<T>&, const Batch<T>& y, const Batch<T>& dy) override {
        Batch<T> dx = dy;
        for (std::size_t i = 0; i < dx.data.size(); ++i) dx.data[i] *= T(1) - y.data[i] * y.data[i];
        return dx;
    }
    std::unique_ptr<Layer<T>> clone() const override { return std::make_unique<Tanh>(*this); }

private:
    std::size_t n_;
};

/// Mean over the spatial positions of each channel.
template <class T>
class GlobalAvgPool final : public Layer<T> {
public:
    GlobalAvgPool(std::size_t channels, std::size_t spatial) : c_(channels), s_(spatial) {}
    std::string kind() const override { return "global-avg-pool"; }
    std::size_t in_features() const override { return c_ * s_; }
    std::size_t out_features() const override { return c_; }
    Batch<T> forward(const Batch<T>& x) const override {
        Batch<T> y(x.rows, c_);
        for (std::size_t n = 0; n < x.rows; ++n)
            for (std::size_t c = 0; c < c_; ++c) {
                T s = 0;
                const T* p = x.row(n) + c * s_;
                for (std::size_t i = 0; i < s_; ++i) s += p[i];
                y(n, c) = s / static_cast<T>(s_);
            }
        return y;
    }
    Batch<T> backward(const Batch<T>& x, const Batch<T>&, const Batch<T>& dy) override {
        Batch<T> dx(x.rows, c_ * s_);
        for (std::size_t n = 0; n < x.rows; ++n)
            for (std::size_t c = 0; c < c_; ++c) {
                const T g = dy(n, c) / static_cast<T>(s_);
                T* p = dx.row(n) + c * s_;
                std::fill(p, p + s_, g);
            }
        return dx;
    }
    std::unique_ptr<Layer<T>> clone() const override { return std::make_unique<GlobalAvgPool>(*this); }

private:
    std::size_t c_, s_;
};

/// Scales each row to unit Euclidean norm.
template <class T>
class L2Normalize final : public Layer<T> {
public:
    explicit L2Normalize(std::size_t features) : n_(features) {}
    std::string kind() const override { return "l2-normalize"; }
    std::size_t in_features() const override { return n_; }
    std::size_t out_features() const override { return n_; }
    Batch<T> forward(const Batch<T>& x) const override {
        Batch<T> y = x;
        for (std::size_t r = 0; r < x.rows; ++r) {
            const T len = std::sqrt(kernels::dot(n_, x.row(r), x.row(r)));
            if (!(len > T(0))) throw NumericError("l2-normalize received a zero-norm row");
            for (std::size_t i = 0; i < n_; ++i) y(r, i) /= len;
        }
        return y;
    }
    Batch<T> backward(const Batch<T>& x, const Batch<T>& y, const Batch<T>& dy) override {
        Batch<T> dx(x.rows, n_);
        for (std::size_t r = 0; r < x.rows; ++r) {
            const T len = std::sqrt(kernels::dot(n_, x.row(r), x.row(r)));
            const T proj = kernels::dot(n_, y.row(r), dy.row(r));
            for (std::size_t i = 0; i < n_; ++i) dx(r, i) = (dy(r, i) - y(r, i) * proj) / len;
        }
        return dx;
    }
    std::unique_ptr<Layer<T>> clone() const override { return std::make_unique<L2Normalize>(*this); }

private:
    std::size_t n_;
};

} // namespace voxnav::nn
