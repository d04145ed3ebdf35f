#pragma once

#include <memory>
#include <random>
#include <string>
#include <vector>

#include "../error.hpp"
#include "layers.hpp"

namespace voxnav::nn {

enum class LayerKind { Dense, Conv3d, Relu, Tanh, GlobalAvgPool, L2Normalize };

/// Declarative layer description. Feature counts are inferred from the previous layer
/// except where a layer changes them (dense out, conv channels).
struct LayerSpec {
    LayerKind kind = LayerKind::Dense;
    std::size_t out = 0;       // dense: output features
    std::size_t channels = 0;  // conv3d: output channels
    std::size_t kernel = 3;
    std::size_t stride = 1;
    std::size_t padding = 0;

    static LayerSpec dense(std::size_t out) { return {LayerKind::Dense, out}; }
    static LayerSpec conv3d(std::size_t channels, std::size_t kernel, std::size_t stride, std::size_t padding) {
        return {LayerKind::Conv3d, 0, channels, kernel, stride, padding};
    }
    static LayerSpec relu() { return {LayerKind::Relu}; }
    static LayerSpec tanh() { return {LayerKind::Tanh}; }
    static LayerSpec global_avg_pool() { return {LayerKind::GlobalAvgPool}; }
    static LayerSpec l2_normalize() { return {LayerKind::L2Normalize}; }
};

/// Activations recorded by Sequential::forward; activations[0] is the input.
template <class T>
struct ForwardPass {
    std::vector<Batch<T>> activations;

    bool empty() const { return activations.empty(); }
    const Batch<T>& output() const {
        if (activations.empty()) throw LogicError("forward pass holds no activations");
        return activations.back();
    }
};

template <class T>
class Sequential {
public:
    Sequential() = default;
    explicit Sequential(std::string name) : name_(std::move(name)) {}

    Sequential(const Sequential& other) : name_(other.name_) {
        for (const auto& l : other.layers_) layers_.push_back(l->clone());
    }
    Sequential& operator=(const Sequential& other) {
        if (this != &other) {
            Sequential tmp(other);
            *this = std::move(tmp);
        }
        return *this;
    }
    Sequential(Sequential&&) noexcept = default;
    Sequential& operator=(Sequential&&) noexcept = default;

    /// Builds layers for inputs of `in_features` values. For conv stacks, the input is a
    /// single-channel cube of side `cube_side`.
    static Sequential build(std::string name, std::size_t in_features, const std::vector<LayerSpec>& specs,
                            std::size_t in_channels = 1, std::size_t cube_side = 0) {
        Sequential net(std::move(name));
        std::size_t features = in_features;
        std::size_t channels = in_channels;
        std::size_t side = cube_side;
        for (std::size_t i = 0; i < specs.size(); ++i) {
            const auto& s = specs[i];
            const std::string lname = net.name_ + "." + std::to_string(i);
            switch (s.kind) {
            case LayerKind::Dense:
                net.layers_.push_back(std::make_unique<Dense<T>>(lname, features, s.out));
                features = s.out;
                side = 0;
                break;
            case LayerKind::Conv3d: {
                if (side == 0 || channels * side * side * side != features)
                    throw ConfigError("layer " + lname + ": conv3d needs a cubic channel-major input");
                auto conv = std::make_unique<Conv3d<T>>(lname, channels, s.channels, side, s.kernel, s.stride,
                                                        s.padding);
                side = conv->output_size();
                channels = s.channels;
                features = conv->out_features();
                net.layers_.push_back(std::move(conv));
                break;
            }
            case LayerKind::Relu: net.layers_.push_back(std::make_unique<Relu<T>>(features)); break;
            case LayerKind::Tanh: net.layers_.push_back(std::make_unique<Tanh<T>>(features)); break;
            case LayerKind::GlobalAvgPool:
                if (side == 0) throw ConfigError("layer " + lname + ": pooling needs a spatial input");
                net.layers_.push_back(std::make_unique<GlobalAvgPool<T>>(channels, side * side * side));
                features = channels;
                side = 0;
                break;
            case LayerKind::L2Normalize: net.layers_.push_back(std::make_unique<L2Normalize<T>>(features)); break;
            }
        }
        return net;
    }

    const std::string& name() const { return name_; }
    std::size_t size() const { return layers_.size(); }
    Layer<T>& layer(std::size_t i) { return *layers_[i]; }
    const Layer<T>& layer(std::size_t i) const { return *layers_[i]; }
    std::size_t in_features() const { return layers_.empty() ? 0 : layers_.front()->in_features(); }
    std::size_t out_features() const { return layers_.empty() ? 0 : layers_.back()->out_features(); }

    void initialize(std::uint64_t seed) {
        std::mt19937_64 rng(seed);
        for (auto& l : layers_) l->initialize(rng);
    }

    ForwardPass<T> forward(const Batch<T>& x) const {
        ForwardPass<T> pass;
        pass.activations.reserve(layers_.size() + 1);
        pass.activations.push_back(x);
        for (std::size_t i = 0; i < layers_.size(); ++i) {
            const auto& in = pass.activations.back();
            if (in.cols != layers_[i]->in_features())
                throw ConfigError("layer " + std::to_string(i) + " (" + layers_[i]->kind() + ") of '" + name_ +
                                  "' expects " + std::to_string(layers_[i]->in_features()) + " inputs, got " +
                                  std::to_string(in.cols));
            pass.activations.push_back(layers_[i]->forward(in));
        }
        return pass;
    }

    Batch<T> predict(const Batch<T>& x) const { return forward(x).output(); }

    /// Accumulates parameter gradients and returns dL/dinput.
    Batch<T> backward(const ForwardPass<T>& pass, const Batch<T>& upstream) {
        if (pass.activations.size() != layers_.size() + 1)
            throw LogicError("backward on '" + name_ + "' without a matching forward pass");
        Batch<T> grad = upstream;
        if (grad.rows != pass.output().rows || grad.cols != pass.output().cols)
            throw LogicError("upstream gradient shape does not match the network output");
        for (std::size_t i = layers_.size(); i-- > 0;)
            grad = layers_[i]->backward(pass.activations[i], pass.activations[i + 1], grad);
        return grad;
    }

    std::vector<ParamTensor<T>*> params() {
        std::vector<ParamTensor<T>*> out;
        for (auto& l : layers_)
            for (auto* p : l->params()) out.push_back(p);
        return out;
    }
    std::vector<const ParamTensor<T>*> params() const {
        std::vector<const ParamTensor<T>*> out;
        for (auto& l : layers_)
            for (auto* p : l->params()) out.push_back(p);
        return out;
    }
    void zero_grad() {
        for (auto* p : params()) p->zero_grad();
    }

private:
    std::string name_;
    std::vector<std::unique_ptr<Layer<T>>> layers_;
};

template <class T>
inline void zero_grads(const std::vector<ParamTensor<T>*>& params) {
    for (auto* p : params) p->zero_grad();
}

} // namespace voxnav::nn
