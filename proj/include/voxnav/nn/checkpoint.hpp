#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <map>
#include <string>
#include <vector>

#include "../error.hpp"
#include "../text.hpp"
#include "optim.hpp"
#include "tensor.hpp"

namespace voxnav::nn {

// Layout: magic "VXNNCKPT", u32 version, u32 tensor count, then per tensor
// {u32 name length, name bytes, u32 rank, u64 dims...}, then every tensor's
// values as little-endian IEEE doubles in manifest order.
inline constexpr char kCheckpointMagic[8] = {'V', 'X', 'N', 'N', 'C', 'K', 'P', 'T'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

struct NamedTensor {
    std::string name;
    std::vector<std::uint64_t> shape;
    std::vector<double> values;
    bool operator==(const NamedTensor&) const = default;
};

namespace detail {

inline void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}
inline void put_u64(std::vector<std::uint8_t>& out, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

class Reader {
public:
    explicit Reader(const std::vector<std::uint8_t>& b) : b_(b) {}
    std::uint64_t get(int bytes) {
        if (pos_ + static_cast<std::size_t>(bytes) > b_.size()) throw MalformedInputError("checkpoint is truncated");
        std::uint64_t v = 0;
        for (int i = 0; i < bytes; ++i) v |= static_cast<std::uint64_t>(b_[pos_++]) << (8 * i);
        return v;
    }
    std::string get_string(std::size_t n) {
        if (pos_ + n > b_.size()) throw MalformedInputError("checkpoint is truncated");
        std::string s(reinterpret_cast<const char*>(b_.data() + pos_), n);
        pos_ += n;
        return s;
    }
    bool done() const { return pos_ == b_.size(); }

private:
    const std::vector<std::uint8_t>& b_;
    std::size_t pos_ = 0;
};

} // namespace detail

inline std::vector<std::uint8_t> encode_checkpoint(const std::vector<NamedTensor>& tensors) {
    std::vector<std::uint8_t> out(std::begin(kCheckpointMagic), std::end(kCheckpointMagic));
    detail::put_u32(out, kCheckpointVersion);
    detail::put_u32(out, static_cast<std::uint32_t>(tensors.size()));
    for (const auto& t : tensors) {
        std::uint64_t count = 1;
        for (auto d : t.shape) count *= d;
        if (count != t.values.size()) throw LogicError("tensor '" + t.name + "' shape does not match its values");
        detail::put_u32(out, static_cast<std::uint32_t>(t.name.size()));
        out.insert(out.end(), t.name.begin(), t.name.end());
        detail::put_u32(out, static_cast<std::uint32_t>(t.shape.size()));
        for (auto d : t.shape) detail::put_u64(out, d);
    }
    for (const auto& t : tensors)
        for (double v : t.values) detail::put_u64(out, std::bit_cast<std::uint64_t>(v));
    return out;
}

inline std::vector<NamedTensor> decode_checkpoint(const std::vector<std::uint8_t>& bytes) {
    if (bytes.size() < 16 || std::memcmp(bytes.data(), kCheckpointMagic, 8) != 0)
        throw MalformedInputError("not a checkpoint file (bad magic)");
    detail::Reader r(bytes);
    r.get_string(8);
    const auto version = r.get(4);
    if (version != kCheckpointVersion)
        throw MalformedInputError("unsupported checkpoint version " + std::to_string(version));
    const auto count = r.get(4);
    std::vector<NamedTensor> tensors(count);
    for (auto& t : tensors) {
        t.name = r.get_string(r.get(4));
        const auto rank = r.get(4);
        t.shape.resize(rank);
        std::uint64_t n = 1;
        for (auto& d : t.shape) {
            d = r.get(8);
            n *= d;
        }
        t.values.resize(n);
    }
    for (auto& t : tensors)
        for (auto& v : t.values) v = std::bit_cast<double>(r.get(8));
    if (!r.done()) throw MalformedInputError("checkpoint has trailing bytes");
    return tensors;
}

inline void write_checkpoint(const std::filesystem::path& path, const std::vector<NamedTensor>& tensors) {
    const auto bytes = encode_checkpoint(tensors);
    write_binary_file(path, bytes.data(), bytes.size());
}

inline std::vector<NamedTensor> read_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open checkpoint " + path.string());
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return decode_checkpoint(bytes);
}

template <class T>
inline std::vector<NamedTensor> snapshot(const std::vector<ParamTensor<T>*>& params) {
    std::vector<NamedTensor> out;
    for (const auto* p : params) {
        NamedTensor t{p->name, {}, {}};
        for (auto d : p->shape) t.shape.push_back(d);
        t.values.assign(p->values.begin(), p->values.end());
        out.push_back(std::move(t));
    }
    return out;
}

/// Copies values by name; every parameter must be present with a matching shape.
template <class T>
inline void restore(const std::vector<ParamTensor<T>*>& params, const std::vector<NamedTensor>& tensors) {
    std::map<std::string, const NamedTensor*> by_name;
    for (const auto& t : tensors) by_name[t.name] = &t;
    for (auto* p : params) {
        const auto it = by_name.find(p->name);
        if (it == by_name.end()) throw MalformedInputError("checkpoint lacks parameter '" + p->name + "'");
        const auto& t = *it->second;
        std::vector<std::uint64_t> shape(p->shape.begin(), p->shape.end());
        if (t.shape != shape) throw MalformedInputError("checkpoint shape mismatch for '" + p->name + "'");
        for (std::size_t i = 0; i < p->size(); ++i) p->values[i] = static_cast<T>(t.values[i]);
    }
}

template <class T>
inline std::vector<NamedTensor> snapshot_optimizer(AdamW<T>& opt, const std::vector<ParamTensor<T>*>& params,
                                                   const std::string& prefix) {
    std::vector<NamedTensor> out;
    out.push_back({prefix + ".step", {1}, {static_cast<double>(opt.step_count())}});
    if (opt.first_moments().size() != params.size()) return out;
    for (std::size_t k = 0; k < params.size(); ++k) {
        std::vector<std::uint64_t> shape(params[k]->shape.begin(), params[k]->shape.end());
        out.push_back({prefix + ".m." + params[k]->name, shape, opt.first_moments()[k]});
        out.push_back({prefix + ".v." + params[k]->name, shape, opt.second_moments()[k]});
    }
    return out;
}

template <class T>
inline void restore_optimizer(AdamW<T>& opt, const std::vector<ParamTensor<T>*>& params,
                              const std::vector<NamedTensor>& tensors, const std::string& prefix) {
    std::map<std::string, const NamedTensor*> by_name;
    for (const auto& t : tensors) by_name[t.name] = &t;
    const auto step = by_name.find(prefix + ".step");
    if (step == by_name.end()) throw MalformedInputError("checkpoint lacks optimizer state '" + prefix + "'");
    opt.set_step_count(static_cast<long long>(step->second->values.at(0)));
    opt.first_moments().clear();
    opt.second_moments().clear();
    if (opt.step_count() == 0) return;
    for (auto* p : params) {
        const auto m = by_name.find(prefix + ".m." + p->name);
        const auto v = by_name.find(prefix + ".v." + p->name);
        if (m == by_name.end() || v == by_name.end())
            throw MalformedInputError("checkpoint lacks optimizer moments for '" + p->name + "'");
        opt.first_moments().push_back(m->second->values);
        opt.second_moments().push_back(v->second->values);
    }
}

} // namespace voxnav::nn
