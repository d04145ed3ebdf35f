#pragma once

#include <png.h>

#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <vector>

#include "error.hpp"
#include "render.hpp"
#include "text.hpp"

namespace voxnav {

inline std::vector<std::uint8_t> quantize_rgba8(const Image& img) {
    std::vector<std::uint8_t> out(img.pixels.size());
    for (std::size_t i = 0; i < out.size(); ++i)
        out[i] = static_cast<std::uint8_t>(std::lround(std::clamp(img.pixels[i], 0.0f, 1.0f) * 255.0f));
    return out;
}

/// 8-bit RGBA PNG bytes; identical inputs give identical bytes.
inline std::vector<std::uint8_t> encode_png(const Image& img) {
    if (img.width <= 0 || img.height <= 0) throw LogicError("cannot encode an empty image");
    const auto rgba = quantize_rgba8(img);
    png_image image;
    std::memset(&image, 0, sizeof image);
    image.version = PNG_IMAGE_VERSION;
    image.width = static_cast<png_uint_32>(img.width);
    image.height = static_cast<png_uint_32>(img.height);
    image.format = PNG_FORMAT_RGBA;
    png_alloc_size_t size = 0;
    if (!png_image_write_to_memory(&image, nullptr, &size, 0, rgba.data(), 0, nullptr))
        throw IoError(std::string("png encode failed: ") + image.message);
    std::vector<std::uint8_t> out(size);
    if (!png_image_write_to_memory(&image, out.data(), &size, 0, rgba.data(), 0, nullptr))
        throw IoError(std::string("png encode failed: ") + image.message);
    out.resize(size);
    return out;
}

inline Image decode_png(const std::vector<std::uint8_t>& bytes) {
    png_image image;
    std::memset(&image, 0, sizeof image);
    image.version = PNG_IMAGE_VERSION;
    if (!png_image_begin_read_from_memory(&image, bytes.data(), bytes.size()))
        throw MalformedInputError(std::string("png decode failed: ") + image.message);
    image.format = PNG_FORMAT_RGBA;
    std::vector<std::uint8_t> rgba(PNG_IMAGE_SIZE(image));
    if (!png_image_finish_read(&image, nullptr, rgba.data(), 0, nullptr)) {
        png_image_free(&image);
        throw MalformedInputError(std::string("png decode failed: ") + image.message);
    }
    Image img(static_cast<int>(image.width), static_cast<int>(image.height));
    for (std::size_t i = 0; i < rgba.size(); ++i) img.pixels[i] = rgba[i] / 255.0f;
    return img;
}

inline void write_png(const std::filesystem::path& path, const Image& img) {
    const auto bytes = encode_png(img);
    write_binary_file(path, bytes.data(), bytes.size());
}

inline std::vector<std::uint8_t> read_binary_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline Image read_png(const std::filesystem::path& path) { return decode_png(read_binary_file(path)); }

/// Renders and writes the frame to `path` in one call.
inline Image render_png(const Volume& vol, const TransferFunction& tf, const CameraFrame& frame,
                        const RenderSettings& settings, int width, int height, const std::filesystem::path& path) {
    Image img = render(vol, tf, frame, settings, width, height);
    write_png(path, img);
    return img;
}

} // namespace voxnav
