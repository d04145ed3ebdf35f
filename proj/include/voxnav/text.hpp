#pragma once

#include <charconv>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "error.hpp"

namespace voxnav {

inline std::string trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r\n");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t\r\n");
    return std::string(s.substr(first, last - first + 1));
}

inline std::string_view strip_comment(std::string_view line) {
    const auto pos = line.find('#');
    return pos == std::string_view::npos ? line : line.substr(0, pos);
}

inline std::vector<std::string> split(std::string_view s, char sep) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        const auto pos = s.find(sep, start);
        out.emplace_back(s.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    return out;
}

inline std::vector<std::string> split_lines(std::string_view s) {
    auto lines = split(s, '\n');
    for (auto& l : lines)
        if (!l.empty() && l.back() == '\r') l.pop_back();
    if (!lines.empty() && lines.back().empty()) lines.pop_back();
    return lines;
}

inline std::string read_text_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

/// Creates the parent directory of `path`, reporting failures as I/O errors.
inline void ensure_parent_dir(const std::filesystem::path& path) {
    if (!path.has_parent_path()) return;
    std::error_code ec;
    std::filesystem::create_directories(path.parent_path(), ec);
    if (ec) throw IoError("cannot create directory " + path.parent_path().string() + ": " + ec.message());
}

/// Writes raw bytes, creating parent directories.
inline void write_binary_file(const std::filesystem::path& path, const void* data, std::size_t size) {
    ensure_parent_dir(path);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + path.string());
    out.write(static_cast<const char*>(data), static_cast<std::streamsize>(size));
    if (!out) throw IoError("failed writing " + path.string());
}

inline void write_text_file(const std::filesystem::path& path, std::string_view text) {
    ensure_parent_dir(path);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + path.string());
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    if (!out) throw IoError("failed writing " + path.string());
}

/// "key=value" lines; '#' starts a comment.
inline std::vector<std::pair<std::string, std::string>> parse_key_values(std::string_view text) {
    std::vector<std::pair<std::string, std::string>> out;
    for (const auto& raw : split_lines(text)) {
        const std::string line = trim(strip_comment(raw));
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw MalformedInputError("expected key=value, got '" + line + "'");
        out.emplace_back(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    }
    return out;
}

inline double parse_double(std::string_view s) {
    const std::string t = trim(s);
    double v = 0;
    std::size_t used = 0;
    try {
        v = std::stod(t, &used);
    } catch (const std::exception&) {
        throw MalformedInputError("not a number: '" + t + "'");
    }
    if (used != t.size()) throw MalformedInputError("not a number: '" + t + "'");
    return v;
}

inline long long parse_int(std::string_view s) {
    const std::string t = trim(s);
    long long v = 0;
    const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
    if (ec != std::errc{} || ptr != t.data() + t.size()) throw MalformedInputError("not an integer: '" + t + "'");
    return v;
}

inline std::vector<int> parse_int_list(std::string_view s) {
    std::vector<int> out;
    for (const auto& part : split(s, ',')) out.push_back(static_cast<int>(parse_int(part)));
    return out;
}

inline std::vector<double> parse_double_list(std::string_view s) {
    std::vector<double> out;
    for (const auto& part : split(s, ',')) out.push_back(parse_double(part));
    return out;
}

} // namespace voxnav
