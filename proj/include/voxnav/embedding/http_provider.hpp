#pragma once

#include <chrono>
#include <condition_variable>
#include <cstdlib>
#include <mutex>
#include <string>
#include <thread>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "../png.hpp"
#include "base64.hpp"
#include "provider.hpp"

namespace voxnav {

struct HttpClientConfig {
    std::string base_url = "http://127.0.0.1:8700";
    double timeout_s = 10.0;
    int retries = 2;         // extra attempts after the first
    int max_in_flight = 4;
    double backoff_s = 0.05; // doubled after each failed attempt
};

/// Counting semaphore limiting concurrent requests.
class InFlightLimiter {
public:
    explicit InFlightLimiter(int cap) : cap_(cap < 1 ? 1 : cap) {}
    void acquire() {
        std::unique_lock lock(m_);
        cv_.wait(lock, [&] { return used_ < cap_; });
        ++used_;
    }
    void release() {
        {
            std::lock_guard lock(m_);
            --used_;
        }
        cv_.notify_one();
    }

private:
    std::mutex m_;
    std::condition_variable cv_;
    int cap_;
    int used_ = 0;
};

/// JSON-over-HTTP POST client with a retry budget. Connection failures,
/// timeouts and 5xx responses are retried; 4xx responses are not.
class JsonHttpClient {
public:
    explicit JsonHttpClient(HttpClientConfig cfg)
        : cfg_(std::move(cfg)), limiter_(std::make_shared<InFlightLimiter>(cfg_.max_in_flight)) {
        if (cfg_.base_url.empty()) throw ConfigError("empty service base URL");
        if (cfg_.timeout_s <= 0) throw ConfigError("service timeout must be positive");
        if (cfg_.retries < 0) throw ConfigError("retry count must be non-negative");
        while (!cfg_.base_url.empty() && cfg_.base_url.back() == '/') cfg_.base_url.pop_back();
    }

    const HttpClientConfig& config() const { return cfg_; }

    nlohmann::json post(const std::string& path, const nlohmann::json& body) const {
        const std::string payload = body.dump();
        std::string last_error;
        double backoff = cfg_.backoff_s;
        for (int attempt = 0; attempt <= cfg_.retries; ++attempt) {
            if (attempt > 0 && backoff > 0) {
                std::this_thread::sleep_for(std::chrono::duration<double>(backoff));
                backoff *= 2;
            }
            limiter_->acquire();
            httplib::Result res;
            {
                httplib::Client cli(cfg_.base_url);
                const auto secs = static_cast<time_t>(cfg_.timeout_s);
                const auto usecs = static_cast<time_t>((cfg_.timeout_s - static_cast<double>(secs)) * 1e6);
                cli.set_connection_timeout(secs, usecs);
                cli.set_read_timeout(secs, usecs);
                cli.set_write_timeout(secs, usecs);
                res = cli.Post(path, payload, "application/json");
            }
            limiter_->release();
            if (!res) {
                last_error = "request to " + cfg_.base_url + path + " failed: " + httplib::to_string(res.error());
                continue;
            }
            if (res->status >= 500) {
                last_error = cfg_.base_url + path + " returned HTTP " + std::to_string(res->status);
                continue;
            }
            if (res->status != 200)
                throw TransportError(cfg_.base_url + path + " returned HTTP " + std::to_string(res->status), false);
            try {
                return nlohmann::json::parse(res->body);
            } catch (const nlohmann::json::exception& e) {
                throw MalformedInputError(cfg_.base_url + path + " returned invalid JSON: " + e.what());
            }
        }
        throw TransportError(last_error + " (retry budget of " + std::to_string(cfg_.retries) + " exhausted)", true);
    }

private:
    HttpClientConfig cfg_;
    std::shared_ptr<InFlightLimiter> limiter_;
};

/// Applies an environment variable override to a base URL.
inline HttpClientConfig with_env_url(HttpClientConfig cfg, const char* var) {
    if (const char* v = std::getenv(var); v && *v) cfg.base_url = v;
    return cfg;
}

inline EmbeddingVector parse_embedding_response(const nlohmann::json& j) {
    if (!j.is_object() || !j.contains("embedding") || !j["embedding"].is_array())
        throw MalformedInputError("embedding response lacks an \"embedding\" array");
    std::vector<double> v;
    v.reserve(kEmbeddingDim);
    for (const auto& x : j["embedding"]) {
        if (!x.is_number()) throw MalformedInputError("embedding response contains a non-numeric value");
        v.push_back(x.get<double>());
    }
    EmbeddingVector e(std::move(v));
    if (!e.all_finite()) throw MalformedInputError("embedding response contains non-finite values");
    return e;
}

inline std::string png_base64(const Image& img) { return base64_encode(encode_png(img)); }

/// Embedding provider backed by an external service.
class HttpProvider final : public EmbeddingProvider {
public:
    explicit HttpProvider(HttpClientConfig cfg) : client_(std::move(cfg)) {}

    std::string identity() const override { return "http:" + client_.config().base_url; }

    EmbeddingVector embed_text(std::string_view text) const override {
        if (tokenize(text).empty()) throw MalformedInputError("cannot embed empty text");
        return parse_embedding_response(client_.post("/embed/text", {{"text", std::string(text)}}));
    }

    EmbeddingVector embed_image(const Image& img) const override {
        if (img.width <= 0 || img.height <= 0) throw MalformedInputError("cannot embed an empty image");
        return parse_embedding_response(client_.post("/embed/image", {{"png_base64", png_base64(img)}}));
    }

private:
    JsonHttpClient client_;
};

} // namespace voxnav
