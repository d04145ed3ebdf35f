#pragma once

#include <atomic>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <random>
#include <string>
#include <thread>
#include <vector>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "../embedding/base64.hpp"
#include "navigator.hpp"

namespace voxnav::service {

using nlohmann::json;

/// A request outside the session's current capabilities; maps to 404 or 409.
class NotFoundError : public Error {
public:
    explicit NotFoundError(const std::string& what) : Error("not_found", what) {}
};
class BusyError : public Error {
public:
    explicit BusyError(const std::string& what) : Error("busy", what) {}
};

inline json viewpoint_json(const Viewpoint& v) {
    return {{"orientation", {v.orientation.w, v.orientation.x, v.orientation.y, v.orientation.z}},
            {"depth", v.depth},
            {"look_at", {v.look_at.x, v.look_at.y, v.look_at.z}}};
}

inline double finite_number(const json& j, const char* what) {
    if (!j.is_number()) throw MalformedInputError(std::string(what) + " must be a number");
    const double x = j.get<double>();
    if (!std::isfinite(x)) throw MalformedInputError(std::string(what) + " must be finite");
    return x;
}

/// Parses {"orientation": [w,x,y,z], "depth": d, "look_at": [x,y,z]?}; the quaternion
/// must be unit length and the depth inside `range`.
inline Viewpoint parse_viewpoint_json(const json& j, const DepthRange& range) {
    if (!j.is_object()) throw MalformedInputError("viewpoint must be an object");
    if (!j.contains("orientation") || !j["orientation"].is_array() || j["orientation"].size() != 4)
        throw MalformedInputError("viewpoint.orientation must be [w, x, y, z]");
    Viewpoint v;
    const auto& q = j["orientation"];
    v.orientation = {finite_number(q[0], "orientation.w"), finite_number(q[1], "orientation.x"),
                     finite_number(q[2], "orientation.y"), finite_number(q[3], "orientation.z")};
    if (std::abs(v.orientation.norm() - 1.0) > 1e-6)
        throw MalformedInputError("viewpoint.orientation must be a unit quaternion");
    if (!j.contains("depth")) throw MalformedInputError("viewpoint.depth is required");
    v.depth = finite_number(j["depth"], "viewpoint.depth");
    if (!range.contains(v.depth)) throw MalformedInputError("viewpoint.depth is outside the allowed range");
    if (j.contains("look_at")) {
        const auto& l = j["look_at"];
        if (!l.is_array() || l.size() != 3) throw MalformedInputError("viewpoint.look_at must be [x, y, z]");
        v.look_at = {finite_number(l[0], "look_at.x"), finite_number(l[1], "look_at.y"), finite_number(l[2], "look_at.z")};
    }
    return v;
}

struct ServerOptions {
    RewardMode reward_mode = RewardMode::Block;
    int restarts = 4;
    int trajectory_frame_size = 128;
    bool train_per_prompt = false;
    std::uint64_t seed = 7;
};

/// HTTP front end over loaded navigators. Each session is mutated only by the request
/// holding its busy flag; optimizations run without holding any lock.
class NavigatorServer {
public:
    explicit NavigatorServer(ServerOptions opts = {}) : opts_(opts) { routes(); }

    ~NavigatorServer() {
        stop();
        std::vector<std::thread> workers;
        {
            std::lock_guard lk(mu_);
            workers.swap(workers_);
        }
        for (auto& t : workers) t.join();
    }

    NavigatorServer(const NavigatorServer&) = delete;
    NavigatorServer& operator=(const NavigatorServer&) = delete;

    void add_dataset(std::shared_ptr<const Navigator> nav) {
        std::lock_guard lk(mu_);
        datasets_[nav->name()] = std::move(nav);
    }
    /// /health reports "starting" until this is called.
    void set_ready() { ready_ = true; }

    /// Binds `host:port`; port 0 picks a free port. Returns the bound port.
    int bind(const std::string& host, int port) {
        const int p = port == 0 ? http_.bind_to_any_port(host) : (http_.bind_to_port(host, port) ? port : -1);
        if (p < 0) throw IoError("cannot listen on " + host + ":" + std::to_string(port));
        return p;
    }
    /// Serves on the bound socket until stop().
    void run() { http_.listen_after_bind(); }
    void stop() {
        if (http_.is_running()) http_.stop();
    }
    void wait_until_ready() const { http_.wait_until_ready(); }

private:
    struct Session {
        std::string id;
        std::shared_ptr<const Navigator> nav;
        RewardMode mode = RewardMode::Block;
        Viewpoint viewpoint;
        std::optional<std::string> goal_text;
        std::optional<EmbeddingVector> goal;
        std::vector<json> history;
        bool busy = false;
        std::uint64_t prompts = 0;
        json last_result;  // most recent prompt response or error
    };
    using SessionPtr = std::shared_ptr<Session>;

    static std::string frame_base64(const Image& img) { return base64_encode(encode_png(img)); }
    static std::string frame_hash(const std::string& b64) { return hex_hash(fnv1a64(b64)); }
    static std::string hex_hash(std::uint64_t h) {
        char buf[17];
        std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
        return buf;
    }

    std::string new_id() {
        std::lock_guard lk(mu_);
        static constexpr char kHex[] = "0123456789abcdef";
        std::string id;
        do {
            id.clear();
            for (int i = 0; i < 16; ++i) id += kHex[rng_() & 15];
        } while (sessions_.count(id));
        return id;
    }

    SessionPtr session(const std::string& id) {
        std::lock_guard lk(mu_);
        const auto it = sessions_.find(id);
        if (it == sessions_.end()) throw NotFoundError("no session '" + id + "'");
        return it->second;
    }

    /// Marks the session busy; the guard clears it.
    class BusyGuard {
    public:
        BusyGuard(NavigatorServer& s, SessionPtr sess) : s_(&s), sess_(std::move(sess)) {
            std::lock_guard lk(s_->mu_);
            if (sess_->busy) throw BusyError("session '" + sess_->id + "' is busy");
            sess_->busy = true;
        }
        BusyGuard(BusyGuard&& o) noexcept : s_(o.s_), sess_(std::move(o.sess_)) { o.sess_.reset(); }
        BusyGuard(const BusyGuard&) = delete;
        ~BusyGuard() {
            if (!sess_) return;
            std::lock_guard lk(s_->mu_);
            sess_->busy = false;
        }

    private:
        NavigatorServer* s_;
        SessionPtr sess_;
    };

    static json error_body(const std::string& code, const std::string& message) {
        return {{"code", code}, {"message", message}};
    }

    static int status_for(const Error& e) {
        if (dynamic_cast<const NotFoundError*>(&e)) return 404;
        if (dynamic_cast<const BusyError*>(&e)) return 409;
        if (dynamic_cast<const TransportError*>(&e)) return 502;
        if (dynamic_cast<const MalformedInputError*>(&e) || dynamic_cast<const ConfigError*>(&e)) return 400;
        return 500;
    }
    static std::string code_for(const Error& e) {
        return dynamic_cast<const TransportError*>(&e) ? "upstream" : e.code();
    }

    template <class F>
    static void guarded(httplib::Response& res, F&& f) {
        try {
            auto [status, body] = f();
            res.status = status;
            res.set_content(body.dump(), "application/json");
        } catch (const Error& e) {
            res.status = status_for(e);
            res.set_content(error_body(code_for(e), e.what()).dump(), "application/json");
        } catch (const json::exception& e) {
            res.status = 400;
            res.set_content(error_body("malformed_input", e.what()).dump(), "application/json");
        } catch (const std::exception& e) {
            res.status = 500;
            res.set_content(error_body("internal", e.what()).dump(), "application/json");
        }
    }

    static json parse_body(const httplib::Request& req) {
        json j = json::parse(req.body.empty() ? "{}" : req.body, nullptr, false);
        if (j.is_discarded() || !j.is_object()) throw MalformedInputError("request body must be a JSON object");
        return j;
    }

    static std::optional<RewardMode> mode_field(const json& j) {
        if (!j.contains("reward_mode") || j["reward_mode"].is_null()) return std::nullopt;
        if (!j["reward_mode"].is_string()) throw MalformedInputError("reward_mode must be a string");
        const auto s = j["reward_mode"].get<std::string>();
        if (s != "block" && s != "image") throw MalformedInputError("reward_mode must be 'block' or 'image'");
        return parse_reward_mode(s);
    }

    json session_json(const Session& s) const {
        json j{{"id", s.id},
               {"dataset", s.nav->name()},
               {"reward_mode", to_string(s.mode)},
               {"viewpoint", viewpoint_json(s.viewpoint)},
               {"goal", s.goal_text ? json(*s.goal_text) : json(nullptr)},
               {"status", s.busy ? "running" : "idle"},
               {"history_length", s.history.size()}};
        if (!s.last_result.is_null()) j["last_result"] = s.last_result;
        return j;
    }

    /// Runs one prompt without holding locks, then commits the result or an error entry.
    json run_prompt(const SessionPtr& s, const std::string& text, RewardMode mode, int restarts, std::uint64_t seed) {
        Viewpoint start;
        {
            std::lock_guard lk(mu_);
            start = s->viewpoint;
        }
        try {
            const auto goal = s->nav->embed_goal(text);
            Navigator::AnswerOptions a{mode, restarts, seed, opts_.train_per_prompt};
            const auto best = s->nav->answer(goal, start, a);
            const std::string frame = frame_base64(s->nav->frame(best.viewpoint));
            json traj = json::array();
            for (const auto& v : best.trajectory.viewpoints) {
                traj.push_back(frame_base64(s->nav->frame(v, opts_.trajectory_frame_size)));
                if (v == best.viewpoint) break;
            }
            json out{{"viewpoint", viewpoint_json(best.viewpoint)},
                     {"start", viewpoint_json(best.trajectory.viewpoints.front())},
                     {"reward", best.reward},
                     {"reward_mode", to_string(mode)},           {"restart", best.restart},
                     {"frame", frame},                           {"trajectory_frames", traj}};
            std::lock_guard lk(mu_);
            s->viewpoint = best.viewpoint;
            s->goal_text = text;
            s->goal = goal;
            s->mode = mode;
            s->history.push_back({{"kind", "prompt"},
                                  {"prompt", text},
                                  {"reward_mode", to_string(mode)},
                                  {"viewpoint", viewpoint_json(best.viewpoint)},
                                  {"reward", best.reward},
                                  {"frame_hash", frame_hash(frame)}});
            s->last_result = out;
            return out;
        } catch (const Error& e) {
            std::lock_guard lk(mu_);
            s->history.push_back({{"kind", "error"}, {"prompt", text}, {"code", code_for(e)}, {"message", e.what()}});
            s->last_result = {{"error", error_body(code_for(e), e.what())}};
            throw;
        }
    }

    void routes() {
        http_.Get("/health", [this](const httplib::Request&, httplib::Response& res) {
            guarded(res, [&] { return std::pair{200, json{{"status", ready_ ? "ok" : "starting"}}}; });
        });

        http_.Get("/datasets", [this](const httplib::Request&, httplib::Response& res) {
            guarded(res, [&] {
                json list = json::array();
                std::lock_guard lk(mu_);
                for (const auto& [name, nav] : datasets_)
                    list.push_back({{"name", name},
                                    {"dims", {nav->volume().dims().x, nav->volume().dims().y, nav->volume().dims().z}},
                                    {"grid",
                                     {nav->assets().grid.grid_dims().x, nav->assets().grid.grid_dims().y,
                                      nav->assets().grid.grid_dims().z}},
                                    {"radius", nav->radius()},
                                    {"depth_range", {nav->depth_range().min, nav->depth_range().max}},
                                    {"has_policy", nav->has_policy()}});
                return std::pair{200, json{{"datasets", list}}};
            });
        });

        http_.Post("/sessions", [this](const httplib::Request& req, httplib::Response& res) {
            guarded(res, [&] {
                const json body = parse_body(req);
                if (!body.contains("dataset") || !body["dataset"].is_string())
                    throw MalformedInputError("'dataset' must be a string");
                const auto name = body["dataset"].get<std::string>();
                std::shared_ptr<const Navigator> nav;
                {
                    std::lock_guard lk(mu_);
                    const auto it = datasets_.find(name);
                    if (it == datasets_.end()) throw NotFoundError("unknown dataset '" + name + "'");
                    nav = it->second;
                }
                auto s = std::make_shared<Session>();
                s->id = new_id();
                s->nav = nav;
                s->mode = mode_field(body).value_or(opts_.reward_mode);
                s->viewpoint = nav->overview();
                const std::string frame = frame_base64(nav->frame(s->viewpoint));
                {
                    std::lock_guard lk(mu_);
                    sessions_[s->id] = s;
                }
                return std::pair{201, json{{"id", s->id},
                                           {"dataset", name},
                                           {"reward_mode", to_string(s->mode)},
                                           {"viewpoint", viewpoint_json(s->viewpoint)},
                                           {"frame", frame}}};
            });
        });

        http_.Get(R"(/sessions/([0-9a-f]+))", [this](const httplib::Request& req, httplib::Response& res) {
            guarded(res, [&] {
                const auto s = session(req.matches[1]);
                std::lock_guard lk(mu_);
                return std::pair{200, session_json(*s)};
            });
        });

        http_.Get(R"(/sessions/([0-9a-f]+)/history)", [this](const httplib::Request& req, httplib::Response& res) {
            guarded(res, [&] {
                const auto s = session(req.matches[1]);
                std::lock_guard lk(mu_);
                return std::pair{200, json{{"id", s->id}, {"history", s->history}}};
            });
        });

        http_.Post(R"(/sessions/([0-9a-f]+)/prompt)", [this](const httplib::Request& req, httplib::Response& res) {
            guarded(res, [&] {
                const auto s = session(req.matches[1]);
                const json body = parse_body(req);
                if (!body.contains("text") || !body["text"].is_string())
                    throw MalformedInputError("'text' must be a string");
                const auto text = body["text"].get<std::string>();
                if (trim(text).empty()) throw MalformedInputError("prompt text is empty");
                int restarts = opts_.restarts;
                if (body.contains("restarts")) {
                    if (!body["restarts"].is_number_integer() || body["restarts"].get<int>() < 1)
                        throw MalformedInputError("'restarts' must be a positive integer");
                    restarts = body["restarts"].get<int>();
                }
                const bool async = body.value("async", false);
                BusyGuard guard(*this, s);
                RewardMode mode;
                std::uint64_t seed;
                {
                    std::lock_guard lk(mu_);
                    mode = mode_field(body).value_or(s->mode);
                    seed = mix_seed(opts_.seed, s->prompts++);
                }
                if (!async) return std::pair{200, run_prompt(s, text, mode, restarts, seed)};
                auto job = std::make_shared<BusyGuard>(std::move(guard));
                std::lock_guard lk(mu_);
                workers_.emplace_back([this, s, text, mode, restarts, seed, job] {
                    try {
                        run_prompt(s, text, mode, restarts, seed);
                    } catch (...) {
                        // Recorded in the session history and last_result.
                    }
                });
                return std::pair{202, json{{"id", s->id}, {"status", "running"}}};
            });
        });

        http_.Post(R"(/sessions/([0-9a-f]+)/camera)", [this](const httplib::Request& req, httplib::Response& res) {
            guarded(res, [&] {
                const auto s = session(req.matches[1]);
                const json body = parse_body(req);
                BusyGuard guard(*this, s);
                const auto env = s->nav->env(s->mode);
                Viewpoint v;
                std::optional<EmbeddingVector> goal;
                {
                    std::lock_guard lk(mu_);
                    v = s->viewpoint;
                    goal = s->goal;
                }
                json entry{{"kind", "camera"}};
                if (body.contains("action")) {
                    const auto& a = body["action"];
                    if (!a.is_array() || a.size() != rl::kActionDim)
                        throw MalformedInputError("'action' must be an array of 5 numbers");
                    Action act;
                    for (std::size_t i = 0; i < rl::kActionDim; ++i)
                        act[i] = std::clamp(finite_number(a[i], "action component"), -1.0, 1.0);
                    try {
                        v = apply_action(v, act, env.action_scale(), env.depth_range());
                    } catch (const DegenerateError& e) {
                        throw MalformedInputError(e.what());
                    }
                    if (v.orientation.w < 0) v.orientation = v.orientation * -1.0;
                    entry["action"] = act;
                } else if (body.contains("viewpoint")) {
                    v = parse_viewpoint_json(body["viewpoint"], env.depth_range());
                } else {
                    throw MalformedInputError("camera request needs 'action' or 'viewpoint'");
                }
                const std::string frame = frame_base64(s->nav->frame(v));
                const json reward = goal ? json(s->nav->score(v, *goal, s->mode).reward) : json(nullptr);
                entry["viewpoint"] = viewpoint_json(v);
                entry["reward"] = reward;
                entry["frame_hash"] = frame_hash(frame);
                std::lock_guard lk(mu_);
                s->viewpoint = v;
                s->history.push_back(entry);
                return std::pair{200, json{{"viewpoint", viewpoint_json(v)}, {"reward", reward}, {"frame", frame}}};
            });
        });
    }

    ServerOptions opts_;
    httplib::Server http_;
    std::atomic<bool> ready_{false};
    mutable std::mutex mu_;
    std::map<std::string, std::shared_ptr<const Navigator>> datasets_;
    std::map<std::string, SessionPtr> sessions_;
    std::vector<std::thread> workers_;
    std::mt19937_64 rng_{std::random_device{}()};
};

/// Splits "host:port".
inline std::pair<std::string, int> parse_listen(const std::string& s) {
    const auto colon = s.rfind(':');
    if (colon == std::string::npos || colon == 0) throw ConfigError("listen address must be host:port, got '" + s + "'");
    const long long port = parse_int(s.substr(colon + 1));
    if (port < 0 || port > 65535) throw ConfigError("listen port out of range in '" + s + "'");
    return {s.substr(0, colon), static_cast<int>(port)};
}

} // namespace voxnav::service
