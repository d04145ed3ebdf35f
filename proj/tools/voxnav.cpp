#include <csignal>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "voxnav/service/pipeline.hpp"
#include "voxnav/service/server.hpp"

using namespace voxnav;
using namespace voxnav::service;

namespace {

NavigatorServer* g_server = nullptr;

void on_signal(int) {
    if (g_server) g_server->stop();
}

struct Globals {
    std::string config = "voxnav.toml";
    std::string dataset;
    std::optional<std::uint64_t> seed;
};

ProjectConfig load(const Globals& g) {
    auto cfg = load_project_config(g.config);
    if (g.seed) cfg.seed = *g.seed;
    return cfg;
}

std::optional<RewardMode> mode_option(const std::string& s) {
    if (s.empty()) return std::nullopt;
    return parse_reward_mode(s);
}

int serve(const Globals& g, const std::string& listen_flag, const std::string& mode, int restarts,
          bool train_per_prompt) {
    const auto cfg = load(g);
    ServerOptions o;
    o.reward_mode = mode_option(mode).value_or(cfg.service.reward_mode);
    o.restarts = restarts > 0 ? restarts : cfg.service.restarts;
    o.trajectory_frame_size = cfg.render.trajectory_frame_size;
    o.train_per_prompt = train_per_prompt;
    o.seed = cfg.seed;
    NavigatorServer server(o);
    const auto [host, port] = parse_listen(listen_flag.empty() ? cfg.service.listen : listen_flag);
    const int bound = server.bind(host, port);
    g_server = &server;
    std::signal(SIGINT, on_signal);
    std::signal(SIGTERM, on_signal);
    std::thread loader([&] {
        for (const auto& d : cfg.datasets) {
            if (!g.dataset.empty() && d.name != g.dataset) continue;
            try {
                server.add_dataset(Pipeline(cfg, d.name).navigator(true));
                std::cerr << "serve: loaded dataset '" << d.name << "'\n";
            } catch (const Error& e) {
                std::cerr << "serve: skipping dataset '" << d.name << "': " << e.what() << '\n';
            }
        }
        server.set_ready();
    });
    std::cerr << "serve: listening on " << host << ":" << bound << '\n';
    server.run();
    loader.join();
    g_server = nullptr;
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"voxnav: language-driven viewpoint navigation for volume data"};
    app.require_subcommand(1);
    Globals g;
    std::uint64_t seed = 0;
    app.add_option("--config", g.config, "project configuration file")->capture_default_str();
    app.add_option("--dataset", g.dataset, "dataset name (default: the first configured)");
    auto* seed_opt = app.add_option("--seed", seed, "override project.seed");

    auto* gen = app.add_subcommand("generate-toy", "write the synthetic toy volume and a project config");
    std::string gen_out = ".";
    int gen_side = 64;
    gen->add_option("--out", gen_out, "output directory")->capture_default_str();
    gen->add_option("--side", gen_side, "voxels per axis")->capture_default_str()->check(CLI::PositiveNumber);

    auto* sample = app.add_subcommand("sample", "sample uniform and block-centred viewpoints");
    auto* render_ds = app.add_subcommand("render-dataset", "render the sampled viewpoints");
    auto* caption = app.add_subcommand("caption", "caption the rendered images");
    auto* align = app.add_subcommand("align", "train the image-text alignment heads");
    auto* encode = app.add_subcommand("encode", "train the block encoder");

    std::string mode;
    int restarts = 0;
    bool train_per_prompt = false;
    int episodes = 0;
    auto* train_rl = app.add_subcommand("train-rl", "train the viewpoint policy");
    train_rl->add_option("--reward-mode", mode, "block or image")->check(CLI::IsMember({"block", "image"}));
    train_rl->add_option("--episodes", episodes, "override rl.episodes")->check(CLI::PositiveNumber);

    auto* query = app.add_subcommand("query", "find the viewpoint that best matches a text prompt");
    std::string text, out_png;
    query->add_option("text", text, "prompt text")->required();
    query->add_option("--reward-mode", mode, "block or image")->check(CLI::IsMember({"block", "image"}));
    query->add_option("--restarts", restarts, "best-viewpoint restarts")->check(CLI::PositiveNumber);
    query->add_flag("--train-per-prompt", train_per_prompt, "fine-tune the policy on this prompt first");
    query->add_option("--out", out_png, "output PNG (default: <work>/<dataset>/query.png)");

    auto* sweep = app.add_subcommand("sweep-blocks", "compare block grid resolutions");

    auto* serve_cmd = app.add_subcommand("serve", "run the HTTP service");
    std::string listen;
    serve_cmd->add_option("--listen", listen, "host:port (default: service.listen)");
    serve_cmd->add_option("--reward-mode", mode, "block or image")->check(CLI::IsMember({"block", "image"}));
    serve_cmd->add_option("--restarts", restarts, "best-viewpoint restarts")->check(CLI::PositiveNumber);
    serve_cmd->add_flag("--train-per-prompt", train_per_prompt, "fine-tune the policy per prompt");

    auto* all = app.add_subcommand("all", "run sample through train-rl");

    CLI11_PARSE(app, argc, argv);
    if (*seed_opt) g.seed = seed;

    try {
        if (*gen) {
            std::cout << generate_toy_project(gen_out, gen_side).string() << '\n';
            return 0;
        }
        if (*serve_cmd) return serve(g, listen, mode, restarts, train_per_prompt);

        Pipeline p(load(g), g.dataset);
        if (*sample || *all) p.sample();
        if (*render_ds || *all) p.render_dataset();
        if (*caption || *all) p.caption();
        if (*align || *all) p.align();
        if (*encode || *all) p.encode();
        if (*train_rl || *all)
            p.train_rl(mode_option(mode), episodes > 0 ? std::optional<int>(episodes) : std::nullopt);
        if (*sweep) {
            std::cout << "grid\tblocks\tfinal_loss\ttrain_s\tmean_best_reward\teval_ms\n";
            for (const auto& r : p.sweep_blocks())
                std::cout << r.grid.x << "x" << r.grid.y << "x" << r.grid.z << '\t' << r.blocks << '\t' << r.final_loss
                          << '\t' << r.train_seconds << '\t' << r.mean_best_reward << '\t' << r.eval_ms << '\n';
        }
        if (*query) {
            if (trim(text).empty()) {
                std::cerr << "query: the prompt text is empty\n" << query->help();
                return 2;
            }
            QueryOptions o;
            o.mode = mode_option(mode);
            if (restarts > 0) o.restarts = restarts;
            o.train_per_prompt = train_per_prompt;
            o.out = out_png;
            const auto r = p.query(text, o);
            std::cout.precision(12);
            std::cout << "viewpoint " << describe(r.viewpoint) << '\n'
                      << "reward " << r.reward << " (" << to_string(r.mode) << ")\n"
                      << "image " << r.image.string() << '\n';
        }
    } catch (const Error& e) {
        std::cerr << "error [" << e.code() << "]: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
