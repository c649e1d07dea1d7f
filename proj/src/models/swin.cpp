#include "artauth/models/swin.hpp"

namespace artauth::swin {

std::vector<StageGeometry> resolve_stages(const SwinConfig& cfg) {
    if (cfg.embed_dim < 1 || cfg.stage3_pairs < 1 || cfg.window < 1 ||
        cfg.mlp_ratio < 1)
        throw ConfigError("invalid backbone config: all dimensions must be positive");
    if (cfg.input_h % 4 != 0 || cfg.input_w % 4 != 0)
        throw ConfigError("input " + std::to_string(cfg.input_h) + "x" +
                          std::to_string(cfg.input_w) + " must be divisible by 4");
    for (int s = 0; s < 4; ++s) {
        const std::int64_t d = cfg.embed_dim << s;
        if (d % cfg.heads[static_cast<std::size_t>(s)] != 0)
            throw ConfigError("stage " + std::to_string(s) + " channels " +
                              std::to_string(d) + " not divisible by " +
                              std::to_string(cfg.heads[static_cast<std::size_t>(s)]) +
                              " heads");
    }
    std::vector<StageGeometry> out;
    std::int64_t h = cfg.input_h / 4, w = cfg.input_w / 4;
    const auto pairs = cfg.pairs_per_stage();
    for (int s = 0; s < 4; ++s) {
        StageGeometry g;
        if (s > 0) {
            g.pad_h_before = (h % 2 != 0);
            g.pad_w_before = (w % 2 != 0);
            if ((g.pad_h_before || g.pad_w_before) && !cfg.allow_small_grids)
                throw ConfigError("token grid " + std::to_string(h) + "x" +
                                  std::to_string(w) + " entering stage " +
                                  std::to_string(s) +
                                  " is odd; merging requires even extents");
            h = (h + 1) / 2;
            w = (w + 1) / 2;
        }
        g.h = h;
        g.w = w;
        g.dim = cfg.embed_dim << s;
        g.heads = cfg.heads[static_cast<std::size_t>(s)];
        g.pairs = pairs[static_cast<std::size_t>(s)];
        const std::int64_t grid = std::min(h, w);
        if (grid <= cfg.window) {
            if (!cfg.allow_small_grids && grid < cfg.window)
                throw ConfigError("stage " + std::to_string(s) + " grid " +
                                  std::to_string(h) + "x" + std::to_string(w) +
                                  " smaller than window " + std::to_string(cfg.window));
            g.window = grid;
            g.shift = 0;  // a single window covers the grid
        } else {
            g.window = cfg.window;
            g.shift = cfg.window / 2;
        }
        if (h % g.window != 0 || w % g.window != 0)
            throw ConfigError("stage " + std::to_string(s) + " grid " +
                              std::to_string(h) + "x" + std::to_string(w) +
                              " not divisible by window " + std::to_string(g.window));
        out.push_back(g);
    }
    return out;
}

std::vector<std::pair<std::string, Shape>> enumerate_params(const SwinConfig& cfg) {
    const auto geo = resolve_stages(cfg);
    const std::int64_t c = cfg.embed_dim;
    std::vector<std::pair<std::string, Shape>> out;
    const auto linear_entry = [&out](const std::string& n, std::int64_t din,
                                     std::int64_t dout, bool bias) {
        out.emplace_back(n + ".w", Shape{din, dout});
        if (bias) out.emplace_back(n + ".b", Shape{dout});
    };
    const auto norm_entry = [&out](const std::string& n, std::int64_t d) {
        out.emplace_back(n + ".g", Shape{d});
        out.emplace_back(n + ".b", Shape{d});
    };

    linear_entry("embed", 48, c, true);
    norm_entry("embed_norm", c);
    const auto pairs = cfg.pairs_per_stage();
    for (int s = 0; s < 4; ++s) {
        const std::int64_t d = c << s;
        if (s > 0) {
            const std::string mn = "stage" + std::to_string(s) + ".merge";
            norm_entry(mn + ".norm", 2 * d);
            linear_entry(mn, 2 * d, d, false);
        }
        const std::int64_t m = geo[static_cast<std::size_t>(s)].window;
        for (std::int64_t p = 0; p < pairs[static_cast<std::size_t>(s)]; ++p) {
            for (int blk = 0; blk < 2; ++blk) {
                const std::string bn = "stage" + std::to_string(s) + ".pair" +
                                       std::to_string(p) + ".blk" + std::to_string(blk);
                norm_entry(bn + ".norm1", d);
                linear_entry(bn + ".attn.q", d, d, true);
                linear_entry(bn + ".attn.k", d, d, true);
                linear_entry(bn + ".attn.v", d, d, true);
                linear_entry(bn + ".attn.proj", d, d, true);
                if (cfg.rel_pos_bias)
                    out.emplace_back(bn + ".attn.relpos",
                                     Shape{(2 * m - 1) * (2 * m - 1),
                                           cfg.heads[static_cast<std::size_t>(s)]});
                norm_entry(bn + ".norm2", d);
                linear_entry(bn + ".mlp.fc1", d, cfg.mlp_ratio * d, true);
                linear_entry(bn + ".mlp.fc2", cfg.mlp_ratio * d, d, true);
            }
        }
    }
    norm_entry("head_norm", 8 * c);
    linear_entry("head", 8 * c, 1, true);
    return out;
}

std::int64_t count_parameters(const SwinConfig& cfg) {
    std::int64_t n = 0;
    for (const auto& [name, shape] : enumerate_params(cfg)) n += shape_numel(shape);
    return n;
}

}  // namespace artauth::swin
