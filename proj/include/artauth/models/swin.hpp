#pragma once

#include <array>
#include <string>
#include <vector>

#include "artauth/core/init.hpp"
#include "artauth/core/ops.hpp"
#include "artauth/core/tensor.hpp"
#include "artauth/models/swin_geometry.hpp"

// Hierarchical windowed-attention backbone with a single-neuron sigmoid head.
// Stage layout: 4x4 patch embedding, one transformer pair, then three times
// {patch merging, pairs}, with the third stage holding a configurable number
// of pairs. Token maps are row-major [batch, h, w, channels].

namespace artauth::swin {

using core::Tensor;

struct SwinConfig {
    std::int64_t input_h = 224;
    std::int64_t input_w = 224;
    std::int64_t embed_dim = 96;   // C
    std::int64_t stage3_pairs = 3; // N
    std::int64_t window = 7;       // M
    std::array<std::int64_t, 4> heads{3, 6, 12, 24};
    std::int64_t mlp_ratio = 4;
    bool rel_pos_bias = true;
    // Clamp windows to the grid (disabling the shift) and zero-pad odd grids
    // before merging. Off by default: the standard configs never need it and
    // strict validation catches geometry mistakes early.
    bool allow_small_grids = false;
    std::string variant = "custom";

    static SwinConfig tiny() {
        SwinConfig c;
        c.embed_dim = 96;
        c.stage3_pairs = 3;
        c.heads = {3, 6, 12, 24};
        c.variant = "swin-tiny";
        return c;
    }
    static SwinConfig base() {
        SwinConfig c;
        c.embed_dim = 128;
        c.stage3_pairs = 9;
        c.heads = {4, 8, 16, 32};
        c.variant = "swin-base";
        return c;
    }

    std::array<std::int64_t, 4> pairs_per_stage() const {
        return {1, 1, stage3_pairs, 1};
    }
};

// Per-stage numbers resolved from a config. window <= grid always holds;
// shift is zero where the window covers the whole grid.
struct StageGeometry {
    std::int64_t h = 0, w = 0;
    std::int64_t dim = 0;
    std::int64_t window = 0;
    std::int64_t shift = 0;
    std::int64_t heads = 0;
    std::int64_t pairs = 0;
    bool pad_h_before = false;  // stage entered through a padded merge
    bool pad_w_before = false;
};

std::vector<StageGeometry> resolve_stages(const SwinConfig& cfg);

std::vector<std::pair<std::string, Shape>> enumerate_params(const SwinConfig& cfg);
std::int64_t count_parameters(const SwinConfig& cfg);

// ---- parameter packs ---------------------------------------------------

template <typename T>
struct AttentionParams {
    Tensor<T> q_w, q_b, k_w, k_b, v_w, v_b;
    Tensor<T> proj_w, proj_b;
    Tensor<T> rel_table;  // [(2M-1)^2, heads] or undefined
};

template <typename T>
struct BlockParams {
    Tensor<T> norm1_g, norm1_b;
    AttentionParams<T> attn;
    Tensor<T> norm2_g, norm2_b;
    Tensor<T> mlp_w1, mlp_b1, mlp_w2, mlp_b2;
};

template <typename T>
struct PairParams {
    BlockParams<T> wmsa;   // block 1, unshifted windows
    BlockParams<T> swmsa;  // block 2, shifted windows
};

template <typename T>
struct MergeParams {
    Tensor<T> norm_g, norm_b;  // over the concatenated 4d vector
    Tensor<T> w;               // [4d, 2d], no bias
};

template <typename T>
struct SwinParams {
    Tensor<T> embed_w, embed_b;            // [48, C], [C]
    Tensor<T> embed_norm_g, embed_norm_b;  // [C]
    std::array<MergeParams<T>, 3> merges;  // before stages 1..3
    std::array<std::vector<PairParams<T>>, 4> stages;
    Tensor<T> head_norm_g, head_norm_b;    // [8C]
    Tensor<T> head_w, head_b;              // [8C, 1], [1]
};

// ---- operations ----------------------------------------------------------

// Additive region mask for one shifted tiling: [nW, t, t] of 0 / -1e9.
template <typename T>
Tensor<T> build_shift_mask(std::int64_t h, std::int64_t w, std::int64_t m,
                           std::int64_t shift) {
    const std::int64_t nwh = h / m, nww = w / m, t = m * m;
    auto mask = Tensor<T>::zeros({nwh * nww, t, t});
    if (corrupt_masks_hook()) return mask;
    const auto ids = shift_region_ids(h, w, m, shift);
    auto md = mask.mutable_data();
    for (std::int64_t wy = 0; wy < nwh; ++wy) {
        for (std::int64_t wx = 0; wx < nww; ++wx) {
            T* mw = md.data() + (wy * nww + wx) * t * t;
            for (std::int64_t i = 0; i < t; ++i) {
                const int ri = ids[static_cast<std::size_t>((wy * m + i / m) * w + wx * m + i % m)];
                for (std::int64_t j = 0; j < t; ++j) {
                    const int rj = ids[static_cast<std::size_t>((wy * m + j / m) * w + wx * m + j % m)];
                    if (ri != rj) mw[i * t + j] = T(-1e9);
                }
            }
        }
    }
    return mask;
}

// Each non-overlapping p x p x 3 pixel block, flattened row-major with the
// channel fastest, mapped through one linear layer.
template <typename T>
Tensor<T> patch_embed(const Tensor<T>& images, const Tensor<T>& w, const Tensor<T>& b,
                      std::int64_t patch = 4) {
    if (images.rank() != 4 || images.dim(3) != 3)
        throw ShapeError("patch_embed expects [B,H,W,3], got " + shape_str(images.shape()));
    const std::int64_t bs = images.dim(0), h = images.dim(1), wd = images.dim(2);
    if (h % patch != 0 || wd % patch != 0)
        throw ShapeError("patch_embed input " + shape_str(images.shape()) +
                         " not divisible by patch size " + std::to_string(patch));
    auto flat = core::gather_rows(images, patch_flatten_index(bs, h, wd, patch), 3,
                                  {bs, h / patch, wd / patch, patch * patch * 3});
    return core::linear(flat, w, b);
}

// [B,h,w,d] -> [B*nW, M*M, d]
template <typename T>
Tensor<T> window_partition(const Tensor<T>& tokens, std::int64_t m) {
    if (tokens.rank() != 4)
        throw ShapeError("window_partition expects [B,h,w,d], got " +
                         shape_str(tokens.shape()));
    const std::int64_t bs = tokens.dim(0), h = tokens.dim(1), w = tokens.dim(2),
                       d = tokens.dim(3);
    if (h % m != 0 || w % m != 0)
        throw ShapeError("token grid " + shape_str(tokens.shape()) +
                         " not divisible by window " + std::to_string(m));
    return core::gather_rows(tokens, window_partition_index(bs, h, w, m), d,
                             {bs * (h / m) * (w / m), m * m, d});
}

template <typename T>
Tensor<T> window_reverse(const Tensor<T>& windows, std::int64_t bs, std::int64_t h,
                         std::int64_t w, std::int64_t m) {
    const std::int64_t d = windows.dim(2);
    return core::gather_rows(windows, window_reverse_index(bs, h, w, m), d,
                             {bs, h, w, d});
}

// Per-window multi-head scaled dot-product attention. mask, when defined, is
// [windows_per_image, t, t] additive pre-softmax. probs_out exposes the
// attention weights [nW*heads, t, t] for verification.
template <typename T>
Tensor<T> window_attention(const Tensor<T>& windows, const AttentionParams<T>& p,
                           std::int64_t heads, const Tensor<T>& mask = Tensor<T>{},
                           Tensor<T>* probs_out = nullptr) {
    if (windows.rank() != 3)
        throw ShapeError("window_attention expects [nW, t, d], got " +
                         shape_str(windows.shape()));
    const std::int64_t nw = windows.dim(0), t = windows.dim(1), d = windows.dim(2);
    if (heads < 1 || d % heads != 0)
        throw ConfigError("channel count " + std::to_string(d) +
                          " not divisible by head count " + std::to_string(heads));
    const std::int64_t dh = d / heads;
    auto q = core::linear(windows, p.q_w, p.q_b);
    auto k = core::linear(windows, p.k_w, p.k_b);
    auto v = core::linear(windows, p.v_w, p.v_b);
    const auto split = head_split_index(nw, t, heads);
    const Shape hshape{nw * heads, t, dh};
    auto qh = core::gather_rows(q, split, dh, hshape);
    auto kh = core::gather_rows(k, split, dh, hshape);
    auto vh = core::gather_rows(v, split, dh, hshape);
    auto scores = core::scale(core::bmm_nt(qh, kh),
                              static_cast<T>(1.0 / std::sqrt(static_cast<double>(dh))));
    if (p.rel_table.defined()) {
        const std::int64_t m = static_cast<std::int64_t>(std::llround(std::sqrt(double(t))));
        scores = core::add_rel_pos_bias(scores, p.rel_table, rel_pos_pair_index(m), heads);
    }
    if (mask.defined()) scores = core::add_window_mask(scores, mask, heads);
    auto probs = core::softmax_lastaxis(scores);
    if (probs_out) *probs_out = probs;
    auto ctx = core::bmm_nn(probs, vh);
    auto merged = core::gather_rows(ctx, head_merge_index(nw, t, heads), dh, {nw, t, d});
    return core::linear(merged, p.proj_w, p.proj_b);
}

// Cyclic shift by floor(M/2), masked windowed attention, reverse shift.
template <typename T>
Tensor<T> shifted_window_attention(const Tensor<T>& tokens, const AttentionParams<T>& p,
                                   std::int64_t heads, std::int64_t m,
                                   Tensor<T>* probs_out = nullptr) {
    const std::int64_t bs = tokens.dim(0), h = tokens.dim(1), w = tokens.dim(2),
                       d = tokens.dim(3);
    const std::int64_t s = m / 2;
    auto shifted = core::gather_rows(tokens, cyclic_shift_index(bs, h, w, -s, -s), d,
                                     tokens.shape());
    auto win = window_partition(shifted, m);
    auto mask = build_shift_mask<T>(h, w, m, s);
    auto att = window_attention(win, p, heads, mask, probs_out);
    auto merged = window_reverse(att, bs, h, w, m);
    return core::gather_rows(merged, cyclic_shift_index(bs, h, w, s, s), d,
                             tokens.shape());
}

namespace detail {

template <typename T>
Tensor<T> block_forward(const Tensor<T>& x, const BlockParams<T>& bp, std::int64_t heads,
                        std::int64_t m, bool shifted) {
    const std::int64_t bs = x.dim(0), h = x.dim(1), w = x.dim(2), d = x.dim(3);
    auto normed = core::layer_norm(x, bp.norm1_g, bp.norm1_b);
    Tensor<T> att;
    if (shifted) {
        att = shifted_window_attention(normed, bp.attn, heads, m);
    } else {
        auto win = window_partition(normed, m);
        att = window_reverse(window_attention(win, bp.attn, heads), bs, h, w, m);
    }
    auto x1 = core::add(x, att);
    auto normed2 = core::layer_norm(x1, bp.norm2_g, bp.norm2_b);
    auto hdn = core::gelu(core::linear(normed2, bp.mlp_w1, bp.mlp_b1));
    auto mlp = core::linear(hdn, bp.mlp_w2, bp.mlp_b2);
    return core::add(x1, mlp);
}

}  // namespace detail

// Two pre-norm residual blocks: W-MSA then SW-MSA (the shift drops out when
// the window covers the whole grid).
template <typename T>
Tensor<T> swin_pair(const Tensor<T>& tokens, const PairParams<T>& pp, std::int64_t heads,
                    std::int64_t m, bool shift_enabled = true) {
    auto x = detail::block_forward(tokens, pp.wmsa, heads, m, false);
    return detail::block_forward(x, pp.swmsa, heads, m, shift_enabled);
}

// The 2x2 concatenation alone: [B,h,w,d] -> [B,h/2,w/2,4d], quads row-major.
template <typename T>
Tensor<T> patch_merge_concat(const Tensor<T>& tokens) {
    const std::int64_t bs = tokens.dim(0), h = tokens.dim(1), w = tokens.dim(2),
                       d = tokens.dim(3);
    if (h % 2 != 0 || w % 2 != 0)
        throw ShapeError("patch_merge on odd grid " + shape_str(tokens.shape()));
    return core::gather_rows(tokens, patch_merge_index(bs, h, w), d,
                             {bs, h / 2, w / 2, 4 * d});
}

template <typename T>
Tensor<T> patch_merge(const Tensor<T>& tokens, const MergeParams<T>& mp) {
    auto cat = patch_merge_concat(tokens);
    auto normed = core::layer_norm(cat, mp.norm_g, mp.norm_b);
    return core::linear(normed, mp.w);
}

// ---- model ----------------------------------------------------------------

template <typename T>
class SwinModel {
public:
    SwinModel(SwinConfig cfg, std::uint64_t seed);

    // images [B, H, W, 3] -> scores [B] in (0,1). stage_outputs, when given,
    // receives the token map after each stage.
    Tensor<T> forward(const Tensor<T>& images,
                      std::vector<Tensor<T>>* stage_outputs = nullptr) const;

    core::ParamSet<T>& params() { return params_; }
    const core::ParamSet<T>& params() const { return params_; }
    const SwinConfig& config() const { return cfg_; }
    const std::vector<StageGeometry>& stages() const { return geometry_; }
    SwinParams<T>& structured() { return sp_; }

private:
    SwinConfig cfg_;
    std::vector<StageGeometry> geometry_;
    core::ParamSet<T> params_;
    SwinParams<T> sp_;
};

template <typename T>
SwinModel<T>::SwinModel(SwinConfig cfg, std::uint64_t seed)
    : cfg_(std::move(cfg)), geometry_(resolve_stages(cfg_)) {
    core::Rng rng(seed);
    const std::int64_t c = cfg_.embed_dim;

    // Registration stores handle copies; Tensor is a shared node, so the
    // structured view and the named set alias the same storage.
    const auto he_linear = [&](const std::string& name, std::int64_t din,
                               std::int64_t dout, bool bias) {
        Tensor<T> w = Tensor<T>::zeros({din, dout});
        core::he_normal_fill(w, din, rng);
        params_.add(name + ".w", w);
        Tensor<T> b;
        if (bias) {
            b = Tensor<T>::zeros({dout});
            params_.add(name + ".b", b);
        }
        return std::pair<Tensor<T>, Tensor<T>>(w, b);
    };
    const auto norm_pair = [&](const std::string& name, std::int64_t dim) {
        Tensor<T> g = Tensor<T>::full({dim}, T(1));
        Tensor<T> b = Tensor<T>::zeros({dim});
        params_.add(name + ".g", g);
        params_.add(name + ".b", b);
        return std::pair<Tensor<T>, Tensor<T>>(g, b);
    };

    {
        auto [w, b] = he_linear("embed", 48, c, true);
        sp_.embed_w = w;
        sp_.embed_b = b;
        auto [g, bb] = norm_pair("embed_norm", c);
        sp_.embed_norm_g = g;
        sp_.embed_norm_b = bb;
    }

    const auto pairs = cfg_.pairs_per_stage();
    for (int s = 0; s < 4; ++s) {
        const std::int64_t d = c << s;
        if (s > 0) {
            const std::string mn = "stage" + std::to_string(s) + ".merge";
            auto [g, b] = norm_pair(mn + ".norm", 4 * (d / 2));
            sp_.merges[static_cast<std::size_t>(s - 1)].norm_g = g;
            sp_.merges[static_cast<std::size_t>(s - 1)].norm_b = b;
            auto [w, nb] = he_linear(mn, 4 * (d / 2), d, false);
            (void)nb;
            sp_.merges[static_cast<std::size_t>(s - 1)].w = w;
        }
        const std::int64_t mwin = geometry_[static_cast<std::size_t>(s)].window;
        for (std::int64_t p = 0; p < pairs[static_cast<std::size_t>(s)]; ++p) {
            PairParams<T> pair;
            for (int blk = 0; blk < 2; ++blk) {
                const std::string bn = "stage" + std::to_string(s) + ".pair" +
                                       std::to_string(p) + ".blk" + std::to_string(blk);
                BlockParams<T> blkp;
                {
                    auto [g, bb] = norm_pair(bn + ".norm1", d);
                    blkp.norm1_g = g;
                    blkp.norm1_b = bb;
                }
                for (const char* role : {"q", "k", "v"}) {
                    auto [w, bb] = he_linear(bn + ".attn." + role, d, d, true);
                    if (role[0] == 'q') blkp.attn.q_w = w, blkp.attn.q_b = bb;
                    if (role[0] == 'k') blkp.attn.k_w = w, blkp.attn.k_b = bb;
                    if (role[0] == 'v') blkp.attn.v_w = w, blkp.attn.v_b = bb;
                }
                {
                    auto [w, bb] = he_linear(bn + ".attn.proj", d, d, true);
                    blkp.attn.proj_w = w;
                    blkp.attn.proj_b = bb;
                }
                if (cfg_.rel_pos_bias) {
                    Tensor<T> table = Tensor<T>::zeros(
                        {(2 * mwin - 1) * (2 * mwin - 1),
                         cfg_.heads[static_cast<std::size_t>(s)]});
                    core::truncated_normal_fill(table, 0.02, rng);
                    params_.add(bn + ".attn.relpos", table);
                    blkp.attn.rel_table = table;
                }
                {
                    auto [g, bb] = norm_pair(bn + ".norm2", d);
                    blkp.norm2_g = g;
                    blkp.norm2_b = bb;
                }
                {
                    auto [w, bb] = he_linear(bn + ".mlp.fc1", d, cfg_.mlp_ratio * d, true);
                    blkp.mlp_w1 = w;
                    blkp.mlp_b1 = bb;
                }
                {
                    auto [w, bb] = he_linear(bn + ".mlp.fc2", cfg_.mlp_ratio * d, d, true);
                    blkp.mlp_w2 = w;
                    blkp.mlp_b2 = bb;
                }
                if (blk == 0)
                    pair.wmsa = blkp;
                else
                    pair.swmsa = blkp;
            }
            sp_.stages[static_cast<std::size_t>(s)].push_back(pair);
        }
    }
    {
        auto [g, b] = norm_pair("head_norm", 8 * c);
        sp_.head_norm_g = g;
        sp_.head_norm_b = b;
        auto [w, bb] = he_linear("head", 8 * c, 1, true);
        sp_.head_w = w;
        sp_.head_b = bb;
    }
}

template <typename T>
Tensor<T> SwinModel<T>::forward(const Tensor<T>& images,
                                std::vector<Tensor<T>>* stage_outputs) const {
    if (images.rank() != 4 || images.dim(1) != cfg_.input_h ||
        images.dim(2) != cfg_.input_w || images.dim(3) != 3)
        throw ShapeError("input " + shape_str(images.shape()) + " does not match config " +
                         std::to_string(cfg_.input_h) + "x" + std::to_string(cfg_.input_w) +
                         "x3");
    const std::int64_t bs = images.dim(0);
    auto x = patch_embed(images, sp_.embed_w, sp_.embed_b);
    x = core::layer_norm(x, sp_.embed_norm_g, sp_.embed_norm_b);
    for (int s = 0; s < 4; ++s) {
        const auto& geo = geometry_[static_cast<std::size_t>(s)];
        if (s > 0) {
            if (geo.pad_h_before || geo.pad_w_before) {
                const std::int64_t ph = x.dim(1) + (geo.pad_h_before ? 1 : 0);
                const std::int64_t pw = x.dim(2) + (geo.pad_w_before ? 1 : 0);
                x = core::gather_rows(x, pad_bottom_right_index(bs, x.dim(1), x.dim(2), ph, pw),
                                      x.dim(3), {bs, ph, pw, x.dim(3)});
            }
            x = patch_merge(x, sp_.merges[static_cast<std::size_t>(s - 1)]);
        }
        for (const auto& pair : sp_.stages[static_cast<std::size_t>(s)]) {
            x = swin_pair(x, pair, geo.heads, geo.window, geo.shift > 0);
        }
        if (stage_outputs) stage_outputs->push_back(x);
    }
    x = core::layer_norm(x, sp_.head_norm_g, sp_.head_norm_b);
    auto tokensflat = core::reshape(x, {bs, x.dim(1) * x.dim(2), x.dim(3)});
    auto pooled = core::mean_middle(tokensflat);
    auto logit = core::linear(pooled, sp_.head_w, sp_.head_b);
    return core::reshape(core::sigmoid(logit), {bs});
}

}  // namespace artauth::swin
