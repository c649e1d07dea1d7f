#include "artauth/testing/gradcheck.hpp"

#include <gtest/gtest.h>

#include "artauth/core/ops.hpp"
#include "artauth/core/rng.hpp"
#include "artauth/models/swin.hpp"

// Central finite differences (h = 1e-5, double precision) against the
// reverse-mode gradients, on randomized small shapes.

using namespace artauth;
using core::Rng;
using core::Tensor;

namespace {

Tensor<double> rand_t(Shape shape, Rng& rng, double scale = 0.8, bool grad = true) {
    auto t = Tensor<double>::zeros(std::move(shape), grad);
    for (auto& v : t.mutable_data()) v = rng.uniform(-scale, scale);
    return t;
}

constexpr double kTol = 1e-4;

}  // namespace

TEST(GradCheck, Matmul) {
    Rng rng(201);
    for (int i = 0; i < 5; ++i) {
        const std::int64_t m = 1 + rng.below(4), k = 1 + rng.below(5), n = 1 + rng.below(4);
        auto a = rand_t({m, k}, rng);
        auto b = rand_t({k, n}, rng);
        auto c = rand_t({m, n}, rng, 0.8, false);
        auto rep = verify::check_gradients(
            {a, b}, [&] { return core::sum_all(core::mul(core::matmul(a, b), c)); });
        EXPECT_TRUE(rep.ok(kTol)) << "rel err " << rep.max_rel_err;
    }
}

TEST(GradCheck, BatchedMatmulBothForms) {
    Rng rng(202);
    for (int i = 0; i < 5; ++i) {
        const std::int64_t bs = 1 + rng.below(3), m = 1 + rng.below(3),
                           k = 1 + rng.below(4), n = 1 + rng.below(3);
        auto a = rand_t({bs, m, k}, rng);
        auto b = rand_t({bs, k, n}, rng);
        auto c = rand_t({bs, m, n}, rng, 0.8, false);
        auto rep = verify::check_gradients(
            {a, b}, [&] { return core::sum_all(core::mul(core::bmm_nn(a, b), c)); });
        EXPECT_TRUE(rep.ok(kTol)) << "bmm_nn rel err " << rep.max_rel_err;

        auto bt = rand_t({bs, n, k}, rng);
        auto rep2 = verify::check_gradients(
            {a, bt}, [&] { return core::sum_all(core::mul(core::bmm_nt(a, bt), c)); });
        EXPECT_TRUE(rep2.ok(kTol)) << "bmm_nt rel err " << rep2.max_rel_err;
    }
}

TEST(GradCheck, LinearRandomShapes) {
    Rng rng(203);
    for (int i = 0; i < 5; ++i) {
        const std::int64_t r = 1 + rng.below(4), din = 1 + rng.below(6),
                           dout = 1 + rng.below(5);
        auto x = rand_t({r, din}, rng);
        auto w = rand_t({din, dout}, rng);
        auto b = rand_t({dout}, rng, 0.4);
        auto c = rand_t({r, dout}, rng, 0.8, false);
        auto rep = verify::check_gradients({x, w, b}, [&] {
            return core::sum_all(core::mul(core::linear(x, w, b), c));
        });
        EXPECT_TRUE(rep.ok(kTol)) << "rel err " << rep.max_rel_err;
    }
}

TEST(GradCheck, SoftmaxAllAxes) {
    Rng rng(204);
    for (int axis : {0, 1, 2}) {
        auto x = rand_t({3, 4, 5}, rng, 1.5);
        auto c = rand_t({3, 4, 5}, rng, 0.8, false);
        auto rep = verify::check_gradients(
            {x}, [&] { return core::sum_all(core::mul(core::softmax(x, axis), c)); });
        EXPECT_TRUE(rep.ok(kTol)) << "axis " << axis << " rel err " << rep.max_rel_err;
    }
}

TEST(GradCheck, LayerNorm) {
    Rng rng(205);
    for (int i = 0; i < 5; ++i) {
        const std::int64_t r = 1 + rng.below(5), c = 2 + rng.below(7);
        auto x = rand_t({r, c}, rng, 1.5);
        auto g = rand_t({c}, rng, 0.5);
        for (auto& v : g.mutable_data()) v += 1.0;
        auto b = rand_t({c}, rng, 0.5);
        auto w = rand_t({r, c}, rng, 0.8, false);
        auto rep = verify::check_gradients({x, g, b}, [&] {
            return core::sum_all(core::mul(core::layer_norm(x, g, b), w));
        });
        EXPECT_TRUE(rep.ok(1e-4)) << "rel err " << rep.max_rel_err;
    }
}

TEST(GradCheck, ChannelNorm) {
    Rng rng(206);
    auto x = rand_t({2, 6, 3}, rng, 1.2);
    auto g = rand_t({3}, rng, 0.4);
    for (auto& v : g.mutable_data()) v += 1.0;
    auto b = rand_t({3}, rng, 0.4);
    auto w = rand_t({2, 6, 3}, rng, 0.8, false);
    auto rep = verify::check_gradients({x, g, b}, [&] {
        return core::sum_all(core::mul(core::channel_norm(x, g, b), w));
    });
    EXPECT_TRUE(rep.ok(kTol)) << "rel err " << rep.max_rel_err;
}

TEST(GradCheck, ElementwiseActivations) {
    Rng rng(207);
    auto x = rand_t({4, 7}, rng, 2.0);
    auto c = rand_t({4, 7}, rng, 0.8, false);
    auto rep = verify::check_gradients(
        {x}, [&] { return core::sum_all(core::mul(core::gelu(x), c)); });
    EXPECT_TRUE(rep.ok(kTol)) << "gelu rel err " << rep.max_rel_err;

    // keep relu inputs away from the kink
    auto xr = rand_t({4, 7}, rng, 2.0);
    for (auto& v : xr.mutable_data())
        if (std::fabs(v) < 0.05) v += 0.1;
    auto rep2 = verify::check_gradients(
        {xr}, [&] { return core::sum_all(core::mul(core::relu(xr), c)); });
    EXPECT_TRUE(rep2.ok(kTol)) << "relu rel err " << rep2.max_rel_err;

    auto rep3 = verify::check_gradients(
        {x}, [&] { return core::sum_all(core::mul(core::sigmoid(x), c)); });
    EXPECT_TRUE(rep3.ok(kTol)) << "sigmoid rel err " << rep3.max_rel_err;
}

TEST(GradCheck, Conv2dRandomAndSpecExample) {
    Rng rng(208);
    // the 1x2x4x4 case, NHWC
    auto x = rand_t({1, 4, 4, 2}, rng);
    auto w = rand_t({3, 3, 2, 3}, rng, 0.5);
    auto b = rand_t({3}, rng, 0.3);
    auto c = rand_t({1, 4, 4, 3}, rng, 0.8, false);
    auto rep = verify::check_gradients({x, w, b}, [&] {
        return core::sum_all(core::mul(core::conv2d(x, w, b, 1, 1), c));
    });
    EXPECT_TRUE(rep.ok(kTol)) << "rel err " << rep.max_rel_err;

    for (int i = 0; i < 3; ++i) {
        const std::int64_t stride = 1 + rng.below(2);
        auto x2 = rand_t({2, 5, 5, 2}, rng);
        auto w2 = rand_t({3, 3, 2, 2}, rng, 0.5);
        auto b2 = rand_t({2}, rng, 0.3);
        auto y_shape = core::conv2d(x2, w2, b2, stride, 1).shape();
        auto c2 = rand_t(y_shape, rng, 0.8, false);
        auto rep2 = verify::check_gradients({x2, w2, b2}, [&] {
            return core::sum_all(core::mul(core::conv2d(x2, w2, b2, stride, 1), c2));
        });
        EXPECT_TRUE(rep2.ok(kTol)) << "stride " << stride << " rel err " << rep2.max_rel_err;
    }
}

TEST(GradCheck, GatherReshapeMean) {
    Rng rng(209);
    auto x = rand_t({4, 3}, rng);
    auto c = rand_t({6, 3}, rng, 0.8, false);
    auto rep = verify::check_gradients({x}, [&] {
        auto g = core::gather_rows(x, {2, 0, 3, 3, -1, 1}, 3, {6, 3});
        return core::sum_all(core::mul(g, c));
    });
    EXPECT_TRUE(rep.ok(kTol)) << "gather rel err " << rep.max_rel_err;

    auto x2 = rand_t({2, 3, 4}, rng);
    auto c2 = rand_t({2, 4}, rng, 0.8, false);
    auto rep2 = verify::check_gradients({x2}, [&] {
        auto r = core::reshape(x2, {2, 3, 4});
        return core::sum_all(core::mul(core::mean_middle(r), c2));
    });
    EXPECT_TRUE(rep2.ok(kTol)) << "mean rel err " << rep2.max_rel_err;
}

TEST(GradCheck, WeightedBce) {
    Rng rng(210);
    auto s = Tensor<double>::zeros({6}, true);
    for (auto& v : s.mutable_data()) v = rng.uniform(0.1, 0.9);
    std::vector<double> targets, weights;
    for (int i = 0; i < 6; ++i) {
        targets.push_back(rng.below(2) ? 1.0 : 0.0);
        weights.push_back(i % 2 ? 10.0 : 1.0);
    }
    auto rep = verify::check_gradients(
        {s}, [&] { return core::weighted_bce(s, targets, weights); });
    EXPECT_TRUE(rep.ok(kTol)) << "rel err " << rep.max_rel_err;
}

TEST(GradCheck, WindowAttentionWithBiasAndMask) {
    Rng rng(211);
    const std::int64_t d = 6, heads = 2, m = 2, nw = 2;
    swin::AttentionParams<double> p;
    p.q_w = rand_t({d, d}, rng, 0.4);
    p.q_b = rand_t({d}, rng, 0.2);
    p.k_w = rand_t({d, d}, rng, 0.4);
    p.k_b = rand_t({d}, rng, 0.2);
    p.v_w = rand_t({d, d}, rng, 0.4);
    p.v_b = rand_t({d}, rng, 0.2);
    p.proj_w = rand_t({d, d}, rng, 0.4);
    p.proj_b = rand_t({d}, rng, 0.2);
    p.rel_table = rand_t({(2 * m - 1) * (2 * m - 1), heads}, rng, 0.3);
    auto x = rand_t({nw, m * m, d}, rng);
    auto mask = Tensor<double>::zeros({nw, m * m, m * m});
    mask.mutable_data()[1] = -1e9;  // forbid one pair in window 0
    auto c = rand_t({nw, m * m, d}, rng, 0.8, false);
    auto rep = verify::check_gradients(
        {x, p.q_w, p.k_b, p.v_w, p.proj_w, p.rel_table}, [&] {
            return core::sum_all(
                core::mul(swin::window_attention(x, p, heads, mask), c));
        });
    EXPECT_TRUE(rep.ok(kTol)) << "rel err " << rep.max_rel_err;
}

TEST(GradCheck, PatchMergeAndPatchEmbed) {
    Rng rng(212);
    auto t = rand_t({1, 4, 4, 3}, rng);
    swin::MergeParams<double> mp;
    mp.norm_g = rand_t({12}, rng, 0.3);
    for (auto& v : mp.norm_g.mutable_data()) v += 1.0;
    mp.norm_b = rand_t({12}, rng, 0.3);
    mp.w = rand_t({12, 6}, rng, 0.4);
    auto c = rand_t({1, 2, 2, 6}, rng, 0.8, false);
    auto rep = verify::check_gradients({t, mp.norm_g, mp.norm_b, mp.w}, [&] {
        return core::sum_all(core::mul(swin::patch_merge(t, mp), c));
    });
    EXPECT_TRUE(rep.ok(kTol)) << "merge rel err " << rep.max_rel_err;

    auto img = rand_t({1, 8, 8, 3}, rng, 0.5);
    auto ew = rand_t({48, 5}, rng, 0.4);
    auto eb = rand_t({5}, rng, 0.2);
    auto c2 = rand_t({1, 2, 2, 5}, rng, 0.8, false);
    auto rep2 = verify::check_gradients({img, ew, eb}, [&] {
        return core::sum_all(core::mul(swin::patch_embed(img, ew, eb), c2));
    });
    EXPECT_TRUE(rep2.ok(kTol)) << "embed rel err " << rep2.max_rel_err;
}

// Full pair at toy dimensions: every parameter and the input feed one scalar
// loss checked against finite differences.
TEST(GradCheck, FullSwinPairToyDims) {
    Rng rng(213);
    const std::int64_t d = 8, heads = 2, m = 2;
    const auto rand_block = [&] {
        swin::BlockParams<double> b;
        b.norm1_g = rand_t({d}, rng, 0.3);
        for (auto& v : b.norm1_g.mutable_data()) v += 1.0;
        b.norm1_b = rand_t({d}, rng, 0.2);
        b.attn.q_w = rand_t({d, d}, rng, 0.35);
        b.attn.q_b = rand_t({d}, rng, 0.2);
        b.attn.k_w = rand_t({d, d}, rng, 0.35);
        b.attn.k_b = rand_t({d}, rng, 0.2);
        b.attn.v_w = rand_t({d, d}, rng, 0.35);
        b.attn.v_b = rand_t({d}, rng, 0.2);
        b.attn.proj_w = rand_t({d, d}, rng, 0.35);
        b.attn.proj_b = rand_t({d}, rng, 0.2);
        b.attn.rel_table = rand_t({(2 * m - 1) * (2 * m - 1), heads}, rng, 0.3);
        b.norm2_g = rand_t({d}, rng, 0.3);
        for (auto& v : b.norm2_g.mutable_data()) v += 1.0;
        b.norm2_b = rand_t({d}, rng, 0.2);
        b.mlp_w1 = rand_t({d, 4 * d}, rng, 0.3);
        b.mlp_b1 = rand_t({4 * d}, rng, 0.2);
        b.mlp_w2 = rand_t({4 * d, d}, rng, 0.3);
        b.mlp_b2 = rand_t({d}, rng, 0.2);
        return b;
    };
    swin::PairParams<double> pp;
    pp.wmsa = rand_block();
    pp.swmsa = rand_block();
    auto x = rand_t({1, 4, 4, d}, rng, 0.7);
    auto c = rand_t({1, 4, 4, d}, rng, 0.8, false);

    std::vector<Tensor<double>> leaves{x};
    for (const auto* blk : {&pp.wmsa, &pp.swmsa}) {
        for (const auto& t :
             {blk->norm1_g, blk->norm1_b, blk->attn.q_w, blk->attn.q_b, blk->attn.k_w,
              blk->attn.k_b, blk->attn.v_w, blk->attn.v_b, blk->attn.proj_w,
              blk->attn.proj_b, blk->attn.rel_table, blk->norm2_g, blk->norm2_b,
              blk->mlp_w1, blk->mlp_b1, blk->mlp_w2, blk->mlp_b2})
            leaves.push_back(t);
    }
    auto rep = verify::check_gradients(leaves, [&] {
        return core::sum_all(core::mul(swin::swin_pair(x, pp, heads, m), c));
    });
    EXPECT_GT(rep.checked, 1500);
    EXPECT_TRUE(rep.ok(kTol)) << "rel err " << rep.max_rel_err;
}
