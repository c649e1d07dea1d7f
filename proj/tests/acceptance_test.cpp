// Acceptance suite: one criterion per run mode, each printing a single
// pass/fail line on stdout. Returns nonzero if any selected criterion fails.

#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include "artauth/core/ops.hpp"
#include "artauth/core/rng.hpp"
#include "artauth/data/patches.hpp"
#include "artauth/data/plan.hpp"
#include "artauth/harness/campaign.hpp"
#include "artauth/harness/synthetic.hpp"
#include "artauth/models/baseline.hpp"
#include "artauth/models/swin.hpp"
#include "artauth/testing/gradcheck.hpp"
#include "oracles.hpp"

namespace fs = std::filesystem;
using namespace artauth;
using core::Rng;
using core::Tensor;

namespace {

struct Criterion {
    bool pass = true;
    std::ostringstream detail;

    void require(bool ok, const std::string& what) {
        if (!ok) {
            pass = false;
            detail << (detail.str().empty() ? "" : "; ") << what;
        }
    }
};

std::string scratch_dir(const std::string& name) {
    const auto dir = fs::temp_directory_path() / "artauth_acceptance" / name;
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir.string();
}

Tensor<double> rand_d(Shape shape, Rng& rng, double scale = 0.8, bool grad = true) {
    auto t = Tensor<double>::zeros(std::move(shape), grad);
    for (auto& v : t.mutable_data()) v = rng.uniform(-scale, scale);
    return t;
}

std::string slurp(const fs::path& p) {
    std::ifstream is(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(is), std::istreambuf_iterator<char>()};
}

// ---- criterion 1: parameter counts ----------------------------------------

bool criterion1() {
    Criterion c;
    const auto tiny = swin::count_parameters(swin::SwinConfig::tiny());
    const auto base = swin::count_parameters(swin::SwinConfig::base());
    const double tiny_dev = std::fabs(double(tiny) - 28e6) / 28e6;
    const double base_dev = std::fabs(double(base) - 88e6) / 88e6;
    c.require(tiny_dev < 0.05, "swin-tiny off by " + std::to_string(tiny_dev));
    c.require(base_dev < 0.05, "swin-base off by " + std::to_string(base_dev));
    std::cout << "criterion 1 (parameter counts): " << (c.pass ? "PASS" : "FAIL")
              << " -- swin-tiny " << tiny << " vs 28M, swin-base " << base << " vs 88M"
              << (c.pass ? "" : " [" + c.detail.str() + "]") << "\n";
    return c.pass;
}

// ---- criterion 2: gradient suite -------------------------------------------

bool criterion2() {
    Criterion c;
    constexpr int kInstances = 20;
    constexpr double kTol = 1e-4;
    Rng rng(9100);
    double worst_overall = 0.0;

    const auto run_op = [&](const char* name, auto&& make_case) {
        double worst = 0.0;
        std::int64_t checked = 0;
        for (int i = 0; i < kInstances; ++i) {
            const auto rep = make_case();
            worst = std::max(worst, rep.max_rel_err);
            checked += rep.checked;
        }
        worst_overall = std::max(worst_overall, worst);
        c.require(worst < kTol && checked > 0,
                  std::string(name) + " rel err " + std::to_string(worst));
    };

    run_op("matmul", [&] {
        auto a = rand_d({1 + std::int64_t(rng.below(4)), 1 + std::int64_t(rng.below(5))}, rng);
        auto b = rand_d({a.dim(1), 1 + std::int64_t(rng.below(4))}, rng);
        auto w = rand_d({a.dim(0), b.dim(1)}, rng, 0.8, false);
        return verify::check_gradients(
            {a, b}, [&] { return core::sum_all(core::mul(core::matmul(a, b), w)); });
    });
    run_op("bmm_nn", [&] {
        const std::int64_t bs = 1 + rng.below(3), m = 1 + rng.below(3),
                           k = 1 + rng.below(3), n = 1 + rng.below(3);
        auto a = rand_d({bs, m, k}, rng);
        auto b = rand_d({bs, k, n}, rng);
        auto w = rand_d({bs, m, n}, rng, 0.8, false);
        return verify::check_gradients(
            {a, b}, [&] { return core::sum_all(core::mul(core::bmm_nn(a, b), w)); });
    });
    run_op("bmm_nt", [&] {
        const std::int64_t bs = 1 + rng.below(3), m = 1 + rng.below(3),
                           k = 1 + rng.below(3), n = 1 + rng.below(3);
        auto a = rand_d({bs, m, k}, rng);
        auto b = rand_d({bs, n, k}, rng);
        auto w = rand_d({bs, m, n}, rng, 0.8, false);
        return verify::check_gradients(
            {a, b}, [&] { return core::sum_all(core::mul(core::bmm_nt(a, b), w)); });
    });
    run_op("linear", [&] {
        auto x = rand_d({1 + std::int64_t(rng.below(4)), 1 + std::int64_t(rng.below(5))}, rng);
        auto w = rand_d({x.dim(1), 1 + std::int64_t(rng.below(4))}, rng);
        auto b = rand_d({w.dim(1)}, rng, 0.4);
        auto cw = rand_d({x.dim(0), w.dim(1)}, rng, 0.8, false);
        return verify::check_gradients({x, w, b}, [&] {
            return core::sum_all(core::mul(core::linear(x, w, b), cw));
        });
    });
    run_op("softmax", [&] {
        const int axis = static_cast<int>(rng.below(3));
        auto x = rand_d({2 + std::int64_t(rng.below(2)), 2 + std::int64_t(rng.below(3)),
                         2 + std::int64_t(rng.below(3))},
                        rng, 1.5);
        auto w = rand_d(x.shape(), rng, 0.8, false);
        return verify::check_gradients(
            {x}, [&] { return core::sum_all(core::mul(core::softmax(x, axis), w)); });
    });
    run_op("layer_norm", [&] {
        auto x = rand_d({1 + std::int64_t(rng.below(4)), 2 + std::int64_t(rng.below(6))}, rng,
                        1.5);
        auto g = rand_d({x.dim(1)}, rng, 0.4);
        for (auto& v : g.mutable_data()) v += 1.0;
        auto b = rand_d({x.dim(1)}, rng, 0.4);
        auto w = rand_d(x.shape(), rng, 0.8, false);
        return verify::check_gradients({x, g, b}, [&] {
            return core::sum_all(core::mul(core::layer_norm(x, g, b), w));
        });
    });
    run_op("channel_norm", [&] {
        auto x = rand_d({1 + std::int64_t(rng.below(2)), 3 + std::int64_t(rng.below(5)),
                         1 + std::int64_t(rng.below(4))},
                        rng, 1.2);
        auto g = rand_d({x.dim(2)}, rng, 0.4);
        for (auto& v : g.mutable_data()) v += 1.0;
        auto b = rand_d({x.dim(2)}, rng, 0.4);
        auto w = rand_d(x.shape(), rng, 0.8, false);
        return verify::check_gradients({x, g, b}, [&] {
            return core::sum_all(core::mul(core::channel_norm(x, g, b), w));
        });
    });
    run_op("gelu", [&] {
        auto x = rand_d({3, 1 + std::int64_t(rng.below(8))}, rng, 2.0);
        auto w = rand_d(x.shape(), rng, 0.8, false);
        return verify::check_gradients(
            {x}, [&] { return core::sum_all(core::mul(core::gelu(x), w)); });
    });
    run_op("relu", [&] {
        auto x = rand_d({3, 1 + std::int64_t(rng.below(8))}, rng, 2.0);
        for (auto& v : x.mutable_data())
            if (std::fabs(v) < 0.05) v += 0.1;  // stay off the kink
        auto w = rand_d(x.shape(), rng, 0.8, false);
        return verify::check_gradients(
            {x}, [&] { return core::sum_all(core::mul(core::relu(x), w)); });
    });
    run_op("sigmoid", [&] {
        auto x = rand_d({3, 1 + std::int64_t(rng.below(8))}, rng, 2.0);
        auto w = rand_d(x.shape(), rng, 0.8, false);
        return verify::check_gradients(
            {x}, [&] { return core::sum_all(core::mul(core::sigmoid(x), w)); });
    });
    run_op("conv2d", [&] {
        const std::int64_t stride = 1 + rng.below(2);
        auto x = rand_d({1 + std::int64_t(rng.below(2)), 4, 4, 1 + std::int64_t(rng.below(2))},
                        rng);
        auto w = rand_d({3, 3, x.dim(3), 1 + std::int64_t(rng.below(2))}, rng, 0.5);
        auto b = rand_d({w.dim(3)}, rng, 0.3);
        auto y_shape = [&] {
            core::NoGradGuard ng;
            return core::conv2d(x, w, b, stride, 1).shape();
        }();
        auto cw = rand_d(y_shape, rng, 0.8, false);
        return verify::check_gradients({x, w, b}, [&] {
            return core::sum_all(core::mul(core::conv2d(x, w, b, stride, 1), cw));
        });
    });
    run_op("gather_rows", [&] {
        auto x = rand_d({4, 3}, rng);
        std::vector<std::int64_t> idx;
        for (int i = 0; i < 6; ++i)
            idx.push_back(rng.below(5) == 0 ? -1 : std::int64_t(rng.below(4)));
        auto w = rand_d({6, 3}, rng, 0.8, false);
        return verify::check_gradients({x}, [&] {
            return core::sum_all(core::mul(core::gather_rows(x, idx, 3, {6, 3}), w));
        });
    });
    run_op("reshape+mean_middle", [&] {
        auto x = rand_d({2, 1 + std::int64_t(rng.below(5)), 3}, rng);
        auto w = rand_d({2, 3}, rng, 0.8, false);
        return verify::check_gradients({x}, [&] {
            auto r = core::reshape(x, x.shape());
            return core::sum_all(core::mul(core::mean_middle(r), w));
        });
    });
    run_op("weighted_bce", [&] {
        auto s = Tensor<double>::zeros({5}, true);
        for (auto& v : s.mutable_data()) v = rng.uniform(0.1, 0.9);
        std::vector<double> t, w;
        for (int i = 0; i < 5; ++i) {
            t.push_back(rng.below(2) ? 1.0 : 0.0);
            w.push_back(rng.below(2) ? 10.0 : 1.0);
        }
        return verify::check_gradients({s},
                                        [&] { return core::weighted_bce(s, t, w); });
    });
    run_op("window_attention", [&] {
        const std::int64_t d = 4 + 2 * std::int64_t(rng.below(2)), heads = 2, m = 2;
        auto p = testoracles::random_attention_params<double>(d, heads, m, rng);
        for (auto* t : {&p.q_w, &p.q_b, &p.k_w, &p.k_b, &p.v_w, &p.v_b, &p.proj_w,
                        &p.proj_b, &p.rel_table})
            t->set_requires_grad(true);
        auto x = rand_d({2, m * m, d}, rng);
        auto mask = Tensor<double>::zeros({2, m * m, m * m});
        mask.mutable_data()[2] = -1e9;
        auto w = rand_d({2, m * m, d}, rng, 0.8, false);
        return verify::check_gradients({x, p.q_w, p.k_w, p.v_b, p.proj_w, p.rel_table},
                                        [&] {
                                            return core::sum_all(core::mul(
                                                swin::window_attention(x, p, heads, mask),
                                                w));
                                        });
    });
    run_op("patch_embed", [&] {
        auto img = rand_d({1, 8, 8, 3}, rng, 0.5);
        auto w = rand_d({48, 4}, rng, 0.4);
        auto b = rand_d({4}, rng, 0.2);
        auto cw = rand_d({1, 2, 2, 4}, rng, 0.8, false);
        return verify::check_gradients({img, w, b}, [&] {
            return core::sum_all(core::mul(swin::patch_embed(img, w, b), cw));
        });
    });
    run_op("patch_merge", [&] {
        const std::int64_t d = 2 + std::int64_t(rng.below(3));
        auto t = rand_d({1, 4, 4, d}, rng);
        swin::MergeParams<double> mp;
        mp.norm_g = rand_d({4 * d}, rng, 0.3);
        for (auto& v : mp.norm_g.mutable_data()) v += 1.0;
        mp.norm_b = rand_d({4 * d}, rng, 0.3);
        mp.w = rand_d({4 * d, 2 * d}, rng, 0.4);
        auto cw = rand_d({1, 2, 2, 2 * d}, rng, 0.8, false);
        return verify::check_gradients({t, mp.norm_g, mp.norm_b, mp.w}, [&] {
            return core::sum_all(core::mul(swin::patch_merge(t, mp), cw));
        });
    });

    // The full pair at toy dimensions, every leaf checked.
    {
        double worst = 0.0;
        std::int64_t checked = 0;
        for (int i = 0; i < kInstances; ++i) {
            const std::int64_t d = 8, heads = 2, m = 2;
            const auto rand_block = [&] {
                swin::BlockParams<double> b;
                b.norm1_g = rand_d({d}, rng, 0.3);
                for (auto& v : b.norm1_g.mutable_data()) v += 1.0;
                b.norm1_b = rand_d({d}, rng, 0.2);
                b.attn = testoracles::random_attention_params<double>(d, heads, m, rng);
                for (auto* t : {&b.attn.q_w, &b.attn.q_b, &b.attn.k_w, &b.attn.k_b,
                                &b.attn.v_w, &b.attn.v_b, &b.attn.proj_w, &b.attn.proj_b,
                                &b.attn.rel_table})
                    t->set_requires_grad(true);
                b.norm2_g = rand_d({d}, rng, 0.3);
                for (auto& v : b.norm2_g.mutable_data()) v += 1.0;
                b.norm2_b = rand_d({d}, rng, 0.2);
                b.mlp_w1 = rand_d({d, 4 * d}, rng, 0.3);
                b.mlp_b1 = rand_d({4 * d}, rng, 0.2);
                b.mlp_w2 = rand_d({4 * d, d}, rng, 0.3);
                b.mlp_b2 = rand_d({d}, rng, 0.2);
                return b;
            };
            swin::PairParams<double> pp;
            pp.wmsa = rand_block();
            pp.swmsa = rand_block();
            auto x = rand_d({1, 4, 4, d}, rng, 0.7);
            auto cw = rand_d({1, 4, 4, d}, rng, 0.8, false);
            std::vector<Tensor<double>> leaves{x};
            for (const auto* blk : {&pp.wmsa, &pp.swmsa})
                for (const auto& t :
                     {blk->norm1_g, blk->norm1_b, blk->attn.q_w, blk->attn.q_b,
                      blk->attn.k_w, blk->attn.k_b, blk->attn.v_w, blk->attn.v_b,
                      blk->attn.proj_w, blk->attn.proj_b, blk->attn.rel_table,
                      blk->norm2_g, blk->norm2_b, blk->mlp_w1, blk->mlp_b1, blk->mlp_w2,
                      blk->mlp_b2})
                    leaves.push_back(t);
            const auto rep = verify::check_gradients(leaves, [&] {
                return core::sum_all(core::mul(swin::swin_pair(x, pp, heads, m), cw));
            });
            worst = std::max(worst, rep.max_rel_err);
            checked += rep.checked;
        }
        worst_overall = std::max(worst_overall, worst);
        c.require(worst < kTol && checked > 30000,
                  "swin pair rel err " + std::to_string(worst));
    }

    std::cout << "criterion 2 (gradient suite, h=1e-5, 64-bit): "
              << (c.pass ? "PASS" : "FAIL") << " -- max rel err " << worst_overall
              << " over all ops x " << kInstances << " instances"
              << (c.pass ? "" : " [" + c.detail.str() + "]") << "\n";
    return c.pass;
}

// ---- criterion 3: shifted-window oracle ------------------------------------

bool criterion3() {
    Criterion c;
    Rng rng(9300);
    const struct {
        std::int64_t h, w, m;
    } geoms[] = {{4, 4, 2}, {6, 6, 2}, {6, 9, 3}, {8, 8, 2}, {10, 10, 5}, {14, 14, 7}};
    double worst_val = 0.0, worst_mass = 0.0;
    int instances = 0;
    while (instances < 50) {
        const auto& g = geoms[instances % (sizeof(geoms) / sizeof(geoms[0]))];
        const std::int64_t d = 4 * (1 + std::int64_t(rng.below(3)));
        const std::int64_t heads_opts[] = {1, 2, 4};
        const std::int64_t heads = heads_opts[rng.below(3)];
        auto p = testoracles::random_attention_params<float>(d, heads, g.m, rng);
        auto x = Tensor<float>::zeros({1, g.h, g.w, d});
        for (auto& v : x.mutable_data()) v = static_cast<float>(rng.uniform(-0.8, 0.8));

        Tensor<float> probs;
        core::NoGradGuard ng;
        auto y = swin::shifted_window_attention(x, p, heads, g.m, &probs);
        std::vector<double> xd(x.data().begin(), x.data().end());
        const auto want = testoracles::brute_shifted_window_attention(xd, g.h, g.w, d,
                                                                      heads, g.m, p);
        for (std::int64_t i = 0; i < y.numel(); ++i)
            worst_val = std::max(worst_val,
                                 std::fabs(double(y.data()[static_cast<std::size_t>(i)]) -
                                           want[static_cast<std::size_t>(i)]));

        const std::int64_t t = g.m * g.m, nww = g.w / g.m;
        const std::int64_t s = g.m / 2;
        for (std::int64_t wi = 0; wi < (g.h / g.m) * nww; ++wi)
            for (std::int64_t hh = 0; hh < heads; ++hh) {
                const float* pw = probs.data().data() + (wi * heads + hh) * t * t;
                for (std::int64_t i = 0; i < t; ++i)
                    for (std::int64_t j = 0; j < t; ++j)
                        if (!testoracles::brute_same_region(wi / nww, wi % nww, i, j, g.h,
                                                            g.w, g.m, s))
                            worst_mass = std::max(worst_mass, double(pw[i * t + j]));
            }
        ++instances;
    }
    c.require(worst_val < 1e-5, "oracle deviation " + std::to_string(worst_val));
    c.require(worst_mass < 1e-8, "cross-region mass " + std::to_string(worst_mass));
    std::cout << "criterion 3 (shifted-window oracle, " << instances
              << " instances): " << (c.pass ? "PASS" : "FAIL") << " -- max deviation "
              << worst_val << ", max cross-region mass " << worst_mass
              << (c.pass ? "" : " [" + c.detail.str() + "]") << "\n";
    return c.pass;
}

// ---- criterion 4: shape ladder ---------------------------------------------

bool criterion4() {
    Criterion c;
    swin::SwinModel<float> tiny(swin::SwinConfig::tiny(), 4242);
    Rng rng(9400);
    auto img = Tensor<float>::zeros({1, 224, 224, 3});
    for (auto& v : img.mutable_data()) v = static_cast<float>(rng.uniform(0, 1));
    std::vector<Tensor<float>> stages;
    core::NoGradGuard ng;
    auto score = tiny.forward(img, &stages);
    const Shape want[4] = {{1, 56, 56, 96}, {1, 28, 28, 192}, {1, 14, 14, 384},
                           {1, 7, 7, 768}};
    std::ostringstream got;
    c.require(stages.size() == 4, "expected 4 stages");
    for (std::size_t i = 0; i < stages.size(); ++i) {
        got << shape_str(stages[i].shape()) << (i + 1 < stages.size() ? " " : "");
        c.require(stages[i].shape() == want[i], "stage " + std::to_string(i) + " shape");
    }
    c.require(score.data()[0] > 0.0f && score.data()[0] < 1.0f, "score not in (0,1)");
    std::cout << "criterion 4 (shape ladder): " << (c.pass ? "PASS" : "FAIL") << " -- "
              << got.str() << (c.pass ? "" : " [" + c.detail.str() + "]") << "\n";
    return c.pass;
}

// ---- criterion 5: data-pipeline conformance ---------------------------------

bool criterion5() {
    Criterion c;
    const auto dir = scratch_dir("criterion5");
    Rng rng(9500);

    // synthetic images with the stated minimum sides
    std::vector<data::PaintingRecord> manifest;
    const std::int64_t sides[3][2] = {{400, 450}, {600, 800}, {1200, 1200}};
    const int want_patches[3] = {1, 5, 17};
    for (int i = 0; i < 3; ++i) {
        const auto img = harness::synth_texture_painting(sides[i][0], sides[i][1], i % 2,
                                                         rng.next_u64(), 0.05);
        const std::string file = "img" + std::to_string(i) + ".png";
        data::write_png((fs::path(dir) / file).string(), data::to_u8(img));
        manifest.push_back({"p" + std::to_string(i), file,
                            i % 2 ? data::Label::authentic : data::Label::imitation, ""});
    }
    const auto cache = dir + "/cache";
    const auto stats = data::build_patch_cache(manifest, dir, cache, false);
    c.require(stats.failures.empty(), "ingestion failures");
    const auto index = data::read_cache_index(cache);
    c.require(index.size() == 3, "painting count");
    for (std::size_t i = 0; i < index.size(); ++i) {
        c.require(static_cast<int>(index[i].patches.size()) == want_patches[i],
                  index[i].id + " has " + std::to_string(index[i].patches.size()) +
                      " patches, want " + std::to_string(want_patches[i]));
        for (const auto& ref : index[i].patches) {
            const auto img = data::load_patch(cache, ref, 256);
            c.require(img.h == 256 && img.w == 256, "patch not 256x256");
            for (auto v : img.rgb)
                if (v < 0.0f || v > 1.0f) {
                    c.require(false, "pixel outside [0,1]");
                    break;
                }
        }
    }

    // painting integrity over 20 random plans on a synthetic record set
    std::vector<data::PaintingRecord> records;
    for (int i = 0; i < 24; ++i)
        records.push_back({"a" + std::to_string(i), "", data::Label::authentic, ""});
    for (int i = 0; i < 24; ++i)
        records.push_back({"i" + std::to_string(i), "",
                           i % 2 ? data::Label::imitation : data::Label::proxy, ""});
    data::PlanTargets targets;
    targets.authentic = {10, 4, 6};
    targets.contrast = {10, 4, 6};
    for (int seed = 0; seed < 20; ++seed) {
        const auto plan =
            data::build_plan(records, data::ContrastMode::standard, targets, 2, seed);
        for (const auto& split : plan.splits) {
            // every painting carries exactly one partition, and following the
            // assignment at patch granularity keeps all patches together
            std::map<std::string, data::Part> seen;
            for (const auto& [id, part] : split.assignment) {
                const auto [it, fresh] = seen.emplace(id, part);
                c.require(fresh || it->second == part, "painting split across partitions");
            }
        }
    }
    std::cout << "criterion 5 (data pipeline): " << (c.pass ? "PASS" : "FAIL")
              << " -- sub-image counts {1,5,17}, 256x256 in [0,1], painting integrity "
                 "over 20 plans"
              << (c.pass ? "" : " [" + c.detail.str() + "]") << "\n";
    return c.pass;
}

// ---- criterion 6: end-to-end learning sanity --------------------------------

harness::ArchSpec toy_swin_spec() {
    auto spec = harness::ArchSpec::preset("swin-toy");
    return spec;  // C=24, pairs [1,1,2,1], M=7, input 56
}

harness::ArchSpec toy_baseline_spec() {
    auto spec = harness::ArchSpec::preset("baseline");
    spec.cnn_cfg.input_h = spec.cnn_cfg.input_w = 56;
    return spec;
}

bool criterion6() {
    Criterion c;
    const auto dir = scratch_dir("criterion6");
    harness::SyntheticSpec sspec;
    sspec.paintings_per_class = 25;
    sspec.seed = 96001;
    const auto manifest_path = harness::generate_texture_corpus(dir + "/corpus", sspec);
    const auto manifest = data::read_manifest(manifest_path);
    const auto cache = dir + "/cache";
    data::build_patch_cache(manifest, dir + "/corpus", cache, false);
    const auto index = data::read_cache_index(cache);

    data::PlanTargets targets;
    targets.authentic = {12, 5, 8};
    targets.contrast = {12, 5, 8};
    const auto plan = data::build_plan(manifest, data::ContrastMode::refined, targets, 3,
                                       96002);

    // The toy Swin sits on a chance-level plateau for a few epochs before the
    // orientation feature forms; patience must outlast it. 3e-4 escapes the
    // plateau reliably where 1e-3 is marginal and 3e-3 never leaves it.
    harness::TrainRunConfig base_cfg;
    base_cfg.batch_size = 32;
    base_cfg.learning_rate = 3e-4;
    base_cfg.patience = 10;
    base_cfg.min_delta = 0.001;
    base_cfg.max_epochs = 35;
    base_cfg.weight_mode = data::ContrastMode::refined;

    const auto run_variant = [&](const harness::ArchSpec& spec, bool shuffle_labels)
        -> std::vector<double> {
        std::vector<double> accs;
        for (std::size_t e = 0; e < plan.splits.size(); ++e) {
            const auto& split = plan.splits[e];
            auto local_index = index;
            if (shuffle_labels) {
                // permute labels among train+val paintings; test stays true
                std::vector<std::size_t> pos;
                std::vector<data::Label> labels;
                for (std::size_t i = 0; i < local_index.size(); ++i) {
                    const auto part = split.part_of(local_index[i].id);
                    if (part == data::Part::train || part == data::Part::val) {
                        pos.push_back(i);
                        labels.push_back(local_index[i].label);
                    }
                }
                Rng shuffle_rng(777 + e);
                shuffle_rng.shuffle(labels.begin(), labels.end());
                for (std::size_t k = 0; k < pos.size(); ++k)
                    local_index[pos[k]].label = labels[k];
            }
            const std::uint64_t rseed = harness::run_seed(split.seed, spec.name);
            auto model = harness::make_classifier(spec, core::Rng::derive(rseed, 0));
            auto train = harness::load_samples(cache, local_index, split,
                                               data::Part::train, plan.mode,
                                               model->input_size());
            auto val = harness::load_samples(cache, local_index, split, data::Part::val,
                                             plan.mode, model->input_size());
            auto test = harness::load_samples(cache, local_index, split, data::Part::test,
                                              plan.mode, model->input_size());
            auto cfg = base_cfg;
            cfg.arch = spec.name;
            cfg.seed = core::Rng::derive(rseed, 1);
            harness::train_one(*model, train, val, cfg);
            const auto preds = harness::predict(*model, test, cfg.batch_size);
            const auto m = harness::compute_metrics(preds);
            accs.push_back(m.painting_acc);
            std::cerr << "  [criterion 6] " << spec.name
                      << (shuffle_labels ? " (shuffled)" : "") << " exp " << e
                      << ": painting acc " << m.painting_acc << "\n";
        }
        return accs;
    };

    std::ostringstream summary;
    for (const auto& spec : {toy_swin_spec(), toy_baseline_spec()}) {
        const auto accs = run_variant(spec, false);
        double mean = 0;
        for (auto a : accs) mean += a;
        mean /= accs.size();
        summary << spec.name << " " << mean << " ";
        c.require(mean >= 0.95,
                  spec.name + " mean painting accuracy " + std::to_string(mean));

        const auto shuffled = run_variant(spec, true);
        double smean = 0;
        for (auto a : shuffled) smean += a;
        smean /= shuffled.size();
        summary << "(shuffled " << smean << ") ";
        c.require(smean >= 0.4 && smean <= 0.6,
                  spec.name + " shuffled accuracy " + std::to_string(smean));
    }
    std::cout << "criterion 6 (learning sanity, N=3): " << (c.pass ? "PASS" : "FAIL")
              << " -- " << summary.str() << (c.pass ? "" : " [" + c.detail.str() + "]")
              << "\n";
    return c.pass;
}

// ---- criteria 7/8 share a micro-campaign ------------------------------------

struct MicroCampaign {
    harness::CampaignConfig cfg;
    data::ExperimentPlan plan;
    std::vector<data::CachedPainting> index;
    harness::CampaignResult result;
};

MicroCampaign run_micro_campaign(const std::string& dir) {
    MicroCampaign mc;
    harness::SyntheticSpec sspec;
    sspec.paintings_per_class = 8;
    sspec.sizes = {{96, 96}};
    sspec.seed = 97001;
    const auto manifest_path = harness::generate_texture_corpus(dir + "/corpus", sspec);
    const auto manifest = data::read_manifest(manifest_path);
    const auto cache = dir + "/cache";
    data::build_patch_cache(manifest, dir + "/corpus", cache, false);
    mc.index = data::read_cache_index(cache);

    data::PlanTargets targets;
    targets.authentic = {4, 2, 2};
    targets.contrast = {4, 2, 2};
    mc.plan = data::build_plan(manifest, data::ContrastMode::refined, targets, 2, 97002);

    mc.cfg.cache_dir = cache;
    mc.cfg.out_dir = dir + "/out";
    mc.cfg.mode = data::ContrastMode::refined;
    mc.cfg.master_seed = mc.plan.master_seed;
    mc.cfg.histogram_bins = 20;
    mc.cfg.train.batch_size = 8;
    mc.cfg.train.max_epochs = 3;
    mc.cfg.train.patience = 5;
    {
        harness::ArchSpec a;
        a.name = "cnn-a";
        a.kind = harness::ArchSpec::Kind::baseline;
        a.cnn_cfg.input_h = a.cnn_cfg.input_w = 24;
        a.cnn_cfg.widths = {4};
        a.cnn_cfg.blocks = {1};
        mc.cfg.archs.push_back(a);
        a.name = "cnn-b";
        a.cnn_cfg.widths = {6};
        mc.cfg.archs.push_back(a);
    }
    mc.result = harness::run_campaign(mc.cfg, mc.plan, mc.index);
    return mc;
}

bool criterion7() {
    Criterion c;
    Rng rng(9700);

    // overlap cells always sum to 100 +- 0.1
    for (int iter = 0; iter < 200; ++iter) {
        const std::size_t n = 1 + rng.below(500);
        std::vector<bool> a(n), b(n);
        for (std::size_t i = 0; i < n; ++i) {
            a[i] = rng.below(2);
            b[i] = rng.below(2);
        }
        const auto cells = harness::confusion_overlap(a, b);
        const double total = cells.both_correct + cells.a_only + cells.b_only + cells.neither;
        if (std::fabs(total - 100.0) > 0.1) c.require(false, "overlap sum " + std::to_string(total));
    }

    // weighted loss with unit weights equals unweighted BCE to 1e-7
    {
        auto s = Tensor<float>::zeros({48});
        std::vector<float> t, w;
        for (std::int64_t i = 0; i < 48; ++i) {
            s.mutable_data()[static_cast<std::size_t>(i)] =
                static_cast<float>(rng.uniform(0.02, 0.98));
            t.push_back(rng.below(2) ? 1.0f : 0.0f);
            w.push_back(1.0f);
        }
        const double weighted = core::weighted_bce(s, t, w).item();
        double plain = 0.0;
        for (std::int64_t i = 0; i < 48; ++i) {
            const double si = s.data()[static_cast<std::size_t>(i)];
            plain -= t[static_cast<std::size_t>(i)] * std::log(si) +
                     (1.0 - t[static_cast<std::size_t>(i)]) * std::log(1.0 - si);
        }
        plain /= 48.0;
        c.require(std::fabs(weighted - plain) < 1e-7,
                  "weighted/unweighted gap " + std::to_string(weighted - plain));
    }

    // painting accuracy recomputed from the predictions files; byte-identical
    // rerun of the whole campaign
    const auto mc = run_micro_campaign(scratch_dir("criterion7a"));
    for (const auto& rec : mc.result.runs) {
        c.require(rec.ok, "run failed: " + rec.error);
        const auto dir = fs::path(mc.cfg.out_dir) / "runs" /
                         ("exp" + std::to_string(rec.experiment) + "_" + rec.arch);
        std::ifstream ps(dir / "predictions.csv");
        c.require(ps.good(), "missing predictions file");
        std::string line;
        std::getline(ps, line);
        std::map<std::string, std::pair<double, int>> sums;
        std::map<std::string, bool> truth;
        while (std::getline(ps, line)) {
            if (line.empty()) continue;
            std::stringstream ls(line);
            std::string id, idx, label, score;
            std::getline(ls, id, ',');
            std::getline(ls, idx, ',');
            std::getline(ls, label, ',');
            std::getline(ls, score, ',');
            const auto trim = [](std::string v) {
                const auto b = v.find_first_not_of(' ');
                return v.substr(b, v.find_last_not_of(" \r") - b + 1);
            };
            sums[trim(id)].first += std::stod(score);
            sums[trim(id)].second += 1;
            truth[trim(id)] = trim(label) == "authentic";
        }
        std::int64_t ok = 0;
        for (const auto& [id, sc] : sums) {
            const bool decided = sc.first / sc.second >= 0.5;
            ok += decided == truth[id] ? 1 : 0;
        }
        const double from_file = double(ok) / double(sums.size());
        const double from_harness = harness::compute_metrics(rec.test_preds).painting_acc;
        c.require(std::fabs(from_file - from_harness) < 1e-9,
                  "painting accuracy mismatch " + std::to_string(from_file) + " vs " +
                      std::to_string(from_harness));
    }
    {
        auto cfg2 = mc.cfg;
        cfg2.out_dir = scratch_dir("criterion7b") + "/out";
        harness::run_campaign(cfg2, mc.plan, mc.index);
        for (const char* rel :
             {"reports/table_overall.csv", "reports/table_perclass.csv",
              "reports/table_precision_recall.csv", "reports/report.txt",
              "runs/exp0_cnn-a/predictions.csv", "runs/exp1_cnn-b/log.csv"}) {
            c.require(slurp(fs::path(mc.cfg.out_dir) / rel) ==
                          slurp(fs::path(cfg2.out_dir) / rel),
                      std::string("rerun differs: ") + rel);
        }
    }
    std::cout << "criterion 7 (harness identities): " << (c.pass ? "PASS" : "FAIL")
              << " -- overlap sums, predictions-file recomputation, w=1 reduction, "
                 "byte-identical rerun"
              << (c.pass ? "" : " [" + c.detail.str() + "]") << "\n";
    return c.pass;
}

bool criterion8() {
    Criterion c;
    const auto mc = run_micro_campaign(scratch_dir("criterion8"));
    const fs::path rep = fs::path(mc.cfg.out_dir) / "reports";

    const auto overall = slurp(rep / "table_overall.csv");
    c.require(overall.rfind("architecture, parameters, patch_accuracy_mean, "
                            "patch_accuracy_sd, painting_accuracy_mean, "
                            "painting_accuracy_sd\n",
                            0) == 0,
              "table_overall header");
    c.require(overall.find("cnn-a") != std::string::npos, "table_overall rows");

    const auto perclass = slurp(rep / "table_perclass.csv");
    for (const char* col : {"acc_authentic_mean", "acc_contrast_mean",
                            "acc_imitations_mean", "acc_proxies_mean"})
        c.require(perclass.find(col) != std::string::npos,
                  std::string("perclass column ") + col);

    const auto pr = slurp(rep / "table_precision_recall.csv");
    for (const char* col : {"painting_accuracy_mean", "precision_mean", "recall_mean"})
        c.require(pr.find(col) != std::string::npos, std::string("pr column ") + col);

    const auto overlap = slurp(rep / "table_overlap_cnn-a_vs_cnn-b.csv");
    c.require(overlap.find("cnn-b_correct") != std::string::npos, "overlap columns");
    {
        // the four cells parse and sum to 100 +- 0.1
        std::stringstream ss(overlap);
        std::string line;
        std::getline(ss, line);
        double total = 0.0;
        int cells = 0;
        while (std::getline(ss, line)) {
            std::stringstream ls(line);
            std::string field;
            std::getline(ls, field, ',');
            while (std::getline(ls, field, ',')) {
                total += std::stod(field);
                ++cells;
            }
        }
        c.require(cells == 4, "overlap cell count " + std::to_string(cells));
        c.require(std::fabs(total - 100.0) <= 0.1, "overlap total " + std::to_string(total));
    }

    const auto hist = slurp(rep / "histograms_cnn-a.csv");
    c.require(hist.rfind("bin_low, bin_high, correct, incorrect\n", 0) == 0,
              "histogram header");
    c.require(fs::exists(rep / "histograms_cnn-a.svg"), "histogram svg");
    const auto txt = slurp(rep / "report.txt");
    c.require(txt.find("per-class painting accuracies") != std::string::npos,
              "report.txt sections");
    c.require(txt.find("precision") != std::string::npos, "report.txt precision block");

    std::cout << "criterion 8 (report fidelity): " << (c.pass ? "PASS" : "FAIL")
              << " -- overall/per-class/precision-recall/overlap/histogram layouts"
              << (c.pass ? "" : " [" + c.detail.str() + "]") << "\n";
    return c.pass;
}

}  // namespace

int main(int argc, char** argv) {
    int only = 0;
    for (int i = 1; i + 1 < argc; ++i) {
        if (std::strcmp(argv[i], "--criterion") == 0) only = std::atoi(argv[i + 1]);
    }
    bool (*criteria[])() = {criterion1, criterion2, criterion3, criterion4,
                            criterion5, criterion6, criterion7, criterion8};
    bool all_pass = true;
    for (int i = 1; i <= 8; ++i) {
        if (only != 0 && only != i) continue;
        all_pass = criteria[i - 1]() && all_pass;
    }
    return all_pass ? 0 : 1;
}
