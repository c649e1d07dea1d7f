#include "artauth/harness/selfcheck.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <sstream>

#include "artauth/core/ops.hpp"
#include "artauth/core/rng.hpp"
#include "artauth/core/serialize.hpp"
#include "artauth/data/patches.hpp"
#include "artauth/data/plan.hpp"
#include "artauth/data/resample.hpp"
#include "artauth/harness/synthetic.hpp"
#include "artauth/models/baseline.hpp"
#include "artauth/models/swin.hpp"
#include "artauth/testing/gradcheck.hpp"

namespace artauth::harness {

namespace {

using core::Tensor;

template <typename T>
Tensor<T> random_tensor(Shape shape, core::Rng& rng, double scale = 0.5,
                        bool requires_grad = false) {
    auto t = Tensor<T>::zeros(std::move(shape), requires_grad);
    for (auto& v : t.mutable_data()) v = static_cast<T>(rng.uniform(-scale, scale));
    return t;
}

swin::AttentionParams<double> random_attention(std::int64_t d, std::int64_t heads,
                                               std::int64_t m, core::Rng& rng) {
    swin::AttentionParams<double> p;
    p.q_w = random_tensor<double>({d, d}, rng, 0.4, true);
    p.q_b = random_tensor<double>({d}, rng, 0.2, true);
    p.k_w = random_tensor<double>({d, d}, rng, 0.4, true);
    p.k_b = random_tensor<double>({d}, rng, 0.2, true);
    p.v_w = random_tensor<double>({d, d}, rng, 0.4, true);
    p.v_b = random_tensor<double>({d}, rng, 0.2, true);
    p.proj_w = random_tensor<double>({d, d}, rng, 0.4, true);
    p.proj_b = random_tensor<double>({d}, rng, 0.2, true);
    p.rel_table = random_tensor<double>({(2 * m - 1) * (2 * m - 1), heads}, rng, 0.3, true);
    return p;
}

// Independent run criterion: two shifted-window tokens share a region iff
// neither their rows nor their columns straddle the wraparound of the cyclic
// shift within that window.
bool same_region(std::int64_t wy, std::int64_t wx, std::int64_t i, std::int64_t j,
                 std::int64_t h, std::int64_t w, std::int64_t m, std::int64_t s) {
    const auto row_run = [&](std::int64_t local) { return (wy * m + local + s) >= h; };
    const auto col_run = [&](std::int64_t local) { return (wx * m + local + s) >= w; };
    return row_run(i / m) == row_run(j / m) && col_run(i % m) == col_run(j % m);
}

// Dense per-window masked attention over the shifted tiling, scattered back
// to original coordinates. Plain loops, no reuse of the op library.
std::vector<double> dense_shifted_attention(const std::vector<double>& x, std::int64_t h,
                                            std::int64_t w, std::int64_t d,
                                            std::int64_t heads, std::int64_t m,
                                            const swin::AttentionParams<double>& p) {
    const std::int64_t s = m / 2;
    const std::int64_t dh = d / heads;
    const auto pair_idx = swin::rel_pos_pair_index(m);
    std::vector<double> out(x.size(), 0.0);
    const auto matvec = [&](const Tensor<double>& wt, const Tensor<double>& b,
                            const double* in, double* res) {
        const auto wd = wt.data();
        const auto bd = b.data();
        for (std::int64_t o = 0; o < d; ++o) {
            double acc = bd[static_cast<std::size_t>(o)];
            for (std::int64_t k = 0; k < d; ++k)
                acc += in[k] * wd[static_cast<std::size_t>(k * d + o)];
            res[o] = acc;
        }
    };
    for (std::int64_t wy = 0; wy < h / m; ++wy) {
        for (std::int64_t wx = 0; wx < w / m; ++wx) {
            const std::int64_t t = m * m;
            std::vector<std::int64_t> oy(t), ox(t);
            for (std::int64_t i = 0; i < t; ++i) {
                oy[i] = (wy * m + i / m + s) % h;
                ox[i] = (wx * m + i % m + s) % w;
            }
            std::vector<double> q(t * d), k(t * d), v(t * d);
            for (std::int64_t i = 0; i < t; ++i) {
                const double* xi = x.data() + (oy[i] * w + ox[i]) * d;
                matvec(p.q_w, p.q_b, xi, q.data() + i * d);
                matvec(p.k_w, p.k_b, xi, k.data() + i * d);
                matvec(p.v_w, p.v_b, xi, v.data() + i * d);
            }
            std::vector<double> ctx(t * d, 0.0);
            for (std::int64_t hh = 0; hh < heads; ++hh) {
                for (std::int64_t i = 0; i < t; ++i) {
                    std::vector<double> sc(t, -1e300);
                    double mx = -1e300;
                    for (std::int64_t j = 0; j < t; ++j) {
                        if (!same_region(wy, wx, i, j, h, w, m, s)) continue;
                        double dot = 0.0;
                        for (std::int64_t e = 0; e < dh; ++e)
                            dot += q[i * d + hh * dh + e] * k[j * d + hh * dh + e];
                        dot /= std::sqrt(static_cast<double>(dh));
                        dot += p.rel_table.data()[static_cast<std::size_t>(
                            (*pair_idx)[static_cast<std::size_t>(i * t + j)] * heads + hh)];
                        sc[j] = dot;
                        mx = std::max(mx, dot);
                    }
                    double denom = 0.0;
                    for (std::int64_t j = 0; j < t; ++j)
                        if (sc[j] > -1e299) denom += std::exp(sc[j] - mx);
                    for (std::int64_t j = 0; j < t; ++j) {
                        if (sc[j] <= -1e299) continue;
                        const double pr = std::exp(sc[j] - mx) / denom;
                        for (std::int64_t e = 0; e < dh; ++e)
                            ctx[i * d + hh * dh + e] += pr * v[j * d + hh * dh + e];
                    }
                }
            }
            for (std::int64_t i = 0; i < t; ++i) {
                double* dst = out.data() + (oy[i] * w + ox[i]) * d;
                const auto wd = p.proj_w.data();
                const auto bd = p.proj_b.data();
                for (std::int64_t o = 0; o < d; ++o) {
                    double acc = bd[static_cast<std::size_t>(o)];
                    for (std::int64_t e = 0; e < d; ++e)
                        acc += ctx[i * d + e] * wd[static_cast<std::size_t>(e * d + o)];
                    dst[o] = acc;
                }
            }
        }
    }
    return out;
}

std::string fmt_err(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2e", v);
    return buf;
}

}  // namespace

std::vector<CheckResult> run_selfchecks() {
    std::vector<CheckResult> results;
    const auto check = [&](const std::string& name, bool pass, std::string detail) {
        results.push_back({name, pass, std::move(detail)});
    };

    // Backend equivalence on the hot kernels.
    {
        core::Rng rng(11);
        if (!kernels::avx2_available()) {
            check("kernel backend equivalence", true, "no AVX2 on this host, scalar only");
        } else {
            const auto saved = kernels::backend();
            const std::int64_t m = 37, n = 53, k = 29;
            std::vector<float> a(m * k), b(k * n), c_s(m * n), c_v(m * n), e_s(977), e_v(977),
                x(977);
            for (auto& v : a) v = static_cast<float>(rng.uniform(-1, 1));
            for (auto& v : b) v = static_cast<float>(rng.uniform(-1, 1));
            for (auto& v : x) v = static_cast<float>(rng.uniform(-6, 6));
            kernels::select(kernels::Backend::scalar);
            kernels::active().gemm_nn(m, n, k, a.data(), b.data(), c_s.data(), false);
            kernels::active().vexp(static_cast<std::int64_t>(x.size()), x.data(), e_s.data());
            kernels::select(kernels::Backend::avx2);
            kernels::active().gemm_nn(m, n, k, a.data(), b.data(), c_v.data(), false);
            kernels::active().vexp(static_cast<std::int64_t>(x.size()), x.data(), e_v.data());
            kernels::select(saved);
            double worst = 0.0;
            for (std::size_t i = 0; i < c_s.size(); ++i)
                worst = std::max(worst, std::fabs(double(c_s[i]) - double(c_v[i])) /
                                            std::max(1.0, std::fabs(double(c_s[i]))));
            for (std::size_t i = 0; i < e_s.size(); ++i)
                worst = std::max(worst, std::fabs(double(e_s[i]) - double(e_v[i])) /
                                            std::max(1e-30, std::fabs(double(e_s[i]))));
            check("kernel backend equivalence", worst < 1e-5, "max rel " + fmt_err(worst));
        }
    }

    // Gradient spot checks at double precision.
    {
        core::Rng rng(22);
        auto a = random_tensor<double>({3, 4}, rng, 0.8, true);
        auto b = random_tensor<double>({4, 5}, rng, 0.8, true);
        auto cw = random_tensor<double>({3, 5}, rng, 0.8, false);
        auto rep = verify::check_gradients({a, b}, [&] {
            return core::sum_all(core::mul(core::matmul(a, b), cw));
        });
        check("gradient: matmul", rep.ok(1e-4), "max rel " + fmt_err(rep.max_rel_err));
    }
    {
        core::Rng rng(23);
        auto x = random_tensor<double>({4, 6}, rng, 1.5, true);
        auto g = random_tensor<double>({6}, rng, 0.5, true);
        auto bt = random_tensor<double>({6}, rng, 0.5, true);
        auto cw = random_tensor<double>({4, 6}, rng, 0.8, false);
        auto rep = verify::check_gradients({x, g, bt}, [&] {
            return core::sum_all(core::mul(core::layer_norm(x, g, bt), cw));
        });
        check("gradient: layer_norm", rep.ok(1e-4), "max rel " + fmt_err(rep.max_rel_err));
    }
    {
        core::Rng rng(24);
        auto x = random_tensor<double>({5, 7}, rng, 2.0, true);
        auto cw = random_tensor<double>({5, 7}, rng, 0.8, false);
        auto rep = verify::check_gradients(
            {x}, [&] { return core::sum_all(core::mul(core::gelu(x), cw)); });
        check("gradient: gelu", rep.ok(1e-4), "max rel " + fmt_err(rep.max_rel_err));
    }
    {
        core::Rng rng(25);
        auto x = random_tensor<double>({1, 4, 4, 2}, rng, 0.8, true);
        auto w = random_tensor<double>({3, 3, 2, 3}, rng, 0.6, true);
        auto b = random_tensor<double>({3}, rng, 0.3, true);
        auto cw = random_tensor<double>({1, 4, 4, 3}, rng, 0.8, false);
        auto rep = verify::check_gradients({x, w, b}, [&] {
            return core::sum_all(core::mul(core::conv2d(x, w, b, 1, 1), cw));
        });
        check("gradient: conv2d", rep.ok(1e-4), "max rel " + fmt_err(rep.max_rel_err));
    }
    {
        core::Rng rng(26);
        const std::int64_t d = 8, heads = 2, m = 2;
        swin::PairParams<double> pp;
        const auto rand_block = [&] {
            swin::BlockParams<double> b;
            b.norm1_g = random_tensor<double>({d}, rng, 0.3, true);
            b.norm1_b = random_tensor<double>({d}, rng, 0.2, true);
            for (auto& v : b.norm1_g.mutable_data()) v += 1.0;
            b.attn = random_attention(d, heads, m, rng);
            b.norm2_g = random_tensor<double>({d}, rng, 0.3, true);
            b.norm2_b = random_tensor<double>({d}, rng, 0.2, true);
            for (auto& v : b.norm2_g.mutable_data()) v += 1.0;
            b.mlp_w1 = random_tensor<double>({d, 4 * d}, rng, 0.3, true);
            b.mlp_b1 = random_tensor<double>({4 * d}, rng, 0.2, true);
            b.mlp_w2 = random_tensor<double>({4 * d, d}, rng, 0.3, true);
            b.mlp_b2 = random_tensor<double>({d}, rng, 0.2, true);
            return b;
        };
        pp.wmsa = rand_block();
        pp.swmsa = rand_block();
        auto x = random_tensor<double>({1, 4, 4, d}, rng, 0.8, true);
        auto cw = random_tensor<double>({1, 4, 4, d}, rng, 0.8, false);
        std::vector<Tensor<double>> leaves{x, pp.wmsa.attn.q_w, pp.wmsa.attn.v_b,
                                           pp.wmsa.mlp_w1, pp.swmsa.attn.k_w,
                                           pp.swmsa.attn.rel_table, pp.swmsa.norm1_g,
                                           pp.swmsa.mlp_b2};
        auto rep = verify::check_gradients(leaves, [&] {
            return core::sum_all(core::mul(swin::swin_pair(x, pp, heads, m), cw));
        });
        check("gradient: swin pair (toy)", rep.ok(1e-4),
              "max rel " + fmt_err(rep.max_rel_err));
    }

    // Round trips.
    {
        core::Rng rng(31);
        auto t = random_tensor<float>({2, 28, 28, 8}, rng, 1.0, false);
        auto win = swin::window_partition(t, 7);
        auto back = swin::window_reverse(win, 2, 28, 28, 7);
        double worst = 0.0;
        for (std::int64_t i = 0; i < t.numel(); ++i)
            worst = std::max(worst,
                             std::fabs(double(t.data()[static_cast<std::size_t>(i)]) -
                                       double(back.data()[static_cast<std::size_t>(i)])));
        check("window partition round trip", worst == 0.0, "max abs " + fmt_err(worst));
    }
    {
        core::Rng rng(32);
        auto t = random_tensor<float>({1, 14, 14, 4}, rng, 1.0, false);
        auto sh = core::gather_rows(t, swin::cyclic_shift_index(1, 14, 14, -3, -3), 4,
                                    t.shape());
        auto back = core::gather_rows(sh, swin::cyclic_shift_index(1, 14, 14, 3, 3), 4,
                                      t.shape());
        double worst = 0.0;
        for (std::int64_t i = 0; i < t.numel(); ++i)
            worst = std::max(worst,
                             std::fabs(double(t.data()[static_cast<std::size_t>(i)]) -
                                       double(back.data()[static_cast<std::size_t>(i)])));
        check("cyclic shift round trip", worst == 0.0, "max abs " + fmt_err(worst));
    }

    // Mask correctness and the oracle probe.
    {
        core::Rng rng(33);
        const std::int64_t h = 14, w = 14, d = 8, heads = 2, m = 7, s = 3;
        auto x = random_tensor<double>({1, h, w, d}, rng, 0.8, false);
        auto p = random_attention(d, heads, m, rng);
        Tensor<double> probs;
        auto y = swin::shifted_window_attention(x, p, heads, m, &probs);
        double cross_mass = 0.0;
        const std::int64_t t = m * m;
        const std::int64_t nw = (h / m) * (w / m);
        for (std::int64_t wi = 0; wi < nw; ++wi) {
            for (std::int64_t hh = 0; hh < heads; ++hh) {
                const double* pw = probs.data().data() + (wi * heads + hh) * t * t;
                for (std::int64_t i = 0; i < t; ++i)
                    for (std::int64_t j = 0; j < t; ++j)
                        if (!same_region(wi / (w / m), wi % (w / m), i, j, h, w, m, s))
                            cross_mass = std::max(cross_mass, pw[i * t + j]);
            }
        }
        check("shifted-window mask: cross-region attention", cross_mass < 1e-8,
              "max cross-region weight " + fmt_err(cross_mass));

        const auto oracle = dense_shifted_attention(
            {x.data().begin(), x.data().end()}, h, w, d, heads, m, p);
        double worst = 0.0;
        for (std::size_t i = 0; i < oracle.size(); ++i)
            worst = std::max(worst, std::fabs(oracle[i] - y.data()[i]));
        check("shifted-window oracle equivalence", worst < 1e-5,
              "max abs " + fmt_err(worst));
    }

    // Parameter counts and the shape ladder.
    {
        const auto tiny = swin::count_parameters(swin::SwinConfig::tiny());
        const bool ok = std::fabs(double(tiny) - 28e6) / 28e6 < 0.05;
        check("parameter count swin-tiny vs 28M +-5%", ok, std::to_string(tiny));
    }
    {
        const auto base = swin::count_parameters(swin::SwinConfig::base());
        const bool ok = std::fabs(double(base) - 88e6) / 88e6 < 0.05;
        check("parameter count swin-base vs 88M +-5%", ok, std::to_string(base));
    }
    {
        swin::SwinModel<float> tiny(swin::SwinConfig::tiny(), 7);
        auto img = Tensor<float>::zeros({1, 224, 224, 3});
        core::Rng rng(34);
        for (auto& v : img.mutable_data()) v = static_cast<float>(rng.uniform(0, 1));
        std::vector<Tensor<float>> stages;
        core::NoGradGuard ng;
        auto score = tiny.forward(img, &stages);
        const Shape want[4] = {{1, 56, 56, 96}, {1, 28, 28, 192}, {1, 14, 14, 384},
                               {1, 7, 7, 768}};
        bool ok = stages.size() == 4 && score.numel() == 1;
        std::ostringstream os;
        for (std::size_t i = 0; i < stages.size(); ++i) {
            ok = ok && stages[i].shape() == want[i];
            os << shape_str(stages[i].shape()) << " ";
        }
        const float sc = score.data()[0];
        ok = ok && sc > 0.0f && sc < 1.0f;
        check("shape ladder 224 -> 56/28/14/7", ok, os.str());
    }

    // Patch-grid geometry and resampling identities.
    {
        bool ok = true;
        std::ostringstream os;
        for (const auto& [side, want] :
             {std::pair<std::int64_t, int>{400, 1}, {600, 5}, {1200, 17}}) {
            data::ImageF img;
            img.h = side;
            img.w = side;
            img.rgb.assign(static_cast<std::size_t>(side * side * 3), 0.25f);
            const int p = data::grid_exponent(std::min(img.h, img.w));
            const auto patches = data::extract_patches(img, p);
            ok = ok && static_cast<int>(patches.size()) == want;
            for (const auto& pt : patches)
                ok = ok && pt.h == 256 && pt.w == 256;
            os << side << "->" << patches.size() << " ";
        }
        check("patch-grid rule {400,600,1200} -> {1,5,17}", ok, os.str());
    }
    {
        core::Rng rng(35);
        data::ImageF img;
        img.h = 24;
        img.w = 31;
        img.rgb.resize(static_cast<std::size_t>(img.h * img.w * 3));
        for (auto& v : img.rgb) v = static_cast<float>(rng.uniform(0, 1));
        const auto same = data::resample_bicubic(img, img.h, img.w);
        double worst = 0.0;
        for (std::size_t i = 0; i < img.rgb.size(); ++i)
            worst = std::max(worst, std::fabs(double(img.rgb[i]) - double(same.rgb[i])));
        data::ImageF constant;
        constant.h = 17;
        constant.w = 13;
        constant.rgb.assign(static_cast<std::size_t>(17 * 13 * 3), 0.375f);
        const auto scaled = data::resample_bicubic(constant, 7, 29);
        for (const auto v : scaled.rgb)
            worst = std::max(worst, std::fabs(double(v) - 0.375));
        check("bicubic identity and constant preservation", worst < 1e-6,
              "max abs " + fmt_err(worst));
    }

    // Weight container round trip.
    {
        namespace fs = std::filesystem;
        core::Rng rng(36);
        std::vector<core::NamedTensor> entries;
        entries.push_back({"a.w", {3, 4}, {}});
        entries.push_back({"b", {5}, {}});
        for (auto& e : entries)
            for (std::int64_t i = 0; i < shape_numel(e.shape); ++i)
                e.data.push_back(static_cast<float>(rng.uniform(-2, 2)));
        const auto path = fs::temp_directory_path() / "artauth_selfcheck_weights.bin";
        core::save_weights(path.string(), entries);
        const auto loaded = core::load_weights(path.string());
        bool ok = loaded.size() == entries.size();
        for (std::size_t i = 0; ok && i < entries.size(); ++i) {
            ok = loaded[i].name == entries[i].name && loaded[i].shape == entries[i].shape &&
                 loaded[i].data == entries[i].data;
        }
        fs::remove(path);
        check("weight container bit-exact round trip", ok, "");
    }

    // Plan determinism and painting integrity.
    {
        std::vector<data::PaintingRecord> records;
        for (int i = 0; i < 30; ++i)
            records.push_back({"a" + std::to_string(i), "", data::Label::authentic, ""});
        for (int i = 0; i < 30; ++i)
            records.push_back({"c" + std::to_string(i), "",
                               i % 3 ? data::Label::proxy : data::Label::imitation, ""});
        data::PlanTargets targets;
        targets.authentic = {12, 4, 6};
        targets.contrast = {12, 4, 6};
        const auto p1 = data::build_plan(records, data::ContrastMode::standard, targets, 5, 99);
        const auto p2 = data::build_plan(records, data::ContrastMode::standard, targets, 5, 99);
        bool ok = p1.splits.size() == 5;
        for (std::size_t e = 0; ok && e < p1.splits.size(); ++e)
            ok = p1.splits[e].assignment == p2.splits[e].assignment;
        check("plan determinism under a fixed master seed", ok, "");
    }

    return results;
}

}  // namespace artauth::harness
