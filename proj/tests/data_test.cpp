#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

#include "artauth/core/rng.hpp"
#include "artauth/data/manifest.hpp"
#include "artauth/data/patches.hpp"
#include "artauth/data/plan.hpp"
#include "artauth/data/resample.hpp"
#include "artauth/harness/synthetic.hpp"

namespace fs = std::filesystem;
using namespace artauth;
using core::Rng;

namespace {

data::ImageF constant_image(std::int64_t h, std::int64_t w, float r, float g, float b) {
    data::ImageF img;
    img.h = h;
    img.w = w;
    img.rgb.resize(static_cast<std::size_t>(h * w * 3));
    for (std::int64_t i = 0; i < h * w; ++i) {
        img.rgb[static_cast<std::size_t>(3 * i)] = r;
        img.rgb[static_cast<std::size_t>(3 * i + 1)] = g;
        img.rgb[static_cast<std::size_t>(3 * i + 2)] = b;
    }
    return img;
}

std::string fresh_dir(const std::string& name) {
    const auto dir = fs::path(::testing::TempDir()) / name;
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir.string();
}

}  // namespace

TEST(GridExponent, RuleAndBoundaries) {
    EXPECT_EQ(data::grid_exponent(1200), 2);
    EXPECT_EQ(data::grid_exponent(600), 1);
    EXPECT_EQ(data::grid_exponent(400), 0);
    // boundary values take the smaller p
    EXPECT_EQ(data::grid_exponent(512), 0);
    EXPECT_EQ(data::grid_exponent(513), 1);
    EXPECT_EQ(data::grid_exponent(1024), 1);
    EXPECT_EQ(data::grid_exponent(1025), 2);
}

TEST(ExtractPatches, CountsFollowTwoToTheTwoP) {
    for (int p : {0, 1, 2}) {
        auto img = constant_image(300, 300, 0.5f, 0.5f, 0.5f);
        const auto patches = data::extract_patches(img, p);
        // p >= 1: grid units plus the crop; p = 0: the crop alone
        EXPECT_EQ(static_cast<int>(patches.size()), p == 0 ? 1 : (1 << (2 * p)) + 1);
        for (const auto& pt : patches) {
            EXPECT_EQ(pt.h, 256);
            EXPECT_EQ(pt.w, 256);
        }
    }
}

TEST(ExtractPatches, QuadrantColorsLandInTheRightUnits) {
    // 1024x1024 with distinct quadrant colors; p=1 gives four units plus the
    // full-image center crop.
    data::ImageF img = constant_image(1024, 1024, 0, 0, 0);
    for (std::int64_t y = 0; y < 1024; ++y)
        for (std::int64_t x = 0; x < 1024; ++x) {
            const int q = (y < 512 ? 0 : 2) + (x < 512 ? 0 : 1);
            img.at(y, x, 0) = q == 0 ? 1.0f : 0.0f;
            img.at(y, x, 1) = q == 1 ? 1.0f : 0.0f;
            img.at(y, x, 2) = q == 2 ? 1.0f : 0.0f;
        }
    const auto patches = data::extract_patches(img, 1);
    ASSERT_EQ(patches.size(), 5u);
    EXPECT_FLOAT_EQ(patches[0].at(100, 100, 0), 1.0f);  // top-left unit is pure red
    EXPECT_FLOAT_EQ(patches[1].at(100, 100, 1), 1.0f);
    EXPECT_FLOAT_EQ(patches[2].at(100, 100, 2), 1.0f);
    // center crop of a square image is the image itself
    EXPECT_FLOAT_EQ(patches[4].at(10, 10, 0), 1.0f);
    EXPECT_FLOAT_EQ(patches[4].at(10, 250, 1), 1.0f);
}

TEST(ExtractPatches, WideImageCenterCropIsTheCenteredSquare) {
    // 2048x1024: a centered 1024-wide band is red, the flanks are blue. The
    // center crop must be pure red.
    data::ImageF img = constant_image(1024, 2048, 0, 0, 1);
    for (std::int64_t y = 0; y < 1024; ++y)
        for (std::int64_t x = 512; x < 1536; ++x) {
            img.at(y, x, 0) = 1.0f;
            img.at(y, x, 2) = 0.0f;
        }
    const auto patches = data::extract_patches(img, 1);
    const auto& crop = patches.back();
    for (std::int64_t y = 0; y < 256; y += 51)
        for (std::int64_t x = 0; x < 256; x += 51) {
            EXPECT_NEAR(crop.at(y, x, 0), 1.0f, 1e-5f);
            EXPECT_NEAR(crop.at(y, x, 2), 0.0f, 1e-5f);
        }
}

TEST(ExtractPatches, ConstantImageStaysConstant) {
    auto img = constant_image(700, 900, 0.3f, 0.6f, 0.9f);
    for (const auto& pt : data::extract_patches(img, 1)) {
        for (std::int64_t i = 0; i < pt.h * pt.w; ++i) {
            EXPECT_NEAR(pt.rgb[static_cast<std::size_t>(3 * i)], 0.3f, 1e-6f);
            EXPECT_NEAR(pt.rgb[static_cast<std::size_t>(3 * i + 1)], 0.6f, 1e-6f);
            EXPECT_NEAR(pt.rgb[static_cast<std::size_t>(3 * i + 2)], 0.9f, 1e-6f);
        }
    }
}

TEST(Resample, SameSizeIsIdentity) {
    Rng rng(501);
    data::ImageF img;
    img.h = 37;
    img.w = 23;
    img.rgb.resize(static_cast<std::size_t>(37 * 23 * 3));
    for (auto& v : img.rgb) v = static_cast<float>(rng.uniform(0, 1));
    const auto out = data::resample_bicubic(img, 37, 23);
    for (std::size_t i = 0; i < img.rgb.size(); ++i)
        EXPECT_NEAR(out.rgb[i], img.rgb[i], 1e-6f);
}

TEST(Resample, ConstantIsExact) {
    auto img = constant_image(33, 47, 0.123f, 0.456f, 0.789f);
    const auto out = data::resample_bicubic(img, 15, 61);
    for (std::int64_t i = 0; i < out.h * out.w; ++i) {
        EXPECT_NEAR(out.rgb[static_cast<std::size_t>(3 * i)], 0.123f, 1e-6f);
        EXPECT_NEAR(out.rgb[static_cast<std::size_t>(3 * i + 1)], 0.456f, 1e-6f);
        EXPECT_NEAR(out.rgb[static_cast<std::size_t>(3 * i + 2)], 0.789f, 1e-6f);
    }
}

// Direct 16-tap kernel-sum evaluation, written independently of the separable
// implementation.
TEST(Resample, RampMatchesDirectKernelSums) {
    data::ImageF ramp;
    ramp.h = 4;
    ramp.w = 4;
    ramp.rgb.resize(4 * 4 * 3);
    for (std::int64_t y = 0; y < 4; ++y)
        for (std::int64_t x = 0; x < 4; ++x)
            for (int c = 0; c < 3; ++c)
                ramp.at(y, x, c) = static_cast<float>(y * 4 + x) / 16.0f;

    const auto out = data::resample_bicubic(ramp, 2, 2);
    for (std::int64_t dy = 0; dy < 2; ++dy) {
        for (std::int64_t dx = 0; dx < 2; ++dx) {
            const double sy = (dy + 0.5) * 2.0 - 0.5;
            const double sx = (dx + 0.5) * 2.0 - 0.5;
            const std::int64_t by = static_cast<std::int64_t>(std::floor(sy));
            const std::int64_t bx = static_cast<std::int64_t>(std::floor(sx));
            double acc = 0.0;
            for (int ky = 0; ky < 4; ++ky) {
                for (int kx = 0; kx < 4; ++kx) {
                    std::int64_t iy = std::clamp<std::int64_t>(by - 1 + ky, 0, 3);
                    std::int64_t ix = std::clamp<std::int64_t>(bx - 1 + kx, 0, 3);
                    const double wy = data::catmull_rom_weight((ky - 1) - (sy - by));
                    const double wx = data::catmull_rom_weight((kx - 1) - (sx - bx));
                    acc += wy * wx * ramp.at(iy, ix, 0);
                }
            }
            EXPECT_NEAR(out.at(dy, dx, 0), acc, 1e-6) << dy << "," << dx;
        }
    }
    // frozen values from the direct evaluation above
    EXPECT_NEAR(out.at(0, 0, 0), 0.13671875f, 1e-5f);
    EXPECT_NEAR(out.at(1, 1, 0), 0.80078125f, 1e-5f);
}

TEST(Manifest, RoundTripAndValidation) {
    const auto dir = fresh_dir("manifest_test");
    const auto path = dir + "/m.csv";
    std::vector<data::PaintingRecord> records{
        {"p1", "img/p1.png", data::Label::authentic, ""},
        {"p2", "img/p2.png", data::Label::imitation, "After the master"},
        {"p3", "img/p3.png", data::Label::proxy, ""},
    };
    data::write_manifest(path, records);
    const auto loaded = data::read_manifest(path);
    ASSERT_EQ(loaded.size(), 3u);
    EXPECT_EQ(loaded[1].note, "After the master");
    EXPECT_EQ(loaded[2].label, data::Label::proxy);

    std::ofstream bad(path, std::ios::app);
    bad << "p4, x.png, forgery,\n";
    bad.close();
    EXPECT_THROW(data::read_manifest(path), DataError);
}

TEST(Plan, DefaultTargetsMatchFullScaleTable) {
    const auto st = data::PlanTargets::defaults(data::ContrastMode::standard);
    EXPECT_EQ(st.authentic.train, 520);
    EXPECT_EQ(st.authentic.val, 78);
    EXPECT_EQ(st.authentic.test, 73);
    EXPECT_EQ(st.contrast.train, 523);
    EXPECT_EQ(st.contrast.val, 65);
    EXPECT_EQ(st.contrast.test, 65);
    const auto rf = data::PlanTargets::defaults(data::ContrastMode::refined);
    EXPECT_EQ(rf.authentic.train, 87);
    EXPECT_EQ(rf.authentic.val, 20);
    EXPECT_EQ(rf.authentic.test, 30);
    EXPECT_EQ(rf.contrast.test, 30);
}

TEST(Plan, FullScaleStandardCountsAreSatisfied) {
    std::vector<data::PaintingRecord> records;
    for (int i = 0; i < 700; ++i)
        records.push_back({"a" + std::to_string(i), "", data::Label::authentic, ""});
    for (int i = 0; i < 69; ++i)
        records.push_back({"i" + std::to_string(i), "", data::Label::imitation, ""});
    for (int i = 0; i < 600; ++i)
        records.push_back({"x" + std::to_string(i), "", data::Label::proxy, ""});
    const auto plan =
        data::build_plan(records, data::ContrastMode::standard,
                         data::PlanTargets::defaults(data::ContrastMode::standard), 2, 7);
    for (const auto& split : plan.splits) {
        std::int64_t counts[2][3] = {{0, 0, 0}, {0, 0, 0}};
        for (const auto& [id, part] : split.assignment) {
            if (part == data::Part::unused) continue;
            const int cls = id[0] == 'a' ? 0 : 1;
            counts[cls][static_cast<int>(part)] += 1;
        }
        EXPECT_EQ(counts[0][0], 520);
        EXPECT_EQ(counts[0][1], 78);
        EXPECT_EQ(counts[0][2], 73);
        EXPECT_EQ(counts[1][0], 523);
        EXPECT_EQ(counts[1][1], 65);
        EXPECT_EQ(counts[1][2], 65);
    }
}

TEST(Plan, DeterministicUnderSeedAndDifferentAcrossSeeds) {
    std::vector<data::PaintingRecord> records;
    for (int i = 0; i < 40; ++i)
        records.push_back({"a" + std::to_string(i), "", data::Label::authentic, ""});
    for (int i = 0; i < 40; ++i)
        records.push_back({"i" + std::to_string(i), "", data::Label::imitation, ""});
    data::PlanTargets t;
    t.authentic = {20, 5, 10};
    t.contrast = {20, 5, 10};
    const auto p1 = data::build_plan(records, data::ContrastMode::refined, t, 4, 42);
    const auto p2 = data::build_plan(records, data::ContrastMode::refined, t, 4, 42);
    const auto p3 = data::build_plan(records, data::ContrastMode::refined, t, 4, 43);
    for (std::size_t e = 0; e < 4; ++e) {
        EXPECT_EQ(p1.splits[e].assignment, p2.splits[e].assignment);
    }
    bool any_diff = false;
    for (std::size_t e = 0; e < 4; ++e)
        any_diff = any_diff || p1.splits[e].assignment != p3.splits[e].assignment;
    EXPECT_TRUE(any_diff);
    // experiments within one plan differ from each other as well
    EXPECT_NE(p1.splits[0].assignment, p1.splits[1].assignment);
}

TEST(Plan, RefinedModeExcludesProxies) {
    std::vector<data::PaintingRecord> records;
    for (int i = 0; i < 30; ++i)
        records.push_back({"a" + std::to_string(i), "", data::Label::authentic, ""});
    for (int i = 0; i < 20; ++i)
        records.push_back({"i" + std::to_string(i), "", data::Label::imitation, ""});
    for (int i = 0; i < 20; ++i)
        records.push_back({"x" + std::to_string(i), "", data::Label::proxy, ""});
    data::PlanTargets t;
    t.authentic = {10, 3, 5};
    t.contrast = {10, 3, 5};
    const auto plan = data::build_plan(records, data::ContrastMode::refined, t, 3, 9);
    for (const auto& split : plan.splits)
        for (const auto& [id, part] : split.assignment)
            if (id[0] == 'x') FAIL() << "proxy " << id << " present in a refined plan";
}

TEST(Plan, InfeasibleTargetsAreAPlanningError) {
    std::vector<data::PaintingRecord> records;
    for (int i = 0; i < 10; ++i)
        records.push_back({"a" + std::to_string(i), "", data::Label::authentic, ""});
    for (int i = 0; i < 10; ++i)
        records.push_back({"i" + std::to_string(i), "", data::Label::imitation, ""});
    data::PlanTargets t;
    t.authentic = {10, 3, 5};
    t.contrast = {4, 3, 3};
    EXPECT_THROW(data::build_plan(records, data::ContrastMode::refined, t, 1, 1), DataError);
}

TEST(Plan, WeightsFollowModeAndLabel) {
    EXPECT_EQ(data::patch_weight(data::Label::imitation, data::ContrastMode::standard), 10.0);
    EXPECT_EQ(data::patch_weight(data::Label::imitation, data::ContrastMode::refined), 1.0);
    EXPECT_EQ(data::patch_weight(data::Label::authentic, data::ContrastMode::standard), 1.0);
    EXPECT_EQ(data::patch_weight(data::Label::proxy, data::ContrastMode::standard), 1.0);

    std::vector<data::PaintingRecord> records{
        {"a0", "", data::Label::authentic, ""},
        {"i0", "", data::Label::imitation, ""},
    };
    data::PlanTargets t;
    t.authentic = {1, 0, 0};
    t.contrast = {1, 0, 0};
    auto plan = data::build_plan(records, data::ContrastMode::standard, t, 1, 5);
    data::assign_weights(plan, {{"a0", data::Label::authentic},
                                {"i0", data::Label::imitation}});
    EXPECT_EQ(plan.painting_weight.at("a0"), 1.0);
    EXPECT_EQ(plan.painting_weight.at("i0"), 10.0);
}

TEST(Plan, SaveLoadRoundTripIsByteIdentical) {
    std::vector<data::PaintingRecord> records;
    for (int i = 0; i < 12; ++i)
        records.push_back({"a" + std::to_string(i), "", data::Label::authentic, ""});
    for (int i = 0; i < 12; ++i)
        records.push_back({"i" + std::to_string(i), "", data::Label::imitation, ""});
    data::PlanTargets t;
    t.authentic = {6, 2, 3};
    t.contrast = {6, 2, 3};
    const auto plan = data::build_plan(records, data::ContrastMode::refined, t, 3, 77);

    const auto dir = fresh_dir("plan_roundtrip");
    data::save_plan(dir + "/p1.txt", plan);
    const auto loaded = data::load_plan(dir + "/p1.txt");
    data::save_plan(dir + "/p2.txt", loaded);

    std::ifstream f1(dir + "/p1.txt"), f2(dir + "/p2.txt");
    std::string s1((std::istreambuf_iterator<char>(f1)), std::istreambuf_iterator<char>());
    std::string s2((std::istreambuf_iterator<char>(f2)), std::istreambuf_iterator<char>());
    EXPECT_EQ(s1, s2);
    EXPECT_FALSE(s1.empty());
}

TEST(PatchCache, BuildReadAndForceSemantics) {
    const auto corpus = fresh_dir("cache_corpus");
    harness::SyntheticSpec spec;
    spec.paintings_per_class = 2;
    spec.sizes = {{96, 96}, {600, 600}};
    const auto manifest_path = harness::generate_texture_corpus(corpus, spec);
    const auto manifest = data::read_manifest(manifest_path);

    const auto cache = fresh_dir("cache_dir");
    fs::remove_all(cache);
    const auto stats = data::build_patch_cache(manifest, corpus, cache, false);
    EXPECT_EQ(stats.paintings, 4);
    EXPECT_EQ(stats.patches, 2 * (1 + 5));
    EXPECT_TRUE(stats.failures.empty());

    EXPECT_THROW(data::build_patch_cache(manifest, corpus, cache, false), UsageError);
    EXPECT_NO_THROW(data::build_patch_cache(manifest, corpus, cache, true));

    const auto index = data::read_cache_index(cache);
    ASSERT_EQ(index.size(), 4u);
    for (const auto& painting : index) {
        int crops = 0;
        for (const auto& ref : painting.patches)
            crops += ref.kind == data::PatchKind::center_crop ? 1 : 0;
        EXPECT_EQ(crops, 1) << painting.id;
        const auto img = data::load_patch(cache, painting.patches.front(), 64);
        EXPECT_EQ(img.h, 64);
        for (auto v : img.rgb) {
            EXPECT_GE(v, 0.0f);
            EXPECT_LE(v, 1.0f);
        }
    }

    // unreadable image: failure is collected, not fatal, and names the path
    auto broken = manifest;
    std::ofstream junk(fs::path(corpus) / "junk.png");
    junk << "not an image";
    junk.close();
    broken.push_back({"bad", "junk.png", data::Label::authentic, ""});
    const auto stats2 = data::build_patch_cache(broken, corpus, cache, true);
    ASSERT_EQ(stats2.failures.size(), 1u);
    EXPECT_NE(stats2.failures[0].find("junk.png"), std::string::npos);
    EXPECT_EQ(stats2.paintings, 4);
}
