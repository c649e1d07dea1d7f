#include "artauth/harness/synthetic.hpp"

#include <cmath>
#include <filesystem>

#include "artauth/core/rng.hpp"

namespace fs = std::filesystem;

namespace artauth::harness {

// Sum of a few oriented gratings with random frequency and phase, plus a
// small amount of pixel noise. Orientation carries through every crop scale,
// so each patch of a painting stays informative.
data::ImageF synth_texture_painting(std::int64_t h, std::int64_t w, bool vertical,
                                    std::uint64_t seed, double noise) {
    core::Rng rng(seed);
    data::ImageF img;
    img.h = h;
    img.w = w;
    img.rgb.resize(static_cast<std::size_t>(h * w * 3));

    // Wavelengths stay well above the model input resolution so the
    // orientation statistic survives the 256 -> input downsampling.
    struct Wave {
        double freq, phase, amp;
    };
    std::vector<Wave> waves;
    const int n_waves = 3;
    for (int i = 0; i < n_waves; ++i) {
        Wave wv;
        wv.freq = rng.uniform(3.0, 11.0);
        wv.phase = rng.uniform(0.0, 6.283185307179586);
        wv.amp = rng.uniform(0.12, 0.20);
        waves.push_back(wv);
    }
    const double gain_r = rng.uniform(0.9, 1.1);
    const double gain_g = rng.uniform(0.9, 1.1);
    const double gain_b = rng.uniform(0.9, 1.1);

    for (std::int64_t y = 0; y < h; ++y) {
        for (std::int64_t x = 0; x < w; ++x) {
            const double coord = vertical ? static_cast<double>(x) / static_cast<double>(w)
                                          : static_cast<double>(y) / static_cast<double>(h);
            double v = 0.5;
            for (const auto& wv : waves)
                v += wv.amp * std::sin(6.283185307179586 * wv.freq * coord + wv.phase);
            v += rng.normal() * noise;
            const auto px = img.rgb.data() + (y * w + x) * 3;
            px[0] = static_cast<float>(v * gain_r);
            px[1] = static_cast<float>(v * gain_g);
            px[2] = static_cast<float>(v * gain_b);
        }
    }
    data::clamp01(img);
    return img;
}

std::string generate_texture_corpus(const std::string& dir, const SyntheticSpec& spec) {
    fs::create_directories(dir);
    std::vector<data::PaintingRecord> manifest;
    core::Rng rng(spec.seed);
    for (int cls = 0; cls < 2; ++cls) {
        const bool vertical = cls == 1;  // vertical strokes -> authentic
        for (int i = 0; i < spec.paintings_per_class; ++i) {
            const auto [h, w] = spec.sizes[static_cast<std::size_t>(i) % spec.sizes.size()];
            char id[32];
            std::snprintf(id, sizeof id, "%s%03d", vertical ? "auth" : "imit", i);
            const std::string file = std::string(id) + ".png";
            const auto img =
                synth_texture_painting(h, w, vertical, rng.next_u64(), spec.noise);
            data::write_png((fs::path(dir) / file).string(), data::to_u8(img));
            data::PaintingRecord rec;
            rec.id = id;
            rec.path = file;
            rec.label = vertical ? data::Label::authentic : data::Label::imitation;
            rec.note = vertical ? "" : "synthetic imitation";
            manifest.push_back(std::move(rec));
        }
    }
    const std::string manifest_path = (fs::path(dir) / "manifest.csv").string();
    data::write_manifest(manifest_path, manifest);
    return manifest_path;
}

}  // namespace artauth::harness
