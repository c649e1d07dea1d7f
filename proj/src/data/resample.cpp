#include "artauth/data/resample.hpp"

#include <cmath>

namespace artauth::data {

double catmull_rom_weight(double s) {
    constexpr double a = -0.5;
    s = std::fabs(s);
    if (s <= 1.0) return ((a + 2.0) * s - (a + 3.0)) * s * s + 1.0;
    if (s < 2.0) return ((a * s - 5.0 * a) * s + 8.0 * a) * s - 4.0 * a;
    return 0.0;
}

namespace {

struct Taps {
    std::int64_t idx[4];
    float w[4];
};

// Source taps and weights per output coordinate, centers aligned:
// sx = (dx + 0.5) * (src / dst) - 0.5.
std::vector<Taps> make_taps(std::int64_t src, std::int64_t dst) {
    std::vector<Taps> taps(static_cast<std::size_t>(dst));
    const double ratio = static_cast<double>(src) / static_cast<double>(dst);
    for (std::int64_t d = 0; d < dst; ++d) {
        const double sx = (static_cast<double>(d) + 0.5) * ratio - 0.5;
        const std::int64_t base = static_cast<std::int64_t>(std::floor(sx));
        const double t = sx - static_cast<double>(base);
        Taps& tp = taps[static_cast<std::size_t>(d)];
        for (int k = 0; k < 4; ++k) {
            std::int64_t i = base - 1 + k;
            if (i < 0) i = 0;
            if (i >= src) i = src - 1;
            tp.idx[k] = i;
            tp.w[k] = static_cast<float>(catmull_rom_weight(static_cast<double>(k - 1) - t));
        }
    }
    return taps;
}

}  // namespace

ImageF resample_bicubic(const ImageF& src, std::int64_t target_h, std::int64_t target_w) {
    if (target_h <= 0 || target_w <= 0)
        throw UsageError("resample_bicubic: target extents must be positive");
    if (src.h <= 0 || src.w <= 0) throw UsageError("resample_bicubic: empty source");

    const auto xtaps = make_taps(src.w, target_w);
    const auto ytaps = make_taps(src.h, target_h);

    // Horizontal pass, then vertical.
    ImageF mid;
    mid.h = src.h;
    mid.w = target_w;
    mid.rgb.resize(static_cast<std::size_t>(mid.h * mid.w * 3));
    for (std::int64_t y = 0; y < src.h; ++y) {
        const float* row = src.rgb.data() + y * src.w * 3;
        float* out = mid.rgb.data() + y * target_w * 3;
        for (std::int64_t x = 0; x < target_w; ++x) {
            const Taps& tp = xtaps[static_cast<std::size_t>(x)];
            for (int c = 0; c < 3; ++c) {
                float acc = 0.0f;
                for (int k = 0; k < 4; ++k) acc += tp.w[k] * row[tp.idx[k] * 3 + c];
                out[x * 3 + c] = acc;
            }
        }
    }

    ImageF dst;
    dst.h = target_h;
    dst.w = target_w;
    dst.rgb.resize(static_cast<std::size_t>(target_h * target_w * 3));
    for (std::int64_t y = 0; y < target_h; ++y) {
        const Taps& tp = ytaps[static_cast<std::size_t>(y)];
        float* out = dst.rgb.data() + y * target_w * 3;
        for (std::int64_t x = 0; x < target_w; ++x) {
            for (int c = 0; c < 3; ++c) {
                float acc = 0.0f;
                for (int k = 0; k < 4; ++k)
                    acc += tp.w[k] * mid.rgb[static_cast<std::size_t>(
                                         (tp.idx[k] * target_w + x) * 3 + c)];
                out[x * 3 + c] = acc;
            }
        }
    }
    return dst;
}

}  // namespace artauth::data
