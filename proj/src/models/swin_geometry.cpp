#include "artauth/models/swin_geometry.hpp"

#include <map>
#include <mutex>

namespace artauth::swin {

namespace {
bool g_corrupt_masks = false;
}

void set_corrupt_masks_hook(bool enabled) { g_corrupt_masks = enabled; }
bool corrupt_masks_hook() { return g_corrupt_masks; }

std::vector<std::int64_t> window_partition_index(std::int64_t batch, std::int64_t h,
                                                 std::int64_t w, std::int64_t m) {
    const std::int64_t nwh = h / m, nww = w / m;
    std::vector<std::int64_t> idx(static_cast<std::size_t>(batch * h * w));
    std::size_t out = 0;
    for (std::int64_t b = 0; b < batch; ++b)
        for (std::int64_t wy = 0; wy < nwh; ++wy)
            for (std::int64_t wx = 0; wx < nww; ++wx)
                for (std::int64_t py = 0; py < m; ++py)
                    for (std::int64_t px = 0; px < m; ++px)
                        idx[out++] = b * h * w + (wy * m + py) * w + wx * m + px;
    return idx;
}

std::vector<std::int64_t> window_reverse_index(std::int64_t batch, std::int64_t h,
                                               std::int64_t w, std::int64_t m) {
    auto fwd = window_partition_index(batch, h, w, m);
    std::vector<std::int64_t> rev(fwd.size());
    for (std::size_t i = 0; i < fwd.size(); ++i)
        rev[static_cast<std::size_t>(fwd[i])] = static_cast<std::int64_t>(i);
    return rev;
}

std::vector<std::int64_t> cyclic_shift_index(std::int64_t batch, std::int64_t h,
                                             std::int64_t w, std::int64_t dy,
                                             std::int64_t dx) {
    std::vector<std::int64_t> idx(static_cast<std::size_t>(batch * h * w));
    const auto mod = [](std::int64_t a, std::int64_t n) { return ((a % n) + n) % n; };
    std::size_t out = 0;
    for (std::int64_t b = 0; b < batch; ++b)
        for (std::int64_t r = 0; r < h; ++r)
            for (std::int64_t c = 0; c < w; ++c)
                idx[out++] = b * h * w + mod(r - dy, h) * w + mod(c - dx, w);
    return idx;
}

std::vector<std::int64_t> head_split_index(std::int64_t groups, std::int64_t tokens,
                                           std::int64_t heads) {
    std::vector<std::int64_t> idx(static_cast<std::size_t>(groups * heads * tokens));
    std::size_t out = 0;
    for (std::int64_t g = 0; g < groups; ++g)
        for (std::int64_t hh = 0; hh < heads; ++hh)
            for (std::int64_t t = 0; t < tokens; ++t)
                idx[out++] = (g * tokens + t) * heads + hh;
    return idx;
}

std::vector<std::int64_t> head_merge_index(std::int64_t groups, std::int64_t tokens,
                                           std::int64_t heads) {
    std::vector<std::int64_t> idx(static_cast<std::size_t>(groups * heads * tokens));
    std::size_t out = 0;
    for (std::int64_t g = 0; g < groups; ++g)
        for (std::int64_t t = 0; t < tokens; ++t)
            for (std::int64_t hh = 0; hh < heads; ++hh)
                idx[out++] = (g * heads + hh) * tokens + t;
    return idx;
}

std::vector<std::int64_t> patch_flatten_index(std::int64_t batch, std::int64_t h,
                                              std::int64_t w, std::int64_t p) {
    const std::int64_t gh = h / p, gw = w / p;
    std::vector<std::int64_t> idx(static_cast<std::size_t>(batch * h * w));
    std::size_t out = 0;
    for (std::int64_t b = 0; b < batch; ++b)
        for (std::int64_t gy = 0; gy < gh; ++gy)
            for (std::int64_t gx = 0; gx < gw; ++gx)
                for (std::int64_t py = 0; py < p; ++py)
                    for (std::int64_t px = 0; px < p; ++px)
                        idx[out++] = b * h * w + (gy * p + py) * w + gx * p + px;
    return idx;
}

std::vector<std::int64_t> patch_merge_index(std::int64_t batch, std::int64_t h,
                                            std::int64_t w) {
    const std::int64_t h2 = h / 2, w2 = w / 2;
    std::vector<std::int64_t> idx(static_cast<std::size_t>(batch * h * w));
    std::size_t out = 0;
    for (std::int64_t b = 0; b < batch; ++b)
        for (std::int64_t my = 0; my < h2; ++my)
            for (std::int64_t mx = 0; mx < w2; ++mx)
                for (std::int64_t qy = 0; qy < 2; ++qy)
                    for (std::int64_t qx = 0; qx < 2; ++qx)
                        idx[out++] = b * h * w + (2 * my + qy) * w + 2 * mx + qx;
    return idx;
}

std::vector<std::int64_t> pad_bottom_right_index(std::int64_t batch, std::int64_t h,
                                                 std::int64_t w, std::int64_t new_h,
                                                 std::int64_t new_w) {
    std::vector<std::int64_t> idx(static_cast<std::size_t>(batch * new_h * new_w));
    std::size_t out = 0;
    for (std::int64_t b = 0; b < batch; ++b)
        for (std::int64_t r = 0; r < new_h; ++r)
            for (std::int64_t c = 0; c < new_w; ++c)
                idx[out++] = (r < h && c < w) ? b * h * w + r * w + c : -1;
    return idx;
}

std::shared_ptr<const std::vector<std::int64_t>> rel_pos_pair_index(std::int64_t m) {
    static std::mutex mu;
    static std::map<std::int64_t, std::shared_ptr<const std::vector<std::int64_t>>> cache;
    std::lock_guard<std::mutex> lock(mu);
    auto it = cache.find(m);
    if (it != cache.end()) return it->second;
    const std::int64_t t = m * m;
    auto idx = std::make_shared<std::vector<std::int64_t>>(static_cast<std::size_t>(t * t));
    for (std::int64_t i = 0; i < t; ++i) {
        const std::int64_t iy = i / m, ix = i % m;
        for (std::int64_t j = 0; j < t; ++j) {
            const std::int64_t jy = j / m, jx = j % m;
            (*idx)[static_cast<std::size_t>(i * t + j)] =
                (iy - jy + m - 1) * (2 * m - 1) + (ix - jx + m - 1);
        }
    }
    cache.emplace(m, idx);
    return cache.at(m);
}

// Three zones per axis, split at h-m and h-shift; evaluated at the window
// tiling's own coordinates this reproduces the contiguous pre-shift regions
// within every window.
std::vector<int> shift_region_ids(std::int64_t h, std::int64_t w, std::int64_t m,
                                  std::int64_t shift) {
    const auto zone = [m, shift](std::int64_t pos, std::int64_t extent) {
        if (pos < extent - m) return 0;
        if (pos < extent - shift) return 1;
        return 2;
    };
    std::vector<int> ids(static_cast<std::size_t>(h * w));
    for (std::int64_t r = 0; r < h; ++r)
        for (std::int64_t c = 0; c < w; ++c)
            ids[static_cast<std::size_t>(r * w + c)] = zone(r, h) * 3 + zone(c, w);
    return ids;
}

}  // namespace artauth::swin
