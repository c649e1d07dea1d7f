#include "artauth/data/patches.hpp"

#include <filesystem>
#include <fstream>

#include "artauth/data/resample.hpp"

namespace fs = std::filesystem;

namespace artauth::data {

int grid_exponent(std::int64_t min_side) {
    if (min_side > 1024) return 2;
    if (min_side > 512) return 1;
    return 0;
}

namespace {

ImageF crop(const ImageF& img, std::int64_t y0, std::int64_t x0, std::int64_t h,
            std::int64_t w) {
    ImageF out;
    out.h = h;
    out.w = w;
    out.rgb.resize(static_cast<std::size_t>(h * w * 3));
    for (std::int64_t y = 0; y < h; ++y) {
        const float* src = img.rgb.data() + ((y0 + y) * img.w + x0) * 3;
        std::copy(src, src + w * 3, out.rgb.data() + y * w * 3);
    }
    return out;
}

std::string patch_file_name(int index) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "patch_%03d.png", index);
    return buf;
}

}  // namespace

std::vector<ImageF> extract_patches(const ImageF& img, int p) {
    if (img.h < 1 || img.w < 1) throw DataError("degenerate image in patch extraction");
    std::vector<ImageF> out;
    // p = 0 contributes the center crop alone; the 1x1 "grid" would duplicate
    // the full image.
    const std::int64_t n = p == 0 ? 0 : std::int64_t(1) << p;
    for (std::int64_t gy = 0; gy < n; ++gy) {
        const std::int64_t y0 = gy * img.h / n;
        const std::int64_t y1 = (gy + 1) * img.h / n;
        for (std::int64_t gx = 0; gx < n; ++gx) {
            const std::int64_t x0 = gx * img.w / n;
            const std::int64_t x1 = (gx + 1) * img.w / n;
            auto unit = crop(img, y0, x0, y1 - y0, x1 - x0);
            auto res = resample_bicubic(unit, kPatchSize, kPatchSize);
            clamp01(res);
            out.push_back(std::move(res));
        }
    }
    const std::int64_t side = std::min(img.h, img.w);
    auto center = crop(img, (img.h - side) / 2, (img.w - side) / 2, side, side);
    auto res = resample_bicubic(center, kPatchSize, kPatchSize);
    clamp01(res);
    out.push_back(std::move(res));
    return out;
}

PrepareStats build_patch_cache(const std::vector<PaintingRecord>& manifest,
                               const std::string& manifest_dir,
                               const std::string& cache_dir, bool force,
                               const std::function<void(const std::string&)>& progress) {
    const fs::path root(cache_dir);
    if (fs::exists(root / "index.csv") && !force)
        throw UsageError("cache '" + cache_dir + "' already exists; pass --force to rebuild");
    fs::create_directories(root);

    PrepareStats stats;
    std::vector<CachedPainting> index;
    for (const auto& rec : manifest) {
        fs::path img_path(rec.path);
        if (img_path.is_relative()) img_path = fs::path(manifest_dir) / img_path;
        try {
            const auto raw = read_image(img_path.string());
            const auto img = to_unit(raw);
            const int p = grid_exponent(std::min(img.h, img.w));
            const auto patches = extract_patches(img, p);

            CachedPainting cp;
            cp.id = rec.id;
            cp.label = rec.label;
            cp.note = rec.note;
            fs::create_directories(root / rec.id);
            std::ofstream pidx(root / rec.id / "patches.csv", std::ios::trunc);
            pidx << "patch_index, kind, file\n";
            for (std::size_t i = 0; i < patches.size(); ++i) {
                CachedPatchRef ref;
                ref.index = static_cast<int>(i);
                ref.kind = (i + 1 == patches.size()) ? PatchKind::center_crop : PatchKind::grid;
                ref.file = rec.id + "/" + patch_file_name(ref.index);
                write_png((root / ref.file).string(), to_u8(patches[i]));
                pidx << ref.index << ", "
                     << (ref.kind == PatchKind::center_crop ? "center_crop" : "grid") << ", "
                     << ref.file << "\n";
                cp.patches.push_back(std::move(ref));
            }
            stats.paintings += 1;
            stats.patches += static_cast<std::int64_t>(patches.size());
            stats.per_label[static_cast<int>(rec.label)] +=
                static_cast<std::int64_t>(patches.size());
            index.push_back(std::move(cp));
            if (progress) progress(rec.id);
        } catch (const Error& e) {
            stats.failures.push_back(img_path.string() + ": " + e.what());
        }
    }

    std::ofstream idx(root / "index.csv", std::ios::trunc);
    idx << "painting_id, label, patch_count, note\n";
    for (const auto& cp : index)
        idx << cp.id << ", " << label_name(cp.label) << ", " << cp.patches.size() << ", "
            << cp.note << "\n";
    return stats;
}

std::vector<CachedPainting> read_cache_index(const std::string& cache_dir) {
    const fs::path root(cache_dir);
    std::ifstream idx(root / "index.csv");
    if (!idx)
        throw DataError("no patch cache at '" + cache_dir +
                        "' (index.csv missing); run the prepare step first");
    std::string line;
    std::getline(idx, line);
    std::vector<CachedPainting> out;
    while (std::getline(idx, line)) {
        if (line.empty()) continue;
        const auto p1 = line.find(',');
        const auto p2 = line.find(',', p1 + 1);
        const auto p3 = line.find(',', p2 + 1);
        if (p1 == std::string::npos || p2 == std::string::npos || p3 == std::string::npos)
            throw DataError("malformed cache index line: " + line);
        const auto trim = [](std::string s) {
            const auto b = s.find_first_not_of(' ');
            const auto e = s.find_last_not_of(" \r");
            return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
        };
        CachedPainting cp;
        cp.id = trim(line.substr(0, p1));
        cp.label = parse_label(trim(line.substr(p1 + 1, p2 - p1 - 1)));
        cp.note = trim(line.substr(p3 + 1));

        std::ifstream pidx(root / cp.id / "patches.csv");
        if (!pidx) throw DataError("missing patch index for painting '" + cp.id + "'");
        std::string pl;
        std::getline(pidx, pl);
        while (std::getline(pidx, pl)) {
            if (pl.empty()) continue;
            const auto q1 = pl.find(',');
            const auto q2 = pl.find(',', q1 + 1);
            CachedPatchRef ref;
            ref.index = std::stoi(pl.substr(0, q1));
            const std::string kind = trim(pl.substr(q1 + 1, q2 - q1 - 1));
            ref.kind = kind == "center_crop" ? PatchKind::center_crop : PatchKind::grid;
            ref.file = trim(pl.substr(q2 + 1));
            cp.patches.push_back(std::move(ref));
        }
        out.push_back(std::move(cp));
    }
    return out;
}

ImageF load_patch(const std::string& cache_dir, const CachedPatchRef& ref,
                  std::int64_t input_size) {
    const auto img = to_unit(read_image((fs::path(cache_dir) / ref.file).string()));
    if (img.h == input_size && img.w == input_size) return img;
    return resample_bicubic(img, input_size, input_size);
}

}  // namespace artauth::data
