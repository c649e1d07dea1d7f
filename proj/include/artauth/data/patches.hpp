#pragma once

#include <functional>
#include <string>
#include <vector>

#include "artauth/data/image.hpp"
#include "artauth/data/manifest.hpp"

namespace artauth::data {

constexpr std::int64_t kPatchSize = 256;

enum class PatchKind { grid, center_crop };

// p depending on the smaller side: 2 above 1024 px, 1 above 512, else 0
// (center crop only). Boundary values take the smaller p.
int grid_exponent(std::int64_t min_side);

// 2^p x 2^p equal rectangular units plus the centered largest-square crop,
// each bicubically resampled to 256x256 and clamped to [0,1]. The center crop
// is the last entry.
std::vector<ImageF> extract_patches(const ImageF& img, int p);

// On-disk cache: one directory per painting holding lossless PNG patches and
// a per-painting index, plus a top-level index.
struct CachedPatchRef {
    int index = 0;
    PatchKind kind = PatchKind::grid;
    std::string file;  // relative to the cache root
};

struct CachedPainting {
    std::string id;
    Label label = Label::authentic;
    std::string note;
    std::vector<CachedPatchRef> patches;
};

struct PrepareStats {
    std::int64_t paintings = 0;
    std::int64_t patches = 0;
    std::int64_t per_label[3] = {0, 0, 0};  // patches by label
    std::vector<std::string> failures;      // "path: reason"
};

// Builds the cache from a manifest. Refuses to touch an existing cache unless
// force is set. Per-file ingestion failures are collected, not fatal.
PrepareStats build_patch_cache(const std::vector<PaintingRecord>& manifest,
                               const std::string& manifest_dir,
                               const std::string& cache_dir, bool force,
                               const std::function<void(const std::string&)>& progress = {});

std::vector<CachedPainting> read_cache_index(const std::string& cache_dir);

// Loads one cached patch and resamples it to the model input size.
ImageF load_patch(const std::string& cache_dir, const CachedPatchRef& ref,
                  std::int64_t input_size);

}  // namespace artauth::data
