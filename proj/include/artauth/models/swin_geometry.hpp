#pragma once

#include <cstdint>
#include <memory>
#include <vector>

// Index maps for the data-movement steps of the Swin backbone. Token maps are
// row-major [batch, h, w, channels]; every rearrangement below is a
// row-permutation at a fixed channel granularity, executed by gather_rows.

namespace artauth::swin {

// [B,h,w,d] -> [B*nW, M*M, d], windows row-major, tokens row-major within a
// window. Index entries are token rows (granularity d).
std::vector<std::int64_t> window_partition_index(std::int64_t batch, std::int64_t h,
                                                 std::int64_t w, std::int64_t m);
std::vector<std::int64_t> window_reverse_index(std::int64_t batch, std::int64_t h,
                                               std::int64_t w, std::int64_t m);

// out[r,c] = in[(r - dy) mod h, (c - dx) mod w]
std::vector<std::int64_t> cyclic_shift_index(std::int64_t batch, std::int64_t h,
                                             std::int64_t w, std::int64_t dy,
                                             std::int64_t dx);

// [G, t, heads*dh] -> [G*heads, t, dh] and back (granularity dh).
std::vector<std::int64_t> head_split_index(std::int64_t groups, std::int64_t tokens,
                                           std::int64_t heads);
std::vector<std::int64_t> head_merge_index(std::int64_t groups, std::int64_t tokens,
                                           std::int64_t heads);

// [B,H,W,3] -> [B, H/p, W/p, p*p*3] at granularity 3 (pixel row-major, channel
// fastest).
std::vector<std::int64_t> patch_flatten_index(std::int64_t batch, std::int64_t h,
                                              std::int64_t w, std::int64_t p);

// [B,h,w,d] -> [B, h/2, w/2, 4d] at granularity d; quad order row-major
// (0,0),(0,1),(1,0),(1,1).
std::vector<std::int64_t> patch_merge_index(std::int64_t batch, std::int64_t h,
                                            std::int64_t w);

// Zero-pad a token map on the bottom/right to (new_h, new_w); -1 entries mark
// rows gather_rows fills with zeros.
std::vector<std::int64_t> pad_bottom_right_index(std::int64_t batch, std::int64_t h,
                                                 std::int64_t w, std::int64_t new_h,
                                                 std::int64_t new_w);

// Relative-position pair index for an m x m window: entry (i*t + j) with
// t = m*m points into a (2m-1)^2-row bias table.
std::shared_ptr<const std::vector<std::int64_t>> rel_pos_pair_index(std::int64_t m);

// Region id of each token position of the shifted-window tiling, row-major
// over the grid. Tokens of a window may attend iff their ids are equal; ids
// correspond to the contiguous regions of the pre-shift map.
std::vector<int> shift_region_ids(std::int64_t h, std::int64_t w, std::int64_t m,
                                  std::int64_t shift);

// Test hook: when set, masks are built all-zero (cross-region attention
// allowed) so negative controls can verify the mask checks detect it.
void set_corrupt_masks_hook(bool enabled);
bool corrupt_masks_hook();

}  // namespace artauth::swin
