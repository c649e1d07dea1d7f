#pragma once

#include "artauth/data/image.hpp"

namespace artauth::data {

// Cubic-convolution resampling (Catmull-Rom, a = -0.5), separable,
// edge-clamped, pixel centers aligned. Same-size resampling is the identity.
// Output is not clamped; callers snap to [0,1] where the contract needs it.
ImageF resample_bicubic(const ImageF& src, std::int64_t target_h, std::int64_t target_w);

// The Catmull-Rom kernel weight at distance s.
double catmull_rom_weight(double s);

}  // namespace artauth::data
