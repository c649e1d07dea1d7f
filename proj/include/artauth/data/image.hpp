#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "artauth/common.hpp"

namespace artauth::data {

// Interleaved RGB images. ImageF carries unit-interval channel values.
struct ImageU8 {
    std::int64_t h = 0, w = 0;
    std::vector<std::uint8_t> rgb;  // h*w*3
};

struct ImageF {
    std::int64_t h = 0, w = 0;
    std::vector<float> rgb;  // h*w*3

    float at(std::int64_t y, std::int64_t x, int c) const {
        return rgb[static_cast<std::size_t>((y * w + x) * 3 + c)];
    }
    float& at(std::int64_t y, std::int64_t x, int c) {
        return rgb[static_cast<std::size_t>((y * w + x) * 3 + c)];
    }
};

// PNG or JPEG, sniffed from the file header; 8-bit output, gray and alpha
// variants converted to plain RGB. Throws DataError naming the path.
ImageU8 read_image(const std::string& path);
void write_png(const std::string& path, const ImageU8& img);

ImageF to_unit(const ImageU8& img);    // /255
ImageU8 to_u8(const ImageF& img);      // round + clamp
void clamp01(ImageF& img);

}  // namespace artauth::data
