#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "artauth/data/image.hpp"
#include "artauth/data/manifest.hpp"

namespace artauth::harness {

// Procedural two-class texture corpus: paintings are stroke fields whose
// orientation statistics differ by class (authentic leans vertical,
// imitations horizontal). Sizes cycle through the list so the patch-grid rule
// sees every p.
struct SyntheticSpec {
    int paintings_per_class = 40;
    std::uint64_t seed = 20260809;
    std::vector<std::pair<std::int64_t, std::int64_t>> sizes{
        {288, 288}, {700, 560}, {1100, 1100}};
    double noise = 0.04;
};

data::ImageF synth_texture_painting(std::int64_t h, std::int64_t w, bool vertical,
                                    std::uint64_t seed, double noise);

// Writes PNGs plus manifest.csv into dir; returns the manifest path.
std::string generate_texture_corpus(const std::string& dir, const SyntheticSpec& spec);

}  // namespace artauth::harness
