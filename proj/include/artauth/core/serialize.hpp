#pragma once

#include <string>
#include <utility>
#include <vector>

#include "artauth/common.hpp"
#include "artauth/core/tensor.hpp"

namespace artauth::core {

// Flat binary weight container:
//   magic "ARTAUTHW", u32 version, u64 entry count,
//   per entry: u32 name length, UTF-8 name, u32 rank,
//              u64 extents[rank] (little-endian), raw little-endian f32 data.
// Round-trips bit-exactly.

struct NamedTensor {
    std::string name;
    Shape shape;
    std::vector<float> data;
};

void save_weights(const std::string& path, const std::vector<NamedTensor>& entries);
std::vector<NamedTensor> load_weights(const std::string& path);

void save_params(const std::string& path, const ParamSet<float>& params);

// Copies values into an existing parameter set; throws DataError on any
// missing name or shape disagreement.
void load_params(const std::string& path, ParamSet<float>& params);

}  // namespace artauth::core
