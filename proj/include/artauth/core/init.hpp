#pragma once

#include <cmath>

#include "artauth/core/rng.hpp"
#include "artauth/core/tensor.hpp"

namespace artauth::core {

// He-normal: normal(0, sqrt(2/fan_in)) truncated at two standard deviations.
template <typename T>
void he_normal_fill(Tensor<T>& t, std::int64_t fan_in, Rng& rng) {
    if (fan_in < 1) throw UsageError("he_normal_fill requires fan_in >= 1");
    const double sigma = std::sqrt(2.0 / static_cast<double>(fan_in));
    for (auto& v : t.mutable_data()) v = static_cast<T>(rng.truncated_normal(sigma));
}

template <typename T>
void truncated_normal_fill(Tensor<T>& t, double sigma, Rng& rng) {
    for (auto& v : t.mutable_data()) v = static_cast<T>(rng.truncated_normal(sigma));
}

}  // namespace artauth::core
