#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "artauth/core/kdispatch.hpp"
#include "artauth/core/tensor.hpp"

namespace artauth::core {

// Adam with bias correction. Moment buffers are zero at step 0 and mirror the
// parameter shapes.
template <typename T>
struct AdamState {
    std::int64_t step = 0;
    T learning_rate = T(1e-4);
    T beta1 = T(0.9);
    T beta2 = T(0.999);
    T epsilon = T(1e-8);
    std::vector<std::vector<T>> m;
    std::vector<std::vector<T>> v;

    static AdamState for_params(const ParamSet<T>& params, T lr = T(1e-4)) {
        AdamState s;
        s.learning_rate = lr;
        for (const auto& [name, t] : params.items()) {
            s.m.emplace_back(static_cast<std::size_t>(t.numel()), T(0));
            s.v.emplace_back(static_cast<std::size_t>(t.numel()), T(0));
        }
        return s;
    }
};

// One update from the gradients currently held by the parameters.
template <typename T>
void adam_step(ParamSet<T>& params, AdamState<T>& state) {
    if (state.m.size() != params.size() || state.v.size() != params.size())
        throw UsageError("adam state does not match parameter set");
    for (std::size_t i = 0; i < params.size(); ++i) {
        auto& [name, t] = params.items()[i];
        if (static_cast<std::int64_t>(state.m[i].size()) != t.numel())
            throw ShapeError("adam moment shape mismatch for parameter '" + name + "'");
        auto g = t.grad();
        if (!kp::all_finite(static_cast<std::int64_t>(g.size()), g.data()))
            throw NumericError("non-finite gradient in parameter '" + name + "'");
    }
    state.step += 1;
    const T bias1 = T(1) - std::pow(state.beta1, T(state.step));
    const T bias2 = T(1) - std::pow(state.beta2, T(state.step));
    for (std::size_t i = 0; i < params.size(); ++i) {
        auto& t = params.items()[i].second;
        kp::adam_update(t.numel(), t.mutable_data().data(), t.grad().data(),
                        state.m[i].data(), state.v[i].data(), state.learning_rate,
                        state.beta1, state.beta2, state.epsilon, bias1, bias2);
    }
}

}  // namespace artauth::core
