#include "artauth/core/ops.hpp"

namespace artauth::core {

namespace detail {
std::uint64_t& bce_clamp_counter() {
    static thread_local std::uint64_t counter = 0;
    return counter;
}
}  // namespace detail

std::uint64_t bce_clamp_events() { return detail::bce_clamp_counter(); }

void reset_bce_clamp_events() { detail::bce_clamp_counter() = 0; }

}  // namespace artauth::core
