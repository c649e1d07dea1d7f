#include "artauth/kernels/kernels.hpp"

#include <cstdlib>
#include <cstring>

namespace artauth::kernels {

namespace {

Backend g_backend = Backend::scalar;
const Table* g_table = &scalar::table;
bool g_initialized = false;

void init_once() {
    if (g_initialized) return;
    g_initialized = true;
    Backend pick = avx2_available() ? Backend::avx2 : Backend::scalar;
    if (const char* env = std::getenv("ARTAUTH_KERNELS")) {
        if (std::strcmp(env, "scalar") == 0) pick = Backend::scalar;
        if (std::strcmp(env, "avx2") == 0 && avx2_available()) pick = Backend::avx2;
    }
    select(pick);
}

}  // namespace

bool avx2_available() {
#if defined(__x86_64__) || defined(_M_X64)
    return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
    return false;
#endif
}

void select(Backend b) {
    g_initialized = true;
    g_backend = b;
#if defined(__x86_64__) || defined(_M_X64)
    g_table = (b == Backend::avx2) ? &avx2::table : &scalar::table;
#else
    g_table = &scalar::table;
    g_backend = Backend::scalar;
#endif
}

const Table& active() {
    init_once();
    return *g_table;
}

Backend backend() {
    init_once();
    return g_backend;
}

std::string backend_name() {
    return backend() == Backend::avx2 ? "avx2" : "scalar";
}

}  // namespace artauth::kernels
