#include "artauth/core/serialize.hpp"

#include <cstdint>
#include <cstring>
#include <fstream>

namespace artauth::core {

namespace {

constexpr char kMagic[8] = {'A', 'R', 'T', 'A', 'U', 'T', 'H', 'W'};
constexpr std::uint32_t kVersion = 1;

void put_u32(std::ostream& os, std::uint32_t v) {
    unsigned char b[4];
    for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
    os.write(reinterpret_cast<const char*>(b), 4);
}

void put_u64(std::ostream& os, std::uint64_t v) {
    unsigned char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
    os.write(reinterpret_cast<const char*>(b), 8);
}

std::uint32_t get_u32(std::istream& is) {
    unsigned char b[4];
    is.read(reinterpret_cast<char*>(b), 4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b[i]) << (8 * i);
    return v;
}

std::uint64_t get_u64(std::istream& is) {
    unsigned char b[8];
    is.read(reinterpret_cast<char*>(b), 8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
    return v;
}

void put_f32(std::ostream& os, const float* data, std::size_t n) {
    // x86 is little-endian; stay explicit anyway so the format is fixed.
    for (std::size_t i = 0; i < n; ++i) {
        std::uint32_t bits;
        std::memcpy(&bits, data + i, 4);
        put_u32(os, bits);
    }
}

void get_f32(std::istream& is, float* data, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) {
        const std::uint32_t bits = get_u32(is);
        std::memcpy(data + i, &bits, 4);
    }
}

}  // namespace

void save_weights(const std::string& path, const std::vector<NamedTensor>& entries) {
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) throw DataError("cannot open '" + path + "' for writing");
    os.write(kMagic, sizeof kMagic);
    put_u32(os, kVersion);
    put_u64(os, entries.size());
    for (const auto& e : entries) {
        put_u32(os, static_cast<std::uint32_t>(e.name.size()));
        os.write(e.name.data(), static_cast<std::streamsize>(e.name.size()));
        put_u32(os, static_cast<std::uint32_t>(e.shape.size()));
        for (auto d : e.shape) put_u64(os, static_cast<std::uint64_t>(d));
        put_f32(os, e.data.data(), e.data.size());
    }
    if (!os) throw DataError("write failure on '" + path + "'");
}

std::vector<NamedTensor> load_weights(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw DataError("cannot open weight file '" + path + "'");
    char magic[8];
    is.read(magic, 8);
    if (!is || std::memcmp(magic, kMagic, 8) != 0)
        throw DataError("'" + path + "' is not a weight container (bad magic)");
    const std::uint32_t version = get_u32(is);
    if (version != kVersion)
        throw DataError("unsupported weight container version " + std::to_string(version));
    const std::uint64_t count = get_u64(is);
    std::vector<NamedTensor> out;
    out.reserve(count);
    for (std::uint64_t i = 0; i < count; ++i) {
        NamedTensor e;
        const std::uint32_t name_len = get_u32(is);
        e.name.resize(name_len);
        is.read(e.name.data(), name_len);
        const std::uint32_t rank = get_u32(is);
        e.shape.resize(rank);
        std::int64_t numel = 1;
        for (std::uint32_t d = 0; d < rank; ++d) {
            e.shape[d] = static_cast<std::int64_t>(get_u64(is));
            numel *= e.shape[d];
        }
        e.data.resize(static_cast<std::size_t>(numel));
        get_f32(is, e.data.data(), e.data.size());
        if (!is) throw DataError("truncated weight container '" + path + "'");
        out.push_back(std::move(e));
    }
    return out;
}

void save_params(const std::string& path, const ParamSet<float>& params) {
    std::vector<NamedTensor> entries;
    entries.reserve(params.size());
    for (const auto& [name, t] : params.items()) {
        entries.push_back({name, t.shape(), {t.data().begin(), t.data().end()}});
    }
    save_weights(path, entries);
}

void load_params(const std::string& path, ParamSet<float>& params) {
    auto entries = load_weights(path);
    if (entries.size() != params.size())
        throw DataError("weight file '" + path + "' holds " +
                        std::to_string(entries.size()) + " entries, model expects " +
                        std::to_string(params.size()));
    for (std::size_t i = 0; i < entries.size(); ++i) {
        auto& [name, t] = params.items()[i];
        const auto& e = entries[i];
        if (e.name != name)
            throw DataError("weight entry " + std::to_string(i) + " is '" + e.name +
                            "', model expects '" + name + "'");
        if (e.shape != t.shape())
            throw DataError("weight '" + name + "' has shape " + shape_str(e.shape) +
                            ", model expects " + shape_str(t.shape()));
        std::copy(e.data.begin(), e.data.end(), t.mutable_data().begin());
    }
}

}  // namespace artauth::core
