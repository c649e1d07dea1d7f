#include "artauth/data/manifest.hpp"

#include <algorithm>
#include <fstream>
#include <unordered_set>

namespace artauth::data {

const char* label_name(Label l) {
    switch (l) {
        case Label::authentic: return "authentic";
        case Label::imitation: return "imitation";
        case Label::proxy: return "proxy";
    }
    return "?";
}

Label parse_label(const std::string& s) {
    if (s == "authentic") return Label::authentic;
    if (s == "imitation") return Label::imitation;
    if (s == "proxy") return Label::proxy;
    throw DataError("unknown label '" + s + "' (expected authentic|imitation|proxy)");
}

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

}  // namespace

std::vector<PaintingRecord> read_manifest(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw DataError("cannot open manifest '" + path + "'");
    std::string line;
    if (!std::getline(is, line)) throw DataError("manifest '" + path + "' is empty");
    if (line.rfind("painting_id", 0) != 0)
        throw DataError("manifest '" + path +
                        "' must start with the header 'painting_id, path, label, note'");
    std::vector<PaintingRecord> out;
    std::unordered_set<std::string> seen;
    std::size_t lineno = 1;
    while (std::getline(is, line)) {
        ++lineno;
        if (trim(line).empty()) continue;
        // three fixed fields; everything after the third comma is the note
        std::size_t p1 = line.find(',');
        std::size_t p2 = p1 == std::string::npos ? p1 : line.find(',', p1 + 1);
        std::size_t p3 = p2 == std::string::npos ? p2 : line.find(',', p2 + 1);
        if (p1 == std::string::npos || p2 == std::string::npos)
            throw DataError("manifest '" + path + "' line " + std::to_string(lineno) +
                            ": expected painting_id, path, label[, note]");
        PaintingRecord r;
        r.id = trim(line.substr(0, p1));
        r.path = trim(line.substr(p1 + 1, p2 - p1 - 1));
        const std::string label_field =
            trim(p3 == std::string::npos ? line.substr(p2 + 1) : line.substr(p2 + 1, p3 - p2 - 1));
        r.label = parse_label(label_field);
        if (p3 != std::string::npos) r.note = trim(line.substr(p3 + 1));
        if (r.id.empty())
            throw DataError("manifest '" + path + "' line " + std::to_string(lineno) +
                            ": empty painting_id");
        if (!seen.insert(r.id).second)
            throw DataError("manifest '" + path + "': duplicate painting_id '" + r.id + "'");
        out.push_back(std::move(r));
    }
    return out;
}

void write_manifest(const std::string& path, const std::vector<PaintingRecord>& records) {
    std::ofstream os(path, std::ios::trunc);
    if (!os) throw DataError("cannot open manifest '" + path + "' for writing");
    os << "painting_id, path, label, note\n";
    for (const auto& r : records)
        os << r.id << ", " << r.path << ", " << label_name(r.label) << ", " << r.note << "\n";
    if (!os) throw DataError("write failure on manifest '" + path + "'");
}

}  // namespace artauth::data
