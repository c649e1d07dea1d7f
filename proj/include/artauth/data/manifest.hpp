#pragma once

#include <string>
#include <vector>

#include "artauth/common.hpp"

namespace artauth::data {

enum class Label { authentic, imitation, proxy };

const char* label_name(Label l);
Label parse_label(const std::string& s);

// One catalogued artwork.
struct PaintingRecord {
    std::string id;
    std::string path;
    Label label = Label::authentic;
    std::string note;
};

// Comma-separated with header `painting_id, path, label, note`; the note
// field keeps any trailing commas. Duplicate ids and unknown labels are data
// errors.
std::vector<PaintingRecord> read_manifest(const std::string& path);
void write_manifest(const std::string& path, const std::vector<PaintingRecord>& records);

}  // namespace artauth::data
