#include "artauth/models/baseline.hpp"

namespace artauth::cnn {

std::vector<std::pair<std::string, Shape>> enumerate_params(const BaselineConfig& cfg) {
    cfg.validate();
    std::vector<std::pair<std::string, Shape>> out;
    std::int64_t cin = 3;
    for (std::size_t s = 0; s < cfg.widths.size(); ++s) {
        const std::int64_t cout = cfg.widths[s];
        const std::string sn = "stage" + std::to_string(s);
        const std::string entry = sn + (s == 0 ? ".stem" : ".down");
        out.emplace_back(entry + ".w", Shape{cfg.kernel, cfg.kernel, cin, cout});
        out.emplace_back(entry + ".b", Shape{cout});
        out.emplace_back(entry + "_norm.g", Shape{cout});
        out.emplace_back(entry + "_norm.b", Shape{cout});
        for (std::int64_t bi = 0; bi < cfg.blocks[s]; ++bi) {
            const std::string bn = sn + ".blk" + std::to_string(bi);
            out.emplace_back(bn + ".conv.w", Shape{cfg.kernel, cfg.kernel, cout, cout});
            out.emplace_back(bn + ".conv.b", Shape{cout});
            out.emplace_back(bn + ".norm.g", Shape{cout});
            out.emplace_back(bn + ".norm.b", Shape{cout});
        }
        cin = cout;
    }
    out.emplace_back("head.w", Shape{cfg.widths.back(), 1});
    out.emplace_back("head.b", Shape{1});
    return out;
}

std::int64_t count_parameters(const BaselineConfig& cfg) {
    std::int64_t n = 0;
    for (const auto& [name, shape] : enumerate_params(cfg)) n += shape_numel(shape);
    return n;
}

}  // namespace artauth::cnn
