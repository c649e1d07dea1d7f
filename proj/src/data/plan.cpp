#include "artauth/data/plan.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "artauth/core/rng.hpp"

namespace artauth::data {

const char* contrast_mode_name(ContrastMode m) {
    return m == ContrastMode::standard ? "standard" : "refined";
}

ContrastMode parse_contrast_mode(const std::string& s) {
    if (s == "standard") return ContrastMode::standard;
    if (s == "refined") return ContrastMode::refined;
    throw UsageError("unknown contrast mode '" + s + "' (expected standard|refined)");
}

double patch_weight(Label label, ContrastMode mode) {
    if (label == Label::imitation && mode == ContrastMode::standard) return 10.0;
    return 1.0;
}

const char* part_name(Part p) {
    switch (p) {
        case Part::train: return "train";
        case Part::val: return "val";
        case Part::test: return "test";
        case Part::unused: return "unused";
    }
    return "?";
}

PlanTargets PlanTargets::defaults(ContrastMode mode) {
    PlanTargets t;
    if (mode == ContrastMode::standard) {
        t.authentic = {520, 78, 73};
        t.contrast = {523, 65, 65};
    } else {
        t.authentic = {87, 20, 30};
        t.contrast = {87, 20, 30};
    }
    return t;
}

namespace {

void assign_pool(std::vector<std::string> pool, const PartitionTargets& tg, core::Rng& rng,
                 std::map<std::string, Part>& out, const char* pool_name) {
    if (static_cast<std::int64_t>(pool.size()) < tg.total())
        throw DataError(std::string("plan targets need ") + std::to_string(tg.total()) +
                        " " + pool_name + " paintings, manifest provides " +
                        std::to_string(pool.size()));
    std::sort(pool.begin(), pool.end());  // canonical order before shuffling
    rng.shuffle(pool.begin(), pool.end());
    std::int64_t i = 0;
    for (std::int64_t k = 0; k < tg.train; ++k) out[pool[static_cast<std::size_t>(i++)]] = Part::train;
    for (std::int64_t k = 0; k < tg.val; ++k) out[pool[static_cast<std::size_t>(i++)]] = Part::val;
    for (std::int64_t k = 0; k < tg.test; ++k) out[pool[static_cast<std::size_t>(i++)]] = Part::test;
    for (; i < static_cast<std::int64_t>(pool.size()); ++i)
        out[pool[static_cast<std::size_t>(i)]] = Part::unused;
}

}  // namespace

ExperimentPlan build_plan(const std::vector<PaintingRecord>& manifest, ContrastMode mode,
                          const PlanTargets& targets, int n, std::uint64_t master_seed) {
    if (n < 1) throw UsageError("plan needs at least one experiment");
    std::vector<std::string> authentic, contrast;
    for (const auto& r : manifest) {
        if (r.label == Label::authentic) {
            authentic.push_back(r.id);
        } else if (r.label == Label::imitation || mode == ContrastMode::standard) {
            // refined mode drops proxies entirely
            contrast.push_back(r.id);
        }
    }
    ExperimentPlan plan;
    plan.mode = mode;
    plan.master_seed = master_seed;
    plan.targets = targets;
    for (int e = 0; e < n; ++e) {
        ExperimentSplit split;
        split.seed = core::Rng::derive(master_seed, static_cast<std::uint64_t>(e));
        core::Rng rng(split.seed);
        assign_pool(authentic, targets.authentic, rng, split.assignment, "authentic");
        assign_pool(contrast, targets.contrast, rng, split.assignment, "contrast");
        plan.splits.push_back(std::move(split));
    }
    return plan;
}

void assign_weights(ExperimentPlan& plan, const std::map<std::string, Label>& labels) {
    plan.painting_weight.clear();
    for (const auto& [id, label] : labels)
        plan.painting_weight[id] = patch_weight(label, plan.mode);
}

void save_plan(const std::string& path, const ExperimentPlan& plan) {
    std::ofstream os(path, std::ios::trunc);
    if (!os) throw DataError("cannot open plan file '" + path + "' for writing");
    os << "artauth-plan v1\n";
    os << "mode " << contrast_mode_name(plan.mode) << "\n";
    os << "master_seed " << plan.master_seed << "\n";
    os << "targets authentic " << plan.targets.authentic.train << " "
       << plan.targets.authentic.val << " " << plan.targets.authentic.test << "\n";
    os << "targets contrast " << plan.targets.contrast.train << " "
       << plan.targets.contrast.val << " " << plan.targets.contrast.test << "\n";
    os << "experiments " << plan.splits.size() << "\n";
    for (std::size_t e = 0; e < plan.splits.size(); ++e) {
        const auto& split = plan.splits[e];
        os << "[experiment " << e << "]\n";
        os << "seed " << split.seed << "\n";
        for (Part part : {Part::train, Part::val, Part::test, Part::unused}) {
            std::vector<std::string> ids;
            for (const auto& [id, p] : split.assignment)
                if (p == part) ids.push_back(id);
            std::sort(ids.begin(), ids.end());
            os << part_name(part);
            for (const auto& id : ids) os << " " << id;
            os << "\n";
        }
    }
    if (!os) throw DataError("write failure on plan file '" + path + "'");
}

ExperimentPlan load_plan(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw DataError("cannot open plan file '" + path + "'");
    std::string line;
    if (!std::getline(is, line) || line != "artauth-plan v1")
        throw DataError("'" + path + "' is not a plan file");
    ExperimentPlan plan;
    std::size_t n_experiments = 0;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        std::istringstream ls(line);
        std::string key;
        ls >> key;
        if (key == "mode") {
            std::string m;
            ls >> m;
            plan.mode = parse_contrast_mode(m);
        } else if (key == "master_seed") {
            ls >> plan.master_seed;
        } else if (key == "targets") {
            std::string which;
            ls >> which;
            PartitionTargets t;
            ls >> t.train >> t.val >> t.test;
            (which == "authentic" ? plan.targets.authentic : plan.targets.contrast) = t;
        } else if (key == "experiments") {
            ls >> n_experiments;
        } else if (key == "[experiment") {
            plan.splits.emplace_back();
        } else if (key == "seed") {
            ls >> plan.splits.back().seed;
        } else if (key == "train" || key == "val" || key == "test" || key == "unused") {
            Part p = key == "train"  ? Part::train
                     : key == "val"  ? Part::val
                     : key == "test" ? Part::test
                                     : Part::unused;
            std::string id;
            while (ls >> id) plan.splits.back().assignment[id] = p;
        } else {
            throw DataError("plan file '" + path + "': unknown directive '" + key + "'");
        }
    }
    if (plan.splits.size() != n_experiments)
        throw DataError("plan file '" + path + "' is truncated");
    return plan;
}

}  // namespace artauth::data
