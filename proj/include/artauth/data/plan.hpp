#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "artauth/data/manifest.hpp"

namespace artauth::data {

enum class ContrastMode { standard, refined };
const char* contrast_mode_name(ContrastMode m);
ContrastMode parse_contrast_mode(const std::string& s);

// Imitation patches weigh 10 in standard-contrast training, 1 otherwise.
double patch_weight(Label label, ContrastMode mode);

enum class Part { train, val, test, unused };
const char* part_name(Part p);

struct PartitionTargets {
    std::int64_t train = 0, val = 0, test = 0;
    std::int64_t total() const { return train + val + test; }
};

struct PlanTargets {
    PartitionTargets authentic;
    PartitionTargets contrast;
    // Full-scale defaults: authentic 520/78/73 with contrast 523/65/65 for the
    // standard mode, 87/20/30 per class for the refined mode.
    static PlanTargets defaults(ContrastMode mode);
};

struct ExperimentSplit {
    std::uint64_t seed = 0;
    std::map<std::string, Part> assignment;  // painting id -> partition

    Part part_of(const std::string& id) const {
        auto it = assignment.find(id);
        return it == assignment.end() ? Part::unused : it->second;
    }
};

// N seeded painting-level splits; every patch of a painting follows its
// painting. Weights are per painting id, filled by assign_weights.
struct ExperimentPlan {
    ContrastMode mode = ContrastMode::standard;
    std::uint64_t master_seed = 0;
    PlanTargets targets;
    std::vector<ExperimentSplit> splits;
    std::map<std::string, double> painting_weight;
};

ExperimentPlan build_plan(const std::vector<PaintingRecord>& manifest, ContrastMode mode,
                          const PlanTargets& targets, int n, std::uint64_t master_seed);

void assign_weights(ExperimentPlan& plan, const std::map<std::string, Label>& labels);

void save_plan(const std::string& path, const ExperimentPlan& plan);
ExperimentPlan load_plan(const std::string& path);

}  // namespace artauth::data
