#pragma once

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "artauth/data/patches.hpp"
#include "artauth/data/plan.hpp"
#include "artauth/harness/train.hpp"
#include "artauth/models/baseline.hpp"
#include "artauth/models/swin.hpp"

namespace artauth::harness {

struct ArchSpec {
    enum class Kind { swin, baseline };
    std::string name;
    Kind kind = Kind::swin;
    swin::SwinConfig swin_cfg;
    cnn::BaselineConfig cnn_cfg;
    std::int64_t fixed_param_count = -1;  // set when rebuilt from run artifacts

    // Built-ins: swin-tiny, swin-base, swin-toy, baseline.
    static ArchSpec preset(const std::string& name);

    std::int64_t input_size() const;
    std::int64_t parameter_count() const;
};

std::unique_ptr<Classifier> make_classifier(const ArchSpec& spec, std::uint64_t seed);

struct CampaignConfig {
    std::string cache_dir;
    std::string out_dir;
    data::ContrastMode mode = data::ContrastMode::standard;
    int jobs = 1;
    int histogram_bins = 50;
    bool save_weights = false;
    TrainRunConfig train;
    std::vector<ArchSpec> archs;
    std::uint64_t master_seed = 42;
};

struct RunRecord {
    int experiment = 0;
    std::string arch;
    bool ok = false;
    std::string error;
    std::vector<PatchPrediction> test_preds;
    std::vector<EpochLog> log;
    int best_epoch = 0;
};

struct CampaignResult {
    std::vector<RunRecord> runs;  // experiment-major, architecture order as configured
};

// Patch samples of one partition, resolved at the model input size. Order is
// the cache index order restricted to the partition (deterministic).
std::vector<Sample> load_samples(const std::string& cache_dir,
                                 const std::vector<data::CachedPainting>& index,
                                 const data::ExperimentSplit& split, data::Part part,
                                 data::ContrastMode mode, std::int64_t input_size);

// Trains and evaluates every architecture on the identical partitions; failed
// runs are recorded and the campaign continues. Artifacts land under
// out_dir/runs/, reports under out_dir/reports/.
CampaignResult run_campaign(const CampaignConfig& cfg, const data::ExperimentPlan& plan,
                            const std::vector<data::CachedPainting>& index,
                            const std::function<void(const std::string&)>& log_line = {});

void write_reports(const CampaignConfig& cfg, const CampaignResult& result);

// Rebuilds the result from per-run artifacts (the `report` path).
CampaignResult load_campaign_runs(const std::string& out_dir, CampaignConfig& cfg_out);

// Derivation of the per-run seed from an experiment seed and the architecture
// name; exposed so reruns and tests agree.
std::uint64_t run_seed(std::uint64_t experiment_seed, const std::string& arch_name);

}  // namespace artauth::harness
