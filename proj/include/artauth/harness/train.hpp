#pragma once

#include <functional>
#include <limits>
#include <memory>
#include <string>
#include <vector>

#include "artauth/core/tensor.hpp"
#include "artauth/data/plan.hpp"
#include "artauth/harness/metrics.hpp"

namespace artauth::harness {

// Epoch-loop settings; defaults follow the training procedure this harness
// reproduces (batch 32, lr 1e-4, patience 20, minimum delta 0.001).
struct TrainRunConfig {
    std::string arch;
    std::int64_t batch_size = 32;
    double learning_rate = 1e-4;
    std::int64_t patience = 20;
    double min_delta = 0.001;
    std::int64_t max_epochs = 200;
    std::uint64_t seed = 0;
    data::ContrastMode weight_mode = data::ContrastMode::standard;
    // Hook for the frozen-backbone transfer variants; the supported procedure
    // trains everything.
    bool train_head_only = false;
};

// Runtime face of a trainable architecture (float precision).
class Classifier {
public:
    virtual ~Classifier() = default;
    // images [B, in, in, 3] -> scores [B] in (0,1), graph attached
    virtual core::Tensor<float> score_batch(const core::Tensor<float>& images) const = 0;
    virtual core::ParamSet<float>& params() = 0;
    virtual std::int64_t input_size() const = 0;
    virtual const std::string& name() const = 0;
    virtual std::int64_t parameter_count() const = 0;
};

// One resolved patch: pixels at model input size plus its training annotations.
struct Sample {
    std::string painting_id;
    int patch_index = 0;
    data::Label label = data::Label::authentic;
    float target = 0.0f;
    float weight = 1.0f;
    std::vector<float> pixels;
};

struct EpochLog {
    int epoch = 0;
    double train_loss = 0.0;
    double val_loss = 0.0;
    double val_acc = 0.0;
    std::uint64_t clamp_events = 0;
};

struct TrainResult {
    std::vector<EpochLog> log;
    int best_epoch = 0;
    double best_val_loss = std::numeric_limits<double>::infinity();
    bool stopped_early = false;
};

struct TrainHooks {
    // Replaces the monitored validation loss (patience tests).
    std::function<double(int epoch, double real_val_loss)> val_loss_override;
    std::function<void(const EpochLog&)> on_epoch;
};

// Shuffled-batch epochs with validation-loss early stopping; returns with the
// best-validation parameters restored into the model.
TrainResult train_one(Classifier& model, const std::vector<Sample>& train,
                      const std::vector<Sample>& val, const TrainRunConfig& cfg,
                      const TrainHooks& hooks = {});

std::vector<PatchPrediction> predict(const Classifier& model,
                                     const std::vector<Sample>& samples,
                                     std::int64_t batch_size = 32);

}  // namespace artauth::harness
