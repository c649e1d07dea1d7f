#include "artauth/harness/train.hpp"

#include <cmath>
#include <numeric>

#include "artauth/core/ops.hpp"
#include "artauth/core/optim.hpp"
#include "artauth/core/rng.hpp"

namespace artauth::harness {

namespace {

core::Tensor<float> assemble_batch(const std::vector<Sample>& samples,
                                   const std::vector<std::size_t>& order,
                                   std::size_t begin, std::size_t end,
                                   std::int64_t input) {
    const auto bs = static_cast<std::int64_t>(end - begin);
    auto images = core::Tensor<float>::zeros({bs, input, input, 3});
    auto dst = images.mutable_data();
    const std::size_t stride = static_cast<std::size_t>(input * input * 3);
    for (std::size_t i = begin; i < end; ++i) {
        const auto& px = samples[order[i]].pixels;
        if (px.size() != stride)
            throw UsageError("sample pixel buffer does not match model input size");
        std::copy(px.begin(), px.end(), dst.begin() + (i - begin) * stride);
    }
    return images;
}

struct PassResult {
    double loss = 0.0;  // weighted mean over the full set
    double acc = 0.0;
};

PassResult evaluation_pass(const Classifier& model, const std::vector<Sample>& samples,
                           std::int64_t batch_size) {
    core::NoGradGuard ng;
    std::vector<std::size_t> order(samples.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    double loss_sum = 0.0, weight_sum = 0.0;
    std::int64_t correct = 0;
    for (std::size_t i = 0; i < samples.size(); i += static_cast<std::size_t>(batch_size)) {
        const std::size_t end = std::min(samples.size(), i + static_cast<std::size_t>(batch_size));
        auto images = assemble_batch(samples, order, i, end, model.input_size());
        auto scores = model.score_batch(images);
        std::vector<float> targets, weights;
        double wsum = 0.0;
        for (std::size_t k = i; k < end; ++k) {
            targets.push_back(samples[order[k]].target);
            weights.push_back(samples[order[k]].weight);
            wsum += samples[order[k]].weight;
        }
        const auto loss = core::weighted_bce(scores, targets, weights);
        loss_sum += static_cast<double>(loss.item()) * wsum;
        weight_sum += wsum;
        auto sd = scores.data();
        for (std::size_t k = i; k < end; ++k) {
            const bool auth = samples[order[k]].target > 0.5f;
            if ((sd[k - i] >= 0.5f) == auth) ++correct;
        }
    }
    PassResult r;
    r.loss = loss_sum / weight_sum;
    r.acc = static_cast<double>(correct) / static_cast<double>(samples.size());
    return r;
}

}  // namespace

TrainResult train_one(Classifier& model, const std::vector<Sample>& train,
                      const std::vector<Sample>& val, const TrainRunConfig& cfg,
                      const TrainHooks& hooks) {
    if (train.empty() || val.empty())
        throw UsageError("train_one needs nonempty train and validation sets");
    core::Rng rng(cfg.seed);
    auto& params = model.params();
    auto adam = core::AdamState<float>::for_params(params, static_cast<float>(cfg.learning_rate));

    TrainResult result;
    core::ParamSet<float> best = params.clone_values();
    std::int64_t epochs_since_best = 0;

    std::vector<std::size_t> order(train.size());
    std::iota(order.begin(), order.end(), std::size_t{0});

    for (int epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
        rng.shuffle(order.begin(), order.end());
        const std::uint64_t clamp_before = core::bce_clamp_events();
        double loss_sum = 0.0, weight_sum = 0.0;
        for (std::size_t i = 0; i < train.size(); i += static_cast<std::size_t>(cfg.batch_size)) {
            const std::size_t end =
                std::min(train.size(), i + static_cast<std::size_t>(cfg.batch_size));
            auto images = assemble_batch(train, order, i, end, model.input_size());
            auto scores = model.score_batch(images);
            std::vector<float> targets, weights;
            double wsum = 0.0;
            for (std::size_t k = i; k < end; ++k) {
                targets.push_back(train[order[k]].target);
                weights.push_back(train[order[k]].weight);
                wsum += train[order[k]].weight;
            }
            auto loss = core::weighted_bce(scores, targets, weights);
            const double lv = loss.item();
            if (!std::isfinite(lv))
                throw NumericError("non-finite training loss in epoch " +
                                   std::to_string(epoch) + " (batch at " +
                                   std::to_string(i) + ")");
            params.zero_grads();
            loss.backward();
            if (cfg.train_head_only) {
                // zeroed gradients keep Adam moments at zero, so non-head
                // parameters stay put
                for (auto& [name, t] : params.items())
                    if (name.rfind("head", 0) != 0) t.zero_grad();
            }
            core::adam_step(params, adam);
            loss_sum += lv * wsum;
            weight_sum += wsum;
        }

        const auto vp = evaluation_pass(model, val, cfg.batch_size);
        double monitored = vp.loss;
        if (hooks.val_loss_override) monitored = hooks.val_loss_override(epoch, vp.loss);

        EpochLog log;
        log.epoch = epoch;
        log.train_loss = loss_sum / weight_sum;
        log.val_loss = monitored;
        log.val_acc = vp.acc;
        log.clamp_events = core::bce_clamp_events() - clamp_before;
        result.log.push_back(log);
        if (hooks.on_epoch) hooks.on_epoch(log);

        if (result.best_val_loss - monitored > cfg.min_delta) {
            result.best_val_loss = monitored;
            result.best_epoch = epoch;
            best = params.clone_values();
            epochs_since_best = 0;
        } else {
            epochs_since_best += 1;
            if (epochs_since_best >= cfg.patience) {
                result.stopped_early = true;
                break;
            }
        }
    }
    params.copy_values_from(best);
    return result;
}

std::vector<PatchPrediction> predict(const Classifier& model,
                                     const std::vector<Sample>& samples,
                                     std::int64_t batch_size) {
    core::NoGradGuard ng;
    std::vector<PatchPrediction> out;
    out.reserve(samples.size());
    std::vector<std::size_t> order(samples.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    for (std::size_t i = 0; i < samples.size(); i += static_cast<std::size_t>(batch_size)) {
        const std::size_t end = std::min(samples.size(), i + static_cast<std::size_t>(batch_size));
        auto images = assemble_batch(samples, order, i, end, model.input_size());
        auto scores = model.score_batch(images);
        auto sd = scores.data();
        for (std::size_t k = i; k < end; ++k) {
            PatchPrediction p;
            p.painting_id = samples[k].painting_id;
            p.patch_index = samples[k].patch_index;
            p.label = samples[k].label;
            p.score = static_cast<double>(sd[k - i]);
            out.push_back(std::move(p));
        }
    }
    return out;
}

}  // namespace artauth::harness
