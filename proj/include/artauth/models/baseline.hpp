#pragma once

#include <string>
#include <vector>

#include "artauth/core/init.hpp"
#include "artauth/core/ops.hpp"
#include "artauth/core/tensor.hpp"

// Small convolutional contender for the comparison harness: stacked conv
// stages with stride-2 downsampling between them, optional residual blocks,
// per-channel batch-independent normalization, global average pooling and a
// single sigmoid output.

namespace artauth::cnn {

using core::Tensor;

struct BaselineConfig {
    std::int64_t input_h = 224;
    std::int64_t input_w = 224;
    std::vector<std::int64_t> widths{16, 32, 64};
    std::vector<std::int64_t> blocks{2, 2, 2};
    std::int64_t kernel = 3;
    bool use_skip = true;
    std::string variant = "baseline";

    void validate() const {
        if (widths.empty() || widths.size() != blocks.size())
            throw ConfigError("baseline config: widths and blocks lists must have equal nonzero length");
        for (auto v : widths)
            if (v < 1) throw ConfigError("baseline config: widths must be positive");
        for (auto v : blocks)
            if (v < 1) throw ConfigError("baseline config: blocks must be positive");
        if (kernel < 1 || kernel % 2 == 0)
            throw ConfigError("baseline config: kernel size must be odd and positive");
    }
};

std::vector<std::pair<std::string, Shape>> enumerate_params(const BaselineConfig& cfg);
std::int64_t count_parameters(const BaselineConfig& cfg);

template <typename T>
class BaselineModel {
public:
    BaselineModel(BaselineConfig cfg, std::uint64_t seed) : cfg_(std::move(cfg)) {
        cfg_.validate();
        core::Rng rng(seed);
        const auto conv = [&](const std::string& name, std::int64_t cin, std::int64_t cout) {
            Tensor<T> w = Tensor<T>::zeros({cfg_.kernel, cfg_.kernel, cin, cout});
            core::he_normal_fill(w, cfg_.kernel * cfg_.kernel * cin, rng);
            Tensor<T> b = Tensor<T>::zeros({cout});
            params_.add(name + ".w", w);
            params_.add(name + ".b", b);
            return std::pair<Tensor<T>, Tensor<T>>(w, b);
        };
        const auto norm = [&](const std::string& name, std::int64_t c) {
            Tensor<T> g = Tensor<T>::full({c}, T(1));
            Tensor<T> b = Tensor<T>::zeros({c});
            params_.add(name + ".g", g);
            params_.add(name + ".b", b);
            return std::pair<Tensor<T>, Tensor<T>>(g, b);
        };
        std::int64_t cin = 3;
        for (std::size_t s = 0; s < cfg_.widths.size(); ++s) {
            Stage stage;
            const std::int64_t cout = cfg_.widths[s];
            const std::string sn = "stage" + std::to_string(s);
            // The first stage keeps full resolution, later stages enter
            // through a stride-2 projection.
            auto [ew, eb] = conv(sn + (s == 0 ? ".stem" : ".down"), cin, cout);
            stage.entry_w = ew;
            stage.entry_b = eb;
            auto [eg, ebb] = norm(sn + (s == 0 ? ".stem_norm" : ".down_norm"), cout);
            stage.entry_norm_g = eg;
            stage.entry_norm_b = ebb;
            for (std::int64_t bi = 0; bi < cfg_.blocks[s]; ++bi) {
                Block blk;
                const std::string bn = sn + ".blk" + std::to_string(bi);
                auto [w, b] = conv(bn + ".conv", cout, cout);
                blk.w = w;
                blk.b = b;
                auto [g, bb] = norm(bn + ".norm", cout);
                blk.norm_g = g;
                blk.norm_b = bb;
                stage.blocks.push_back(blk);
            }
            stages_.push_back(stage);
            cin = cout;
        }
        {
            Tensor<T> w = Tensor<T>::zeros({cfg_.widths.back(), 1});
            core::he_normal_fill(w, cfg_.widths.back(), rng);
            head_w_ = w;
            head_b_ = Tensor<T>::zeros({1});
            params_.add("head.w", head_w_);
            params_.add("head.b", head_b_);
        }
    }

    Tensor<T> forward(const Tensor<T>& images) const {
        if (images.rank() != 4 || images.dim(1) != cfg_.input_h ||
            images.dim(2) != cfg_.input_w || images.dim(3) != 3)
            throw ShapeError("input " + shape_str(images.shape()) +
                             " does not match baseline config input " +
                             std::to_string(cfg_.input_h) + "x" +
                             std::to_string(cfg_.input_w) + "x3");
        const std::int64_t bs = images.dim(0);
        const std::int64_t pad = cfg_.kernel / 2;
        Tensor<T> x = images;
        for (std::size_t s = 0; s < stages_.size(); ++s) {
            const auto& st = stages_[s];
            x = core::conv2d(x, st.entry_w, st.entry_b, s == 0 ? 1 : 2, pad);
            x = normed(x, st.entry_norm_g, st.entry_norm_b);
            x = core::relu(x);
            for (const auto& blk : st.blocks) {
                auto y = core::conv2d(x, blk.w, blk.b, 1, pad);
                y = normed(y, blk.norm_g, blk.norm_b);
                y = core::relu(y);
                x = cfg_.use_skip ? core::add(x, y) : y;
            }
        }
        auto flat = core::reshape(x, {bs, x.dim(1) * x.dim(2), x.dim(3)});
        auto pooled = core::mean_middle(flat);
        auto logit = core::linear(pooled, head_w_, head_b_);
        return core::reshape(core::sigmoid(logit), {bs});
    }

    core::ParamSet<T>& params() { return params_; }
    const core::ParamSet<T>& params() const { return params_; }
    const BaselineConfig& config() const { return cfg_; }

private:
    struct Block {
        Tensor<T> w, b, norm_g, norm_b;
    };
    struct Stage {
        Tensor<T> entry_w, entry_b, entry_norm_g, entry_norm_b;
        std::vector<Block> blocks;
    };

    static Tensor<T> normed(const Tensor<T>& x, const Tensor<T>& g, const Tensor<T>& b) {
        auto flat = core::reshape(x, {x.dim(0), x.dim(1) * x.dim(2), x.dim(3)});
        return core::reshape(core::channel_norm(flat, g, b), x.shape());
    }

    BaselineConfig cfg_;
    core::ParamSet<T> params_;
    std::vector<Stage> stages_;
    Tensor<T> head_w_, head_b_;
};

}  // namespace artauth::cnn
