#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "artauth/data/manifest.hpp"

namespace artauth::harness {

struct PatchPrediction {
    std::string painting_id;
    int patch_index = 0;
    data::Label label = data::Label::authentic;
    double score = 0.0;  // authenticity in (0,1)
};

struct PaintingPrediction {
    std::string painting_id;
    data::Label label = data::Label::authentic;
    double score = 0.0;
    bool decided_authentic = false;
    int patch_count = 0;
};

inline bool is_authentic(data::Label l) { return l == data::Label::authentic; }
inline bool patch_correct(const PatchPrediction& p) {
    return (p.score >= 0.5) == is_authentic(p.label);
}

// Mean of the constituent patch scores; authentic iff the mean reaches 0.5
// (ties go to authentic).
double aggregate_painting(const std::vector<double>& patch_scores);
std::vector<PaintingPrediction> aggregate_paintings(const std::vector<PatchPrediction>& preds);

// Painting-level rates unless noted. Metrics over an absent class are NaN,
// not zero. Positive class for precision/recall is authentic.
struct MetricsSlice {
    double patch_acc = 0.0;
    double painting_acc = 0.0;
    double acc_authentic = 0.0;
    double acc_contrast = 0.0;
    double acc_imitation = 0.0;
    double acc_proxy = 0.0;
    double precision = 0.0;
    double recall = 0.0;
    std::int64_t n_patches = 0;
    std::int64_t n_paintings = 0;
};

MetricsSlice compute_metrics(const std::vector<PatchPrediction>& preds);

// Mean and sample standard deviation helpers for the across-experiment
// columns (NaN entries are skipped; empty -> NaN).
struct MeanSd {
    double mean = 0.0;
    double sd = 0.0;
    int n = 0;
};
MeanSd mean_sd(const std::vector<double>& values);

// Percentages of patches predicted correctly/incorrectly by two
// architectures over the same patch set; cells sum to 100.
struct OverlapCells {
    double both_correct = 0.0;
    double a_only = 0.0;
    double b_only = 0.0;
    double neither = 0.0;
};
OverlapCells confusion_overlap(const std::vector<bool>& correct_a,
                               const std::vector<bool>& correct_b);

// Fixed-width bins over [0,1]; a score of exactly 1 lands in the last bin.
struct HistogramSeries {
    std::vector<std::int64_t> correct;
    std::vector<std::int64_t> incorrect;
};
HistogramSeries prediction_histograms(const std::vector<double>& scores,
                                      const std::vector<bool>& correct, int bins);

}  // namespace artauth::harness
