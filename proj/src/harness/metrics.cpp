#include "artauth/harness/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

namespace artauth::harness {

namespace {
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
}

double aggregate_painting(const std::vector<double>& patch_scores) {
    if (patch_scores.empty())
        throw UsageError("painting aggregation over an empty patch set");
    double s = 0.0;
    for (double v : patch_scores) s += v;
    return s / static_cast<double>(patch_scores.size());
}

std::vector<PaintingPrediction> aggregate_paintings(const std::vector<PatchPrediction>& preds) {
    std::map<std::string, PaintingPrediction> by_id;
    for (const auto& p : preds) {
        auto& agg = by_id[p.painting_id];
        if (agg.patch_count == 0) {
            agg.painting_id = p.painting_id;
            agg.label = p.label;
        }
        agg.score += p.score;
        agg.patch_count += 1;
    }
    std::vector<PaintingPrediction> out;
    out.reserve(by_id.size());
    for (auto& [id, agg] : by_id) {
        agg.score /= agg.patch_count;
        agg.decided_authentic = agg.score >= 0.5;
        out.push_back(std::move(agg));
    }
    return out;
}

MetricsSlice compute_metrics(const std::vector<PatchPrediction>& preds) {
    if (preds.empty()) throw UsageError("compute_metrics on an empty prediction set");
    MetricsSlice m;
    m.n_patches = static_cast<std::int64_t>(preds.size());
    std::int64_t patch_ok = 0;
    for (const auto& p : preds) patch_ok += patch_correct(p) ? 1 : 0;
    m.patch_acc = static_cast<double>(patch_ok) / static_cast<double>(preds.size());

    const auto paintings = aggregate_paintings(preds);
    m.n_paintings = static_cast<std::int64_t>(paintings.size());
    std::int64_t ok = 0, tp = 0, fp = 0, fn = 0;
    std::int64_t n_auth = 0, ok_auth = 0, n_con = 0, ok_con = 0;
    std::int64_t n_imi = 0, ok_imi = 0, n_pro = 0, ok_pro = 0;
    for (const auto& p : paintings) {
        const bool correct = p.decided_authentic == is_authentic(p.label);
        ok += correct ? 1 : 0;
        if (is_authentic(p.label)) {
            ++n_auth;
            ok_auth += correct ? 1 : 0;
            if (p.decided_authentic) ++tp;
            else ++fn;
        } else {
            ++n_con;
            ok_con += correct ? 1 : 0;
            if (p.decided_authentic) ++fp;
            if (p.label == data::Label::imitation) {
                ++n_imi;
                ok_imi += correct ? 1 : 0;
            } else {
                ++n_pro;
                ok_pro += correct ? 1 : 0;
            }
        }
    }
    const auto rate = [](std::int64_t num, std::int64_t den) {
        return den == 0 ? kNaN : static_cast<double>(num) / static_cast<double>(den);
    };
    m.painting_acc = rate(ok, m.n_paintings);
    m.acc_authentic = rate(ok_auth, n_auth);
    m.acc_contrast = rate(ok_con, n_con);
    m.acc_imitation = rate(ok_imi, n_imi);
    m.acc_proxy = rate(ok_pro, n_pro);
    m.precision = rate(tp, tp + fp);
    m.recall = rate(tp, tp + fn);
    return m;
}

MeanSd mean_sd(const std::vector<double>& values) {
    MeanSd out;
    double sum = 0.0;
    for (double v : values) {
        if (std::isnan(v)) continue;
        sum += v;
        out.n += 1;
    }
    if (out.n == 0) {
        out.mean = kNaN;
        out.sd = kNaN;
        return out;
    }
    out.mean = sum / out.n;
    if (out.n < 2) {
        out.sd = 0.0;
        return out;
    }
    double ss = 0.0;
    for (double v : values) {
        if (std::isnan(v)) continue;
        ss += (v - out.mean) * (v - out.mean);
    }
    out.sd = std::sqrt(ss / (out.n - 1));
    return out;
}

OverlapCells confusion_overlap(const std::vector<bool>& correct_a,
                               const std::vector<bool>& correct_b) {
    if (correct_a.size() != correct_b.size() || correct_a.empty())
        throw UsageError("confusion_overlap needs two equal-length nonempty masks");
    std::int64_t bb = 0, ao = 0, bo = 0, nn = 0;
    for (std::size_t i = 0; i < correct_a.size(); ++i) {
        if (correct_a[i] && correct_b[i]) ++bb;
        else if (correct_a[i]) ++ao;
        else if (correct_b[i]) ++bo;
        else ++nn;
    }
    const double total = static_cast<double>(correct_a.size());
    return {100.0 * bb / total, 100.0 * ao / total, 100.0 * bo / total, 100.0 * nn / total};
}

HistogramSeries prediction_histograms(const std::vector<double>& scores,
                                      const std::vector<bool>& correct, int bins) {
    if (bins < 1) throw UsageError("histogram needs at least one bin");
    if (scores.size() != correct.size())
        throw UsageError("histogram scores/correctness length mismatch");
    HistogramSeries h;
    h.correct.assign(static_cast<std::size_t>(bins), 0);
    h.incorrect.assign(static_cast<std::size_t>(bins), 0);
    for (std::size_t i = 0; i < scores.size(); ++i) {
        int b = static_cast<int>(scores[i] * bins);
        if (b < 0) b = 0;
        if (b >= bins) b = bins - 1;
        (correct[i] ? h.correct : h.incorrect)[static_cast<std::size_t>(b)] += 1;
    }
    return h;
}

}  // namespace artauth::harness
