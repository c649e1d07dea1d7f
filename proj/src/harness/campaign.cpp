#include "artauth/harness/campaign.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "artauth/core/rng.hpp"
#include "artauth/core/serialize.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace artauth::harness {

namespace {

std::string fmt6(double v) {
    if (std::isnan(v)) return "nan";
    char buf[48];
    std::snprintf(buf, sizeof buf, "%.6f", v);
    return buf;
}

std::string fmt3(double v) {
    if (std::isnan(v)) return "n/a";
    char buf[48];
    std::snprintf(buf, sizeof buf, "%.3f", v);
    return buf;
}

std::string mean_sd_cell(const MeanSd& ms) {
    if (ms.n == 0) return "n/a";
    return fmt3(ms.mean) + " (" + fmt3(ms.sd) + ")";
}

void atomic_write(const fs::path& path, const std::string& content) {
    const fs::path tmp = path.string() + ".tmp";
    {
        std::ofstream os(tmp, std::ios::trunc | std::ios::binary);
        if (!os) throw DataError("cannot write '" + tmp.string() + "'");
        os << content;
    }
    fs::rename(tmp, path);
}

class SwinClassifier final : public Classifier {
public:
    SwinClassifier(const ArchSpec& spec, std::uint64_t seed)
        : name_(spec.name), model_(spec.swin_cfg, seed) {}
    core::Tensor<float> score_batch(const core::Tensor<float>& images) const override {
        return model_.forward(images);
    }
    core::ParamSet<float>& params() override { return model_.params(); }
    std::int64_t input_size() const override { return model_.config().input_h; }
    const std::string& name() const override { return name_; }
    std::int64_t parameter_count() const override {
        return model_.params().scalar_count();
    }

private:
    std::string name_;
    swin::SwinModel<float> model_;
};

class BaselineClassifier final : public Classifier {
public:
    BaselineClassifier(const ArchSpec& spec, std::uint64_t seed)
        : name_(spec.name), model_(spec.cnn_cfg, seed) {}
    core::Tensor<float> score_batch(const core::Tensor<float>& images) const override {
        return model_.forward(images);
    }
    core::ParamSet<float>& params() override { return model_.params(); }
    std::int64_t input_size() const override { return model_.config().input_h; }
    const std::string& name() const override { return name_; }
    std::int64_t parameter_count() const override {
        return model_.params().scalar_count();
    }

private:
    std::string name_;
    cnn::BaselineModel<float> model_;
};

}  // namespace

ArchSpec ArchSpec::preset(const std::string& name) {
    ArchSpec s;
    s.name = name;
    if (name == "swin-tiny") {
        s.kind = Kind::swin;
        s.swin_cfg = swin::SwinConfig::tiny();
    } else if (name == "swin-base") {
        s.kind = Kind::swin;
        s.swin_cfg = swin::SwinConfig::base();
    } else if (name == "swin-toy") {
        s.kind = Kind::swin;
        s.swin_cfg.input_h = s.swin_cfg.input_w = 56;
        s.swin_cfg.embed_dim = 24;
        s.swin_cfg.stage3_pairs = 2;
        s.swin_cfg.window = 7;
        s.swin_cfg.heads = {3, 6, 12, 24};
        s.swin_cfg.allow_small_grids = true;
        s.swin_cfg.variant = "swin-toy";
    } else if (name == "baseline") {
        s.kind = Kind::baseline;
        s.cnn_cfg = cnn::BaselineConfig{};
    } else {
        throw UsageError("unknown architecture preset '" + name +
                         "' (swin-tiny|swin-base|swin-toy|baseline)");
    }
    return s;
}

std::int64_t ArchSpec::input_size() const {
    return kind == Kind::swin ? swin_cfg.input_h : cnn_cfg.input_h;
}

std::int64_t ArchSpec::parameter_count() const {
    if (fixed_param_count >= 0) return fixed_param_count;
    return kind == Kind::swin ? swin::count_parameters(swin_cfg)
                              : cnn::count_parameters(cnn_cfg);
}

std::unique_ptr<Classifier> make_classifier(const ArchSpec& spec, std::uint64_t seed) {
    if (spec.kind == ArchSpec::Kind::swin)
        return std::make_unique<SwinClassifier>(spec, seed);
    return std::make_unique<BaselineClassifier>(spec, seed);
}

std::uint64_t run_seed(std::uint64_t experiment_seed, const std::string& arch_name) {
    return core::Rng::derive(experiment_seed, core::hash_str(arch_name.c_str()));
}

std::vector<Sample> load_samples(const std::string& cache_dir,
                                 const std::vector<data::CachedPainting>& index,
                                 const data::ExperimentSplit& split, data::Part part,
                                 data::ContrastMode mode, std::int64_t input_size) {
    std::vector<Sample> out;
    for (const auto& painting : index) {
        if (split.part_of(painting.id) != part) continue;
        for (const auto& ref : painting.patches) {
            Sample s;
            s.painting_id = painting.id;
            s.patch_index = ref.index;
            s.label = painting.label;
            s.target = is_authentic(painting.label) ? 1.0f : 0.0f;
            s.weight = static_cast<float>(data::patch_weight(painting.label, mode));
            const auto img = data::load_patch(cache_dir, ref, input_size);
            s.pixels = img.rgb;
            out.push_back(std::move(s));
        }
    }
    return out;
}

namespace {

void write_run_artifacts(const fs::path& run_dir, const RunRecord& rec) {
    fs::create_directories(run_dir);
    {
        std::ostringstream os;
        os << "epoch, train_loss, val_loss, val_acc, clamp_events\n";
        for (const auto& l : rec.log)
            os << l.epoch << ", " << fmt6(l.train_loss) << ", " << fmt6(l.val_loss) << ", "
               << fmt6(l.val_acc) << ", " << l.clamp_events << "\n";
        atomic_write(run_dir / "log.csv", os.str());
    }
    {
        std::ostringstream os;
        os << "painting_id, patch_index, label, score\n";
        for (const auto& p : rec.test_preds)
            os << p.painting_id << ", " << p.patch_index << ", " << label_name(p.label)
               << ", " << fmt6(p.score) << "\n";
        atomic_write(run_dir / "predictions.csv", os.str());
    }
    {
        std::ostringstream os;
        os << "status " << (rec.ok ? "ok" : "failed") << "\n";
        os << "best_epoch " << rec.best_epoch << "\n";
        if (!rec.ok) os << "error " << rec.error << "\n";
        atomic_write(run_dir / "status.txt", os.str());
    }
}

std::string run_dir_name(int experiment, const std::string& arch) {
    return "exp" + std::to_string(experiment) + "_" + arch;
}

// An architecture broken enough that its parameters cannot be counted still
// gets a row (its runs are recorded as failed).
std::int64_t safe_param_count(const ArchSpec& spec) {
    try {
        return spec.parameter_count();
    } catch (const Error&) {
        return -1;
    }
}

}  // namespace

CampaignResult run_campaign(const CampaignConfig& cfg, const data::ExperimentPlan& plan,
                            const std::vector<data::CachedPainting>& index,
                            const std::function<void(const std::string&)>& log_line) {
    if (cfg.archs.empty()) throw UsageError("campaign has no architectures");
    const fs::path out(cfg.out_dir);
    fs::create_directories(out / "runs");

    // Campaign metadata (consumed by the report path).
    {
        json meta;
        meta["mode"] = data::contrast_mode_name(plan.mode);
        meta["master_seed"] = plan.master_seed;
        meta["experiments"] = plan.splits.size();
        meta["histogram_bins"] = cfg.histogram_bins;
        json archs = json::array();
        for (const auto& a : cfg.archs)
            archs.push_back({{"name", a.name}, {"parameters", safe_param_count(a)}});
        meta["architectures"] = archs;
        atomic_write(out / "campaign_meta.json", meta.dump(2) + "\n");
    }

    struct Task {
        int experiment;
        std::size_t arch_idx;
    };
    std::vector<Task> tasks;
    for (std::size_t e = 0; e < plan.splits.size(); ++e)
        for (std::size_t a = 0; a < cfg.archs.size(); ++a)
            tasks.push_back({static_cast<int>(e), a});

    CampaignResult result;
    result.runs.resize(tasks.size());
    std::atomic<std::size_t> next{0};
    std::mutex log_mu;
    const auto say = [&](const std::string& s) {
        if (!log_line) return;
        std::lock_guard<std::mutex> lock(log_mu);
        log_line(s);
    };

    const auto worker = [&]() {
        for (;;) {
            const std::size_t t = next.fetch_add(1);
            if (t >= tasks.size()) return;
            const auto& task = tasks[t];
            const auto& spec = cfg.archs[task.arch_idx];
            const auto& split = plan.splits[static_cast<std::size_t>(task.experiment)];
            RunRecord rec;
            rec.experiment = task.experiment;
            rec.arch = spec.name;
            try {
                const std::uint64_t rseed = run_seed(split.seed, spec.name);
                auto model = make_classifier(spec, core::Rng::derive(rseed, 0));
                auto train = load_samples(cfg.cache_dir, index, split, data::Part::train,
                                          plan.mode, model->input_size());
                auto val = load_samples(cfg.cache_dir, index, split, data::Part::val,
                                        plan.mode, model->input_size());
                auto test = load_samples(cfg.cache_dir, index, split, data::Part::test,
                                         plan.mode, model->input_size());
                say("run exp" + std::to_string(task.experiment) + " " + spec.name + ": " +
                    std::to_string(train.size()) + " train / " + std::to_string(val.size()) +
                    " val / " + std::to_string(test.size()) + " test patches");
                TrainRunConfig rc = cfg.train;
                rc.arch = spec.name;
                rc.weight_mode = plan.mode;
                rc.seed = core::Rng::derive(rseed, 1);
                const auto tr = train_one(*model, train, val, rc);
                rec.log = tr.log;
                rec.best_epoch = tr.best_epoch;
                rec.test_preds = predict(*model, test, rc.batch_size);
                rec.ok = true;
                if (cfg.save_weights) {
                    core::save_params((out / "runs" /
                                       (run_dir_name(task.experiment, spec.name)) /
                                       "weights.bin")
                                          .string(),
                                      model->params());
                }
                say("run exp" + std::to_string(task.experiment) + " " + spec.name +
                    ": done, best epoch " + std::to_string(tr.best_epoch));
            } catch (const std::exception& e) {
                rec.ok = false;
                rec.error = e.what();
                say("run exp" + std::to_string(task.experiment) + " " + spec.name +
                    " FAILED: " + rec.error);
            }
            write_run_artifacts(out / "runs" / run_dir_name(task.experiment, spec.name), rec);
            result.runs[t] = std::move(rec);
        }
    };

    const int jobs = std::max(1, cfg.jobs);
    if (jobs == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (int j = 0; j < jobs; ++j) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }

    write_reports(cfg, result);
    return result;
}

namespace {

struct ArchAggregate {
    std::vector<double> patch_acc, painting_acc;
    std::vector<double> acc_auth, acc_con, acc_imi, acc_pro;
    std::vector<double> precision, recall;
    std::vector<double> scores;     // pooled patch scores
    std::vector<bool> correctness;  // pooled patch correctness
    int failed = 0;
};

}  // namespace

void write_reports(const CampaignConfig& cfg, const CampaignResult& result) {
    const fs::path out(cfg.out_dir);
    const fs::path rep = out / "reports";
    fs::create_directories(rep);

    std::map<std::string, ArchAggregate> agg;
    std::vector<std::string> arch_order;
    for (const auto& spec : cfg.archs) {
        arch_order.push_back(spec.name);
        agg[spec.name];
    }
    for (const auto& rec : result.runs) {
        auto& a = agg[rec.arch];
        if (!rec.ok) {
            a.failed += 1;
            continue;
        }
        const auto m = compute_metrics(rec.test_preds);
        a.patch_acc.push_back(m.patch_acc);
        a.painting_acc.push_back(m.painting_acc);
        a.acc_auth.push_back(m.acc_authentic);
        a.acc_con.push_back(m.acc_contrast);
        a.acc_imi.push_back(m.acc_imitation);
        a.acc_pro.push_back(m.acc_proxy);
        a.precision.push_back(m.precision);
        a.recall.push_back(m.recall);
        for (const auto& p : rec.test_preds) {
            a.scores.push_back(p.score);
            a.correctness.push_back(patch_correct(p));
        }
    }

    const auto params_of = [&](const std::string& name) -> std::int64_t {
        for (const auto& s : cfg.archs)
            if (s.name == name) return safe_param_count(s);
        return 0;
    };

    // Overall accuracies (Table 4 shape).
    {
        std::ostringstream os;
        os << "architecture, parameters, patch_accuracy_mean, patch_accuracy_sd, "
              "painting_accuracy_mean, painting_accuracy_sd\n";
        for (const auto& name : arch_order) {
            const auto& a = agg[name];
            const auto pm = mean_sd(a.patch_acc);
            const auto im = mean_sd(a.painting_acc);
            os << name << ", " << params_of(name) << ", " << fmt6(pm.mean) << ", "
               << fmt6(pm.sd) << ", " << fmt6(im.mean) << ", " << fmt6(im.sd) << "\n";
        }
        atomic_write(rep / "table_overall.csv", os.str());
    }
    // Per-class painting accuracies (Table 5 shape).
    {
        std::ostringstream os;
        os << "architecture, acc_authentic_mean, acc_authentic_sd, acc_contrast_mean, "
              "acc_contrast_sd, acc_imitations_mean, acc_imitations_sd, acc_proxies_mean, "
              "acc_proxies_sd\n";
        for (const auto& name : arch_order) {
            const auto& a = agg[name];
            const auto au = mean_sd(a.acc_auth);
            const auto co = mean_sd(a.acc_con);
            const auto im = mean_sd(a.acc_imi);
            const auto pr = mean_sd(a.acc_pro);
            os << name << ", " << fmt6(au.mean) << ", " << fmt6(au.sd) << ", "
               << fmt6(co.mean) << ", " << fmt6(co.sd) << ", " << fmt6(im.mean) << ", "
               << fmt6(im.sd) << ", " << fmt6(pr.mean) << ", " << fmt6(pr.sd) << "\n";
        }
        atomic_write(rep / "table_perclass.csv", os.str());
    }
    // Accuracy / precision / recall (Table 7 shape).
    {
        std::ostringstream os;
        os << "architecture, painting_accuracy_mean, painting_accuracy_sd, precision_mean, "
              "precision_sd, recall_mean, recall_sd\n";
        for (const auto& name : arch_order) {
            const auto& a = agg[name];
            const auto ac = mean_sd(a.painting_acc);
            const auto pr = mean_sd(a.precision);
            const auto rc = mean_sd(a.recall);
            os << name << ", " << fmt6(ac.mean) << ", " << fmt6(ac.sd) << ", "
               << fmt6(pr.mean) << ", " << fmt6(pr.sd) << ", " << fmt6(rc.mean) << ", "
               << fmt6(rc.sd) << "\n";
        }
        atomic_write(rep / "table_precision_recall.csv", os.str());
    }
    // Pairwise confusion overlap (Table 8 shape).
    for (std::size_t i = 0; i < arch_order.size(); ++i) {
        for (std::size_t j = i + 1; j < arch_order.size(); ++j) {
            const auto& a = agg[arch_order[i]];
            const auto& b = agg[arch_order[j]];
            if (a.correctness.empty() || a.correctness.size() != b.correctness.size())
                continue;  // a failed run left the sets unaligned
            const auto cells = confusion_overlap(a.correctness, b.correctness);
            std::ostringstream os;
            os << ", " << arch_order[j] << "_correct, " << arch_order[j] << "_incorrect\n";
            os << arch_order[i] << "_correct, " << fmt6(cells.both_correct) << ", "
               << fmt6(cells.a_only) << "\n";
            os << arch_order[i] << "_incorrect, " << fmt6(cells.b_only) << ", "
               << fmt6(cells.neither) << "\n";
            atomic_write(rep / ("table_overlap_" + arch_order[i] + "_vs_" + arch_order[j] +
                                ".csv"),
                         os.str());
        }
    }
    // Histograms, CSV plus a small SVG rendering.
    for (const auto& name : arch_order) {
        const auto& a = agg[name];
        if (a.scores.empty()) continue;
        const auto h = prediction_histograms(a.scores, a.correctness, cfg.histogram_bins);
        {
            std::ostringstream os;
            os << "bin_low, bin_high, correct, incorrect\n";
            for (int b = 0; b < cfg.histogram_bins; ++b) {
                os << fmt6(static_cast<double>(b) / cfg.histogram_bins) << ", "
                   << fmt6(static_cast<double>(b + 1) / cfg.histogram_bins) << ", "
                   << h.correct[static_cast<std::size_t>(b)] << ", "
                   << h.incorrect[static_cast<std::size_t>(b)] << "\n";
            }
            atomic_write(rep / ("histograms_" + name + ".csv"), os.str());
        }
        {
            const int W = 640, panel_h = 200, pad = 40;
            std::int64_t peak = 1;
            for (auto v : h.correct) peak = std::max(peak, v);
            std::int64_t peak_i = 1;
            for (auto v : h.incorrect) peak_i = std::max(peak_i, v);
            std::ostringstream os;
            os << "<svg xmlns='http://www.w3.org/2000/svg' width='" << W << "' height='"
               << 2 * panel_h + 3 * pad << "'>\n";
            const auto panel = [&](const std::vector<std::int64_t>& series, int top,
                                   std::int64_t pk, const char* color, const char* title) {
                os << "<text x='" << pad << "' y='" << top - 6 << "' font-size='12'>"
                   << name << " " << title << "</text>\n";
                const double bw = static_cast<double>(W - 2 * pad) / cfg.histogram_bins;
                for (int b = 0; b < cfg.histogram_bins; ++b) {
                    const double frac = static_cast<double>(series[static_cast<std::size_t>(b)]) /
                                        static_cast<double>(pk);
                    const double bh = frac * (panel_h - 10);
                    os << "<rect x='" << fmt3(pad + b * bw) << "' y='"
                       << fmt3(top + (panel_h - bh)) << "' width='" << fmt3(bw) << "' height='"
                       << fmt3(bh) << "' fill='" << color << "'/>\n";
                }
                os << "<line x1='" << pad << "' y1='" << top + panel_h << "' x2='" << W - pad
                   << "' y2='" << top + panel_h << "' stroke='black'/>\n";
            };
            panel(h.incorrect, pad, peak_i, "#c44", "incorrect predictions");
            panel(h.correct, panel_h + 2 * pad, peak, "#48c", "correct predictions");
            os << "</svg>\n";
            atomic_write(rep / ("histograms_" + name + ".svg"), os.str());
        }
    }
    // Human-readable summary mirroring the table layouts.
    {
        std::ostringstream os;
        os << "campaign report (" << data::contrast_mode_name(cfg.mode) << " contrast, "
           << "master seed " << cfg.master_seed << ")\n\n";
        os << "overall accuracies, mean (SD) over experiments\n";
        os << "  architecture        parameters   patches          paintings\n";
        for (const auto& name : arch_order) {
            const auto& a = agg[name];
            char line[160];
            std::snprintf(line, sizeof line, "  %-18s %10lld   %-16s %-16s\n", name.c_str(),
                          static_cast<long long>(params_of(name)),
                          mean_sd_cell(mean_sd(a.patch_acc)).c_str(),
                          mean_sd_cell(mean_sd(a.painting_acc)).c_str());
            os << line;
            if (a.failed > 0)
                os << "    (" << a.failed << " failed run" << (a.failed > 1 ? "s" : "")
                   << " excluded)\n";
        }
        os << "\nper-class painting accuracies, mean (SD)\n";
        os << "  architecture        authentic        contrast         imitations       proxies\n";
        for (const auto& name : arch_order) {
            const auto& a = agg[name];
            char line[200];
            std::snprintf(line, sizeof line, "  %-18s %-16s %-16s %-16s %-16s\n", name.c_str(),
                          mean_sd_cell(mean_sd(a.acc_auth)).c_str(),
                          mean_sd_cell(mean_sd(a.acc_con)).c_str(),
                          mean_sd_cell(mean_sd(a.acc_imi)).c_str(),
                          mean_sd_cell(mean_sd(a.acc_pro)).c_str());
            os << line;
        }
        os << "\npainting accuracy / precision / recall, mean (SD)\n";
        for (const auto& name : arch_order) {
            const auto& a = agg[name];
            char line[200];
            std::snprintf(line, sizeof line, "  %-18s %-16s %-16s %-16s\n", name.c_str(),
                          mean_sd_cell(mean_sd(a.painting_acc)).c_str(),
                          mean_sd_cell(mean_sd(a.precision)).c_str(),
                          mean_sd_cell(mean_sd(a.recall)).c_str());
            os << line;
        }
        for (std::size_t i = 0; i < arch_order.size(); ++i) {
            for (std::size_t j = i + 1; j < arch_order.size(); ++j) {
                const auto& a = agg[arch_order[i]];
                const auto& b = agg[arch_order[j]];
                if (a.correctness.empty() || a.correctness.size() != b.correctness.size())
                    continue;
                const auto cells = confusion_overlap(a.correctness, b.correctness);
                os << "\npatch prediction overlap, " << arch_order[i] << " (rows) vs "
                   << arch_order[j] << " (columns), % of test patches\n";
                char l1[120], l2[120];
                std::snprintf(l1, sizeof l1, "  correct    %7.1f%%  %7.1f%%\n",
                              cells.both_correct, cells.a_only);
                std::snprintf(l2, sizeof l2, "  incorrect  %7.1f%%  %7.1f%%\n", cells.b_only,
                              cells.neither);
                os << "             correct   incorrect\n" << l1 << l2;
            }
        }
        atomic_write(rep / "report.txt", os.str());
    }
}

CampaignResult load_campaign_runs(const std::string& out_dir, CampaignConfig& cfg_out) {
    const fs::path out(out_dir);
    std::ifstream ms(out / "campaign_meta.json");
    if (!ms)
        throw DataError("no campaign at '" + out_dir + "' (campaign_meta.json missing)");
    json meta = json::parse(ms);
    cfg_out.out_dir = out_dir;
    cfg_out.mode = data::parse_contrast_mode(meta.at("mode").get<std::string>());
    cfg_out.master_seed = meta.at("master_seed").get<std::uint64_t>();
    cfg_out.histogram_bins = meta.at("histogram_bins").get<int>();
    const int n = meta.at("experiments").get<int>();
    cfg_out.archs.clear();
    // Only names and counts matter for report assembly; shapes stay opaque.
    struct NamedCount {
        std::string name;
        std::int64_t params;
    };
    std::vector<NamedCount> archs;
    for (const auto& a : meta.at("architectures"))
        archs.push_back({a.at("name").get<std::string>(), a.at("parameters").get<std::int64_t>()});
    for (const auto& a : archs) {
        ArchSpec spec;
        spec.name = a.name;
        spec.fixed_param_count = a.params;
        cfg_out.archs.push_back(spec);
    }

    CampaignResult result;
    for (int e = 0; e < n; ++e) {
        for (const auto& a : archs) {
            RunRecord rec;
            rec.experiment = e;
            rec.arch = a.name;
            const fs::path dir = out / "runs" / ("exp" + std::to_string(e) + "_" + a.name);
            std::ifstream st(dir / "status.txt");
            if (!st) throw DataError("missing run artifacts in '" + dir.string() + "'");
            std::string key, value;
            st >> key >> value;
            rec.ok = value == "ok";
            std::ifstream ps(dir / "predictions.csv");
            if (ps) {
                std::string line;
                std::getline(ps, line);
                while (std::getline(ps, line)) {
                    if (line.empty()) continue;
                    std::stringstream ls(line);
                    PatchPrediction p;
                    std::string field;
                    std::getline(ls, field, ',');
                    p.painting_id = field.substr(0, field.find_last_not_of(' ') + 1);
                    std::getline(ls, field, ',');
                    p.patch_index = std::stoi(field);
                    std::getline(ls, field, ',');
                    const auto b = field.find_first_not_of(' ');
                    p.label = data::parse_label(field.substr(b));
                    std::getline(ls, field, ',');
                    p.score = std::stod(field);
                    rec.test_preds.push_back(std::move(p));
                }
            }
            result.runs.push_back(std::move(rec));
        }
    }
    return result;
}

}  // namespace artauth::harness
