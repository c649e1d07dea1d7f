#include <CLI11.hpp>
#include <json.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "artauth/data/manifest.hpp"
#include "artauth/data/patches.hpp"
#include "artauth/data/plan.hpp"
#include "artauth/harness/campaign.hpp"
#include "artauth/harness/selfcheck.hpp"
#include "artauth/kernels/kernels.hpp"
#include "artauth/models/swin_geometry.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace artauth;

namespace {

std::string default_cache() {
    if (const char* env = std::getenv("ARTAUTH_CACHE")) return env;
    return "";
}

harness::ArchSpec arch_from_json(const json& j) {
    harness::ArchSpec s;
    if (j.contains("preset")) s = harness::ArchSpec::preset(j.at("preset").get<std::string>());
    if (j.contains("name")) s.name = j.at("name").get<std::string>();
    if (s.name.empty()) throw UsageError("architecture entry needs a name or a preset");
    if (j.contains("kind")) {
        const auto kind = j.at("kind").get<std::string>();
        if (kind == "swin") s.kind = harness::ArchSpec::Kind::swin;
        else if (kind == "baseline") s.kind = harness::ArchSpec::Kind::baseline;
        else throw UsageError("unknown architecture kind '" + kind + "'");
    }
    if (j.contains("input")) {
        const auto in = j.at("input").get<std::int64_t>();
        s.swin_cfg.input_h = s.swin_cfg.input_w = in;
        s.cnn_cfg.input_h = s.cnn_cfg.input_w = in;
    }
    if (j.contains("embed_dim")) s.swin_cfg.embed_dim = j.at("embed_dim").get<std::int64_t>();
    if (j.contains("stage3_pairs"))
        s.swin_cfg.stage3_pairs = j.at("stage3_pairs").get<std::int64_t>();
    if (j.contains("window")) s.swin_cfg.window = j.at("window").get<std::int64_t>();
    if (j.contains("heads")) {
        const auto h = j.at("heads").get<std::vector<std::int64_t>>();
        if (h.size() != 4) throw UsageError("heads must list four per-stage counts");
        std::copy(h.begin(), h.end(), s.swin_cfg.heads.begin());
    }
    if (j.contains("mlp_ratio")) s.swin_cfg.mlp_ratio = j.at("mlp_ratio").get<std::int64_t>();
    if (j.contains("rel_pos_bias")) s.swin_cfg.rel_pos_bias = j.at("rel_pos_bias").get<bool>();
    if (j.contains("allow_small_grids"))
        s.swin_cfg.allow_small_grids = j.at("allow_small_grids").get<bool>();
    if (j.contains("widths")) s.cnn_cfg.widths = j.at("widths").get<std::vector<std::int64_t>>();
    if (j.contains("blocks")) s.cnn_cfg.blocks = j.at("blocks").get<std::vector<std::int64_t>>();
    if (j.contains("kernel")) s.cnn_cfg.kernel = j.at("kernel").get<std::int64_t>();
    if (j.contains("use_skip")) s.cnn_cfg.use_skip = j.at("use_skip").get<bool>();
    return s;
}

int cmd_prepare(const std::string& manifest_path, const std::string& cache, bool force) {
    if (cache.empty())
        throw UsageError("no cache directory (use --out or set ARTAUTH_CACHE)");
    const auto manifest = data::read_manifest(manifest_path);
    const std::string manifest_dir = fs::path(manifest_path).parent_path().string();
    const auto stats = data::build_patch_cache(manifest, manifest_dir, cache, force);
    std::cout << "prepared " << stats.paintings << " paintings, " << stats.patches
              << " patches (authentic " << stats.per_label[0] << ", imitation "
              << stats.per_label[1] << ", proxy " << stats.per_label[2] << ")\n";
    if (!stats.failures.empty()) {
        std::cerr << stats.failures.size() << " file(s) failed:\n";
        for (const auto& f : stats.failures) std::cerr << "  " << f << "\n";
        return 1;
    }
    return 0;
}

int cmd_plan(const std::string& cache, const std::string& mode_str, int n,
             std::uint64_t seed, const std::string& out,
             const std::vector<std::int64_t>& t_auth,
             const std::vector<std::int64_t>& t_con) {
    const auto mode = data::parse_contrast_mode(mode_str);
    auto targets = data::PlanTargets::defaults(mode);
    const auto fill = [](data::PartitionTargets& t, const std::vector<std::int64_t>& v) {
        if (v.empty()) return;
        if (v.size() != 3) throw UsageError("targets need exactly three counts: train,val,test");
        t = {v[0], v[1], v[2]};
    };
    fill(targets.authentic, t_auth);
    fill(targets.contrast, t_con);

    const auto index = data::read_cache_index(cache);
    std::vector<data::PaintingRecord> records;
    for (const auto& p : index) records.push_back({p.id, "", p.label, p.note});
    const auto plan = data::build_plan(records, mode, targets, n, seed);
    data::save_plan(out, plan);
    std::cout << "plan with " << plan.splits.size() << " experiments written to " << out
              << "\n";
    return 0;
}

int cmd_run(const std::string& cache, const std::string& plan_path, const std::string& out,
            const std::string& config_path, const std::vector<std::string>& arch_flags,
            int jobs, bool dry_run, bool force) {
    if (cache.empty())
        throw UsageError("no cache directory (use --cache or set ARTAUTH_CACHE)");
    harness::CampaignConfig cfg;
    cfg.cache_dir = cache;
    cfg.out_dir = out;
    cfg.jobs = jobs;

    if (!config_path.empty()) {
        std::ifstream is(config_path);
        if (!is) throw DataError("cannot open config '" + config_path + "'");
        json j = json::parse(is);
        if (j.contains("train")) {
            const auto& t = j.at("train");
            if (t.contains("batch_size")) cfg.train.batch_size = t.at("batch_size").get<std::int64_t>();
            if (t.contains("learning_rate")) cfg.train.learning_rate = t.at("learning_rate").get<double>();
            if (t.contains("patience")) cfg.train.patience = t.at("patience").get<std::int64_t>();
            if (t.contains("min_delta")) cfg.train.min_delta = t.at("min_delta").get<double>();
            if (t.contains("max_epochs")) cfg.train.max_epochs = t.at("max_epochs").get<std::int64_t>();
        }
        if (j.contains("histogram_bins")) cfg.histogram_bins = j.at("histogram_bins").get<int>();
        if (j.contains("save_weights")) cfg.save_weights = j.at("save_weights").get<bool>();
        if (j.contains("architectures"))
            for (const auto& a : j.at("architectures")) cfg.archs.push_back(arch_from_json(a));
    }
    for (const auto& a : arch_flags) cfg.archs.push_back(harness::ArchSpec::preset(a));
    if (cfg.archs.empty())
        throw UsageError("no architectures selected (use --arch or a config file)");

    const auto plan = data::load_plan(plan_path);
    cfg.mode = plan.mode;
    cfg.master_seed = plan.master_seed;
    const auto index = data::read_cache_index(cache);

    if (dry_run) {
        std::cout << "campaign: " << plan.splits.size() << " experiments, mode "
                  << data::contrast_mode_name(plan.mode) << ", master seed "
                  << plan.master_seed << "\n";
        for (const auto& a : cfg.archs)
            std::cout << "  arch " << a.name << ": " << a.parameter_count()
                      << " parameters, input " << a.input_size() << "\n";
        for (std::size_t e = 0; e < plan.splits.size(); ++e) {
            std::int64_t tr = 0, va = 0, te = 0;
            for (const auto& [id, part] : plan.splits[e].assignment) {
                tr += part == data::Part::train;
                va += part == data::Part::val;
                te += part == data::Part::test;
            }
            std::cout << "  experiment " << e << ": " << tr << " train / " << va
                      << " val / " << te << " test paintings\n";
        }
        return 0;
    }

    if (fs::exists(fs::path(out) / "campaign_meta.json") && !force)
        throw UsageError("output '" + out + "' already holds a campaign; pass --force to overwrite");

    harness::run_campaign(cfg, plan, index,
                          [](const std::string& line) { std::cout << line << "\n"; });
    std::cout << "reports written to " << (fs::path(out) / "reports").string() << "\n";
    return 0;
}

int cmd_report(const std::string& out) {
    harness::CampaignConfig cfg;
    auto result = harness::load_campaign_runs(out, cfg);
    harness::write_reports(cfg, result);
    std::cout << "reports rebuilt under " << (fs::path(out) / "reports").string() << "\n";
    return 0;
}

int cmd_selfcheck(bool induce_mask_bug) {
    if (induce_mask_bug) swin::set_corrupt_masks_hook(true);
    std::cout << "kernel backend: " << kernels::backend_name() << "\n";
    const auto results = harness::run_selfchecks();
    int failed = 0;
    for (const auto& r : results) {
        std::cout << (r.pass ? "PASS" : "FAIL") << "  " << r.name;
        if (!r.detail.empty()) std::cout << "  [" << r.detail << "]";
        std::cout << "\n";
        failed += r.pass ? 0 : 1;
    }
    std::cout << (failed ? "selfcheck FAILED (" + std::to_string(failed) + ")" : "selfcheck OK")
              << "\n";
    return failed ? 3 : 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"art-authentication training and evaluation pipeline"};
    app.require_subcommand(1);

    std::string manifest, cache = default_cache(), out, plan_path, config_path, mode = "standard";
    std::vector<std::string> archs;
    std::vector<std::int64_t> t_auth, t_con;
    int n = 20, jobs = 1;
    std::uint64_t seed = 42;
    bool force = false, dry_run = false, induce_mask_bug = false;

    auto* prepare = app.add_subcommand("prepare", "decode images and build the patch cache");
    prepare->add_option("--manifest", manifest, "manifest CSV")->required();
    prepare->add_option("--out,--cache", cache, "cache directory");
    prepare->add_flag("--force", force, "rebuild an existing cache");

    auto* plan = app.add_subcommand("plan", "build seeded train/val/test partitions");
    plan->add_option("--cache", cache, "patch cache directory")->required();
    plan->add_option("--mode", mode, "standard|refined");
    plan->add_option("--n", n, "number of experiments");
    plan->add_option("--seed", seed, "master seed");
    plan->add_option("--out", out, "plan file")->required();
    plan->add_option("--targets-authentic", t_auth, "train,val,test painting counts")
        ->delimiter(',');
    plan->add_option("--targets-contrast", t_con, "train,val,test painting counts")
        ->delimiter(',');

    auto* run = app.add_subcommand("run", "train and evaluate the campaign");
    run->add_option("--cache", cache, "patch cache directory");
    run->add_option("--plan", plan_path, "plan file")->required();
    run->add_option("--out", out, "output directory")->required();
    run->add_option("--config", config_path, "campaign config JSON");
    run->add_option("--arch", archs, "architecture preset (repeatable)");
    run->add_option("--jobs", jobs, "parallel runs");
    run->add_flag("--force", force, "overwrite an existing campaign");
    run->add_flag("--dry-run", dry_run, "print the resolved plan and exit");

    auto* report = app.add_subcommand("report", "rebuild reports from run artifacts");
    report->add_option("--out", out, "campaign output directory")->required();

    auto* selfcheck = app.add_subcommand("selfcheck", "run the property suite at toy scale");
    selfcheck->add_flag("--induce-mask-bug", induce_mask_bug,
                        "negative control: corrupt attention masks")
        ->group("");

    CLI11_PARSE(app, argc, argv);

    try {
        if (prepare->parsed()) return cmd_prepare(manifest, cache, force);
        if (plan->parsed()) return cmd_plan(cache, mode, n, seed, out, t_auth, t_con);
        if (run->parsed())
            return cmd_run(cache, plan_path, out, config_path, archs, jobs, dry_run, force);
        if (report->parsed()) return cmd_report(out);
        if (selfcheck->parsed()) return cmd_selfcheck(induce_mask_bug);
    } catch (const UsageError& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return 2;
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const DataError& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return 3;
    }
    return 2;
}
