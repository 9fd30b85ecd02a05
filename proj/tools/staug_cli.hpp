#pragma once

// `staug` command-line front end. Subcommands: synth, bgs, augment, build, eval, report.
//
// Every subcommand accepts `--config file.json`; keys match the long flag names with
// dashes replaced by underscores, and flags given on the command line win. The resolved
// configuration is echoed as one `effective-config: {...}` line, which can be saved and
// passed back through --config to reproduce the run.
//
// Exit codes: 0 success, 2 usage, 3 data error, 4 internal error.

#include <algorithm>
#include <filesystem>
#include <functional>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "staug/augmentation.hpp"
#include "staug/background_model.hpp"
#include "staug/dataset_builder.hpp"
#include "staug/metrics.hpp"
#include "staug/sequence_io.hpp"
#include "staug/synth.hpp"

namespace staug::cli {

enum ExitCode : int { kOk = 0, kUsage = 2, kDataError = 3, kInternal = 4 };

class UsageError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

namespace detail {

namespace fs = std::filesystem;
using nlohmann::json;

/// Binds a CLI option to a config-file key; the file value applies only when the flag was absent.
class ConfigBinder {
public:
    template <typename T>
    CLI::Option* add(CLI::App& app, const std::string& flag, T& var, const std::string& help) {
        CLI::Option* opt = app.add_option("--" + flag, var, help)->capture_default_str();
        bind(flag, opt, var);
        return opt;
    }

    CLI::Option* add_flag(CLI::App& app, const std::string& flag, bool& var, const std::string& help) {
        CLI::Option* opt = app.add_flag("--" + flag, var, help);
        bind(flag, opt, var);
        return opt;
    }

    /// Applies `--config` (if given) and returns the effective configuration.
    json resolve(const std::string& config_path) {
        json file = json::object();
        if (!config_path.empty()) {
            try {
                file = json::parse(read_text(config_path));
            } catch (const json::exception& e) {
                throw LoadError(config_path, e.what());
            }
            if (!file.is_object()) throw LoadError(config_path, "config must be a JSON object");
            for (const auto& [key, _] : file.items())
                if (key != "command" && !entries_.contains(key)) throw UsageError("config: unknown key '" + key + "'");
        }
        json effective = json::object();
        for (auto& [key, e] : entries_) {
            if (e.opt->count() > 0) supplied_.insert(key);
            if (e.opt->count() == 0 && file.contains(key)) {
                supplied_.insert(key);
                try {
                    e.load(file.at(key));
                } catch (const json::exception& ex) {
                    throw UsageError("config: bad value for '" + key + "': " + ex.what());
                }
            }
            effective[key] = e.dump();
        }
        return effective;
    }

    /// Whether `key` came from the command line or the config file (not a default).
    bool supplied(const std::string& key) const { return supplied_.contains(key); }

private:
    struct Entry {
        CLI::Option* opt;
        std::function<void(const json&)> load;
        std::function<json()> dump;
    };

    template <typename T>
    void bind(const std::string& flag, CLI::Option* opt, T& var) {
        std::string key = flag;
        std::replace(key.begin(), key.end(), '-', '_');
        entries_[key] = Entry{opt, [&var](const json& j) { var = j.get<T>(); }, [&var] { return json(var); }};
    }

    std::map<std::string, Entry> entries_;
    std::set<std::string> supplied_;
};

struct BgOptions {
    int n_samples = 20;
    int min_matches = 2;
    int match_radius = 20;
    int subsample = 16;
    bool no_diffusion = false;

    void add(CLI::App& app, ConfigBinder& cfg) {
        cfg.add(app, "n-samples", n_samples, "Samples per pixel");
        cfg.add(app, "min-matches", min_matches, "Consensus count for background");
        cfg.add(app, "match-radius", match_radius, "Gray-level match distance");
        cfg.add(app, "subsample", subsample, "Expected update period T");
        cfg.add_flag(app, "no-diffusion", no_diffusion, "Disable neighbor diffusion");
    }

    BgParams params(std::uint64_t seed) const {
        BgParams p{n_samples, min_matches, match_radius, subsample, !no_diffusion, seed};
        p.validate();
        return p;
    }
};

inline void echo(std::ostream& out, const std::string& command, json effective) {
    effective["command"] = command;
    out << "effective-config: " << effective.dump() << '\n';
}

inline std::vector<int> parse_int_list(const std::string& text, const std::string& what) {
    std::vector<int> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        try {
            std::size_t used = 0;
            out.push_back(std::stoi(item, &used));
            if (used != item.size()) throw std::invalid_argument(item);
        } catch (const std::exception&) {
            throw UsageError(what + ": '" + item + "' is not an integer");
        }
    }
    return out;
}

inline std::vector<std::string> split_list(const std::string& text) {
    std::vector<std::string> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ','))
        if (!item.empty()) out.push_back(item);
    return out;
}

/// A path is a scene if it has an input/ directory; otherwise its subdirectories are scanned.
inline std::vector<fs::path> expand_scene_dirs(const std::vector<std::string>& paths) {
    std::vector<fs::path> out;
    for (const auto& p : paths) {
        if (fs::is_directory(fs::path(p) / "input")) {
            out.emplace_back(p);
            continue;
        }
        if (!fs::is_directory(p)) throw LoadError(p, "not a directory");
        std::vector<fs::path> subs;
        for (const auto& e : fs::directory_iterator(p))
            if (e.is_directory() && fs::is_directory(e.path() / "input")) subs.push_back(e.path());
        if (subs.empty()) throw LoadError(p, "no scene directories found");
        std::sort(subs.begin(), subs.end());
        out.insert(out.end(), subs.begin(), subs.end());
    }
    return out;
}

/// Prediction file for frame `number` in `dir`: any `<prefix><digits>.png` with that number.
inline std::map<long, fs::path> index_predictions(const fs::path& dir) {
    std::map<long, fs::path> out;
    for (const auto& f : staug::detail::list_indexed(dir, false)) out.emplace(f.number, f.path);
    return out;
}

}  // namespace detail

/// Runs the CLI on argv-style arguments (args[0] is the program name).
inline int run(const std::vector<std::string>& args, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
    using namespace detail;
    CLI::App app{"Spatio-temporal augmentation toolkit for background-subtraction training data", "staug"};
    app.require_subcommand(1);
    bool test_mode = false;
    app.add_flag("--test-mode", test_mode, "Require explicit seeds for reproducible CI runs");

    std::string config;
    auto add_common = [&](CLI::App* sub) { sub->add_option("--config", config, "JSON config file"); };

    // synth
    ConfigBinder synth_cfg;
    std::string synth_preset, synth_out;
    std::uint64_t synth_seed = 1;
    CLI::App* synth = app.add_subcommand("synth", "Generate a synthetic scene from a preset");
    add_common(synth);
    synth_cfg.add(*synth, "preset", synth_preset, "Preset name (moving, bootstrap, static_person, ghost, flicker)");
    synth_cfg.add(*synth, "out", synth_out, "Output scene directory");
    synth_cfg.add(*synth, "seed", synth_seed, "Noise seed");

    // bgs
    ConfigBinder bgs_cfg;
    std::string bgs_scene, bgs_out;
    std::uint64_t bgs_seed = 0;
    BgOptions bgs_bg;
    CLI::App* bgs = app.add_subcommand("bgs", "Run the background subtractor over a scene");
    add_common(bgs);
    bgs_cfg.add(*bgs, "scene", bgs_scene, "Scene directory");
    bgs_cfg.add(*bgs, "out", bgs_out, "Output root (bgmodel/ and fgmask/ are created)");
    bgs_cfg.add(*bgs, "seed", bgs_seed, "Model seed");
    bgs_bg.add(*bgs, bgs_cfg);

    // augment
    ConfigBinder aug_cfg;
    std::string aug_scene, aug_out, aug_mode = "auto";
    int aug_span = kDefaultSpliceSpan;
    CLI::App* augment = app.add_subcommand("augment", "Write a background-spliced copy of a scene");
    add_common(augment);
    aug_cfg.add(*augment, "scene", aug_scene, "Scene directory");
    aug_cfg.add(*augment, "out", aug_out, "Output scene directory");
    aug_cfg.add(*augment, "mode", aug_mode, "corrupt, correct, or auto (from the manifest)");
    aug_cfg.add(*augment, "span", aug_span, "Number of leading frames to splice");

    // build
    ConfigBinder build_cfg;
    std::vector<std::string> build_scenes;
    std::string build_out, build_intervals = "25,50,75,100", build_split = "SDE", build_test_scenes;
    long build_count = 200;
    bool build_bg = false, build_interval = false;
    int build_span = kDefaultSpliceSpan, build_size = kDefaultSampleSize, build_jobs = 1;
    double build_fraction = 0.8;
    std::uint64_t build_seed = 0;
    BgOptions build_bgopt;
    CLI::App* build = app.add_subcommand("build", "Assemble, augment, split and export a training set");
    add_common(build);
    build_cfg.add(*build, "scenes", build_scenes, "Scene directories, or directories of scenes");
    build_cfg.add(*build, "out", build_out, "Dataset output directory");
    build_cfg.add(*build, "samples-per-scene", build_count, "Frames sampled per scene");
    build_cfg.add_flag(*build, "bg-aug", build_bg, "Enable background splicing augmentation");
    build_cfg.add_flag(*build, "interval-aug", build_interval, "Enable zero-interval augmentation");
    build_cfg.add(*build, "span", build_span, "Splice span in frames");
    build_cfg.add(*build, "intervals", build_intervals, "Past-frame offsets, comma separated");
    build_cfg.add(*build, "size", build_size, "Square sample size in pixels");
    build_cfg.add(*build, "split", build_split, "SDE or SIE");
    build_cfg.add(*build, "test-scenes", build_test_scenes, "Comma-separated test scene ids (SIE)");
    build_cfg.add(*build, "train-fraction", build_fraction, "Train share of non-test frames");
    build_cfg.add(*build, "jobs", build_jobs, "Scenes processed in parallel");
    build_cfg.add(*build, "seed", build_seed, "Background-model seed");
    build_bgopt.add(*build, build_cfg);

    // eval
    ConfigBinder eval_cfg;
    std::string eval_pred, eval_dataset, eval_report, eval_subset = "test";
    std::vector<std::string> eval_gt;
    bool eval_frame_mean = false;
    CLI::App* eval = app.add_subcommand("eval", "Score predictions against ground truth");
    add_common(eval);
    eval_cfg.add(*eval, "pred", eval_pred, "Prediction directory");
    eval_cfg.add(*eval, "gt", eval_gt, "Scene directories with ground truth");
    eval_cfg.add(*eval, "dataset", eval_dataset, "Exported dataset directory (alternative to --gt)");
    eval_cfg.add(*eval, "subset", eval_subset, "Dataset subset to score: test, val, train or all");
    eval_cfg.add(*eval, "report", eval_report, "Report path; .json and .csv are written side by side");
    eval_cfg.add_flag(*eval, "frame-mean", eval_frame_mean, "Average per-frame metrics instead of summing counts");

    // report
    ConfigBinder report_cfg;
    std::vector<std::string> report_in;
    std::string report_out;
    CLI::App* report = app.add_subcommand("report", "Merge report JSON files into one CSV/JSON summary");
    add_common(report);
    report_cfg.add(*report, "in", report_in, "Report JSON files");
    report_cfg.add(*report, "out", report_out, "Output report path (.json and .csv)");

    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kOk;
    } catch (const CLI::ParseError& e) {
        err << "usage error: " << e.what() << '\n';
        auto* active = app.get_subcommands().empty() ? &app : app.get_subcommands().front();
        err << active->help();
        return kUsage;
    }

    auto require = [](bool ok, const std::string& msg) {
        if (!ok) throw UsageError(msg);
    };

    try {
        if (synth->parsed()) {
            json eff = synth_cfg.resolve(config);
            require(!test_mode || synth_cfg.supplied("seed"), "synth: --seed is required in test mode");
            require(!synth_preset.empty(), "synth: --preset is required");
            require(!synth_out.empty(), "synth: --out is required");
            auto spec = synth::find_preset(synth_preset, synth_seed);
            if (!spec) {
                std::string names;
                for (const auto& p : synth::scenario_presets()) names += (names.empty() ? "" : ", ") + p.name;
                throw UsageError("unknown preset '" + synth_preset + "' (available: " + names + ")");
            }
            echo(out, "synth", eff);
            const Scene scene = synth::generate_scene(*spec);
            save_scene(scene, synth_out);
            out << "wrote scene '" << scene.manifest.scene_id << "' (" << scene.size() << " frames) to " << synth_out << '\n';
            return kOk;
        }

        if (bgs->parsed()) {
            json eff = bgs_cfg.resolve(config);
            require(!test_mode || bgs_cfg.supplied("seed"), "bgs: --seed is required in test mode");
            require(!bgs_scene.empty() && !bgs_out.empty(), "bgs: --scene and --out are required");
            const BgParams params = bgs_bg.params(bgs_seed);
            echo(out, "bgs", eff);
            const Scene scene = load_scene(bgs_scene);
            const BgsSeries series = run_sequence(scene, params);
            write_series(series, bgs_out);
            out << "wrote " << series.backgrounds.size() << " background images and masks to " << bgs_out << '\n';
            return kOk;
        }

        if (augment->parsed()) {
            json eff = aug_cfg.resolve(config);
            require(!aug_scene.empty() && !aug_out.empty(), "augment: --scene and --out are required");
            echo(out, "augment", eff);
            const Scene scene = load_scene(aug_scene);
            BgAug dir;
            if (aug_mode == "auto") {
                dir = choose_bg_direction(scene.manifest, aug_span);
                if (dir == BgAug::None)
                    throw MissingAnnotationError("augment: no usable foreground_appear_index or clean_frame_index for span " +
                                                 std::to_string(aug_span));
            } else if (aug_mode == "corrupt" || aug_mode == "correct") {
                dir = parse_bg_aug(aug_mode);
            } else {
                throw UsageError("augment: --mode must be corrupt, correct or auto");
            }
            const Scene spliced = splice(scene, dir, aug_span);
            save_scene(spliced, aug_out);
            out << "wrote " << to_string(dir) << "-spliced scene to " << aug_out << '\n';
            for (const auto& note : spliced.provenance) out << "provenance: " << note << '\n';
            return kOk;
        }

        if (build->parsed()) {
            json eff = build_cfg.resolve(config);
            require(!test_mode || build_cfg.supplied("seed"), "build: --seed is required in test mode");
            require(!build_scenes.empty() && !build_out.empty(), "build: --scenes and --out are required");
            BuildConfig bc;
            bc.samples_per_scene = build_count;
            bc.use_bg = build_bg;
            bc.use_interval = build_interval;
            bc.span = build_span;
            bc.intervals = parse_int_list(build_intervals, "--intervals");
            require(bc.intervals.size() == 4, "build: --intervals needs exactly 4 values");
            require(build_size > 0, "build: --size must be positive");
            bc.size = {build_size, build_size};
            try {
                bc.split_mode = parse_split_mode(build_split);
            } catch (const DataError& e) {
                throw UsageError(e.what());
            }
            bc.test_scene_ids = split_list(build_test_scenes);
            require(bc.split_mode == SplitMode::SIE || bc.test_scene_ids.empty(), "build: --test-scenes requires --split SIE");
            require(bc.split_mode == SplitMode::SDE || !bc.test_scene_ids.empty(), "build: SIE split needs --test-scenes");
            bc.train_fraction = build_fraction;
            bc.jobs = std::max(1, build_jobs);
            bc.bg = build_bgopt.params(build_seed);
            echo(out, "build", eff);

            std::vector<Scene> scenes;
            for (const auto& dir : expand_scene_dirs(build_scenes)) {
                Scene s = load_scene(dir);
                const auto diags = validate_scene(s);
                if (!diags.empty()) throw LoadError(dir, "invalid scene: " + diags.front().message);
                scenes.push_back(std::move(s));
            }
            const BuildResult result = build_dataset(scenes, bc);
            const json manifest = export_dataset(result.samples, result.split, build_out);
            const auto& pc = result.plan.predicted;
            if (static_cast<long>(manifest.at("samples").size()) != pc.total())
                throw std::logic_error("build: exported sample count disagrees with the augmentation plan");
            out << "plan: base=" << pc.base << " after_interval=" << pc.after_interval << " after_bg=" << pc.after_bg << '\n';
            out << "exported " << result.samples.size() << " samples (train " << manifest["split"]["train"].size() << ", val "
                << manifest["split"]["val"].size() << ", test " << manifest["split"]["test"].size() << ") to " << build_out << '\n';
            return kOk;
        }

        if (eval->parsed()) {
            json eff = eval_cfg.resolve(config);
            require(!eval_pred.empty() && !eval_report.empty(), "eval: --pred and --report are required");
            require(eval_gt.empty() != eval_dataset.empty(), "eval: give exactly one of --gt or --dataset");
            echo(out, "eval", eff);
            const auto mode = eval_frame_mean ? metrics::SceneAggregation::FrameMean : metrics::SceneAggregation::SummedConfusion;
            auto read_pred = [](const fs::path& file, int width, int height) {
                Image8 img = read_image(file);
                if (img.width() != width || img.height() != height)
                    throw LoadError(file, "prediction size differs from ground truth");
                return metrics::binarize(metrics::to_probability(img));
            };

            std::vector<metrics::SceneResult> results;
            if (!eval_gt.empty()) {
                for (const auto& dir : expand_scene_dirs(eval_gt)) {
                    const Scene scene = load_scene(dir);
                    fs::path pred_dir = eval_pred;
                    if (fs::is_directory(pred_dir / scene.manifest.scene_id)) pred_dir /= scene.manifest.scene_id;
                    if (!fs::is_directory(pred_dir)) throw LoadError(pred_dir, "prediction directory not found");
                    const auto preds = index_predictions(pred_dir);
                    // Prediction files follow the numbering of the scene's input frames.
                    const long base = staug::detail::list_indexed(fs::path(dir) / "input", true).front().number;
                    metrics::SceneEvaluator ev(scene.manifest.scene_id, scene.manifest.category, mode);
                    for (const auto& [idx, gt] : scene.masks) {
                        auto it = preds.find(base + idx);
                        if (it == preds.end())
                            throw LoadError(pred_dir / indexed_name("<prefix>", static_cast<int>(base + idx), 6),
                                            "missing prediction for frame " + std::to_string(idx));
                        ev.add(metrics::confusion(read_pred(it->second, gt.width(), gt.height()), gt));
                    }
                    results.push_back(ev.finish());
                }
            } else {
                const Dataset ds = import_dataset(eval_dataset);
                std::set<std::string> wanted;
                if (eval_subset == "test") wanted.insert(ds.test_ids.begin(), ds.test_ids.end());
                else if (eval_subset == "val") wanted.insert(ds.val_ids.begin(), ds.val_ids.end());
                else if (eval_subset == "train") wanted.insert(ds.train_ids.begin(), ds.train_ids.end());
                else if (eval_subset != "all") throw UsageError("eval: --subset must be test, val, train or all");
                std::map<std::string, metrics::SceneEvaluator> evals;
                std::vector<std::string> order;
                for (const Sample& s : ds.samples) {
                    const std::string id = s.id();
                    if (eval_subset != "all" && !wanted.contains(id)) continue;
                    const fs::path file = fs::path(eval_pred) / (id + ".png");
                    if (!fs::exists(file)) throw LoadError(file, "missing prediction for sample " + id);
                    auto [it, inserted] = evals.try_emplace(s.meta.scene_id, s.meta.scene_id, s.meta.scene_id, mode);
                    if (inserted) order.push_back(s.meta.scene_id);
                    const Image8* weight = s.weight ? &*s.weight : nullptr;
                    it->second.add(metrics::confusion(read_pred(file, s.target.width(), s.target.height()), s.target, weight));
                }
                if (order.empty()) throw DataError("eval: no samples in subset '" + eval_subset + "'");
                for (const auto& id : order) results.push_back(evals.at(id).finish());
            }

            const metrics::Report rep = metrics::make_report(std::move(results));
            fs::path json_path = eval_report, csv_path = eval_report;
            json_path.replace_extension(".json");
            csv_path.replace_extension(".csv");
            write_text_atomic(json_path, metrics::to_json(rep).dump(2) + "\n");
            write_text_atomic(csv_path, metrics::to_csv(rep));
            out << "average FM=" << rep.average.fm << " PWC=" << rep.average.pwc << " over " << rep.scenes.size()
                << " scene(s); wrote " << json_path.string() << " and " << csv_path.string() << '\n';
            return kOk;
        }

        if (report->parsed()) {
            json eff = report_cfg.resolve(config);
            require(!report_in.empty() && !report_out.empty(), "report: --in and --out are required");
            echo(out, "report", eff);
            std::vector<metrics::SceneResult> scenes;
            for (const auto& path : report_in) {
                try {
                    auto part = metrics::scenes_from_json(json::parse(read_text(path)));
                    scenes.insert(scenes.end(), part.begin(), part.end());
                } catch (const json::exception& e) {
                    throw LoadError(path, e.what());
                }
            }
            const metrics::Report rep = metrics::make_report(std::move(scenes));
            fs::path json_path = report_out, csv_path = report_out;
            json_path.replace_extension(".json");
            csv_path.replace_extension(".csv");
            write_text_atomic(json_path, metrics::to_json(rep).dump(2) + "\n");
            write_text_atomic(csv_path, metrics::to_csv(rep));
            out << metrics::to_csv(rep);
            return kOk;
        }
    } catch (const UsageError& e) {
        err << "usage error: " << e.what() << '\n';
        return kUsage;
    } catch (const DataError& e) {
        err << "data error: " << e.what() << '\n';
        return kDataError;
    } catch (const std::filesystem::filesystem_error& e) {
        err << "data error: " << e.what() << '\n';
        return kDataError;
    } catch (const std::exception& e) {
        err << "internal error: " << e.what() << '\n';
        return kInternal;
    }
    return kUsage;
}

}  // namespace staug::cli
