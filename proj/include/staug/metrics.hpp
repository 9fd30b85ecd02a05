#pragma once

// Change-detection evaluation: thresholding, confusion counting, the seven metrics
// (FM, PWC, Recall, Precision, FPR, FNR, Sp) and per-scene / per-category averaging.

#include <cmath>
#include <cstdint>
#include <iomanip>
#include <map>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "staug/errors.hpp"
#include "staug/image.hpp"
#include "staug/sequence_io.hpp"

namespace staug::metrics {

/// v > threshold -> 1, else 0. Values outside [0,1] (or NaN) are rejected.
inline Image8 binarize(const ImageF& prob, float threshold = 0.5f) {
    Image8 out(prob.width(), prob.height(), 1);
    for (std::size_t i = 0; i < prob.size(); ++i) {
        const float v = prob.data()[i];
        if (!(v >= 0.0f && v <= 1.0f))
            throw DataError("binarize: probability " + std::to_string(v) + " outside [0,1] at pixel " + std::to_string(i));
        out.data()[i] = v > threshold ? 1 : 0;
    }
    return out;
}

/// 8-bit prediction PNG (value = round(255 p)) back to a probability map.
inline ImageF to_probability(const Image8& img) {
    ImageF out(img.width(), img.height(), 1);
    for (std::size_t i = 0; i < out.size(); ++i) out.data()[i] = static_cast<float>(img.data()[i * img.channels()]) / 255.0f;
    return out;
}

struct ConfusionCounts {
    std::uint64_t tp = 0;
    std::uint64_t fp = 0;
    std::uint64_t fn = 0;
    std::uint64_t tn = 0;

    std::uint64_t total() const noexcept { return tp + fp + fn + tn; }
    ConfusionCounts& operator+=(const ConfusionCounts& o) noexcept {
        tp += o.tp;
        fp += o.fp;
        fn += o.fn;
        tn += o.tn;
        return *this;
    }
    friend ConfusionCounts operator+(ConfusionCounts a, const ConfusionCounts& b) noexcept { return a += b; }
    friend bool operator==(const ConfusionCounts&, const ConfusionCounts&) = default;
};

/// Prediction is positive where nonzero. Ground truth accepts {0,1} or the label encoding:
/// 0 negative, 1/255 positive, ignore/unknown excluded. Pixels with weight 0 are excluded.
inline ConfusionCounts confusion(const Image8& pred, const Image8& gt, const Image8* weight = nullptr) {
    if (pred.width() != gt.width() || pred.height() != gt.height() || pred.channels() != 1 || gt.channels() != 1)
        throw DimensionError("confusion: prediction " + std::to_string(pred.width()) + "x" + std::to_string(pred.height()) +
                             " vs ground truth " + std::to_string(gt.width()) + "x" + std::to_string(gt.height()));
    if (weight && (weight->width() != gt.width() || weight->height() != gt.height()))
        throw DimensionError("confusion: weight mask size differs from ground truth");
    ConfusionCounts c;
    const auto p = pred.pixels();
    const auto g = gt.pixels();
    for (std::size_t i = 0; i < g.size(); ++i) {
        if (weight && weight->data()[i] == 0) continue;
        bool positive;
        switch (g[i]) {
        case 0: positive = false; break;
        case 1:
        case label::foreground: positive = true; break;
        case label::ignore:
        case label::unknown: continue;
        default: throw DataError("confusion: illegal ground-truth value " + std::to_string(g[i]));
        }
        const bool predicted = p[i] != 0;
        if (positive) {
            (predicted ? c.tp : c.fn)++;
        } else {
            (predicted ? c.fp : c.tn)++;
        }
    }
    return c;
}

struct MetricReport {
    double fm = 0.0;
    double pwc = 0.0;  // percent
    double recall = 0.0;
    double precision = 0.0;
    double fpr = 0.0;
    double fnr = 0.0;
    double sp = 0.0;
};

inline constexpr std::array<const char*, 7> kColumns = {"FM", "PWC", "Recall", "Precision", "FPR", "FNR", "Sp"};

inline std::array<double, 7> values(const MetricReport& r) {
    return {r.fm, r.pwc, r.recall, r.precision, r.fpr, r.fnr, r.sp};
}

/// Degenerate denominators: no ground-truth positives gives Recall 1 (FNR 0); no predicted
/// positives gives Precision 1 when there was nothing to find and 0 otherwise; no
/// ground-truth negatives gives FPR 0 (Sp 1); FM is 0 when Precision + Recall is 0.
inline MetricReport compute_metrics(const ConfusionCounts& c) {
    const double total = static_cast<double>(c.total());
    if (c.total() == 0) throw DataError("compute_metrics: empty evaluation (no counted pixels)");
    const double tp = static_cast<double>(c.tp), fp = static_cast<double>(c.fp);
    const double fn = static_cast<double>(c.fn), tn = static_cast<double>(c.tn);

    MetricReport r;
    const bool gt_pos = c.tp + c.fn > 0;
    const bool gt_neg = c.tn + c.fp > 0;
    r.recall = gt_pos ? tp / (tp + fn) : 1.0;
    r.fnr = gt_pos ? fn / (tp + fn) : 0.0;
    r.precision = c.tp + c.fp > 0 ? tp / (tp + fp) : (gt_pos ? 0.0 : 1.0);
    r.fpr = gt_neg ? fp / (tn + fp) : 0.0;
    r.sp = gt_neg ? tn / (tn + fp) : 1.0;
    r.fm = r.precision + r.recall > 0.0 ? 2.0 * r.precision * r.recall / (r.precision + r.recall) : 0.0;
    r.pwc = 100.0 * (fp + fn) / total;
    return r;
}

/// Unweighted mean of each metric.
inline MetricReport aggregate(std::span<const MetricReport> reports) {
    if (reports.empty()) throw DataError("aggregate: no reports");
    std::array<double, 7> sum{};
    for (const auto& r : reports) {
        const auto v = values(r);
        for (std::size_t k = 0; k < sum.size(); ++k) sum[k] += v[k];
    }
    const double n = static_cast<double>(reports.size());
    return {sum[0] / n, sum[1] / n, sum[2] / n, sum[3] / n, sum[4] / n, sum[5] / n, sum[6] / n};
}

struct SceneResult {
    std::string scene_id;
    std::string category;
    ConfusionCounts counts;
    MetricReport report;
    long frames = 0;
};

/// Mean within each category first, then the category means are returned by name.
inline std::map<std::string, MetricReport> aggregate_by_category(std::span<const SceneResult> scenes) {
    std::map<std::string, std::vector<MetricReport>> groups;
    for (const auto& s : scenes) groups[s.category].push_back(s.report);
    std::map<std::string, MetricReport> out;
    for (const auto& [cat, reports] : groups) out.emplace(cat, aggregate(reports));
    return out;
}

/// How a scene's frames become one report.
enum class SceneAggregation {
    SummedConfusion,  // sum counts over frames, then metrics
    FrameMean,        // metrics per frame, then mean over frames with counted pixels
};

/// Accumulates one scene frame by frame.
class SceneEvaluator {
public:
    SceneEvaluator(std::string scene_id, std::string category, SceneAggregation mode = SceneAggregation::SummedConfusion)
        : scene_id_(std::move(scene_id)), category_(std::move(category)), mode_(mode) {}

    void add(const ConfusionCounts& frame) {
        total_ += frame;
        ++frames_;
        if (mode_ == SceneAggregation::FrameMean && frame.total() > 0) per_frame_.push_back(compute_metrics(frame));
    }

    SceneResult finish() const {
        SceneResult r{scene_id_, category_, total_, {}, frames_};
        if (mode_ == SceneAggregation::FrameMean) {
            if (per_frame_.empty()) throw DataError("evaluate: scene '" + scene_id_ + "' has no counted pixels");
            r.report = aggregate(per_frame_);
        } else {
            r.report = compute_metrics(total_);
        }
        return r;
    }

private:
    std::string scene_id_;
    std::string category_;
    SceneAggregation mode_;
    ConfusionCounts total_;
    long frames_ = 0;
    std::vector<MetricReport> per_frame_;
};

// ---------------------------------------------------------------------------
// Report emission

struct Report {
    std::vector<SceneResult> scenes;
    std::map<std::string, MetricReport> categories;
    MetricReport average;
    std::optional<MetricReport> category_average;  // mean of category means
};

inline Report make_report(std::vector<SceneResult> scenes) {
    Report rep;
    rep.scenes = std::move(scenes);
    std::vector<MetricReport> per_scene;
    for (const auto& s : rep.scenes) per_scene.push_back(s.report);
    rep.average = aggregate(per_scene);
    rep.categories = aggregate_by_category(rep.scenes);
    if (rep.categories.size() > 1) {
        std::vector<MetricReport> cats;
        for (const auto& [_, r] : rep.categories) cats.push_back(r);
        rep.category_average = aggregate(cats);
    }
    return rep;
}

/// One row per scene, then `category:<name>` rows, then `average` (and `category_average`).
inline std::string to_csv(const Report& rep) {
    std::ostringstream os;
    os << std::setprecision(6) << std::fixed;
    os << "scene";
    for (const char* c : kColumns) os << ',' << c;
    os << '\n';
    auto row = [&](const std::string& name, const MetricReport& r) {
        os << name;
        for (double v : values(r)) os << ',' << v;
        os << '\n';
    };
    for (const auto& s : rep.scenes) row(s.scene_id, s.report);
    for (const auto& [cat, r] : rep.categories) row("category:" + cat, r);
    row("average", rep.average);
    if (rep.category_average) row("category_average", *rep.category_average);
    return os.str();
}

inline nlohmann::json to_json(const MetricReport& r) {
    nlohmann::json j = nlohmann::json::object();
    const auto v = values(r);
    for (std::size_t k = 0; k < kColumns.size(); ++k) j[kColumns[k]] = v[k];
    return j;
}

inline MetricReport report_from_json(const nlohmann::json& j) {
    MetricReport r;
    r.fm = j.at("FM").get<double>();
    r.pwc = j.at("PWC").get<double>();
    r.recall = j.at("Recall").get<double>();
    r.precision = j.at("Precision").get<double>();
    r.fpr = j.at("FPR").get<double>();
    r.fnr = j.at("FNR").get<double>();
    r.sp = j.at("Sp").get<double>();
    return r;
}

inline nlohmann::json to_json(const Report& rep) {
    using nlohmann::json;
    json scenes = json::array();
    for (const auto& s : rep.scenes)
        scenes.push_back({{"scene_id", s.scene_id},
                          {"category", s.category},
                          {"frames", s.frames},
                          {"counts", {{"TP", s.counts.tp}, {"FP", s.counts.fp}, {"FN", s.counts.fn}, {"TN", s.counts.tn}}},
                          {"metrics", to_json(s.report)}});
    json cats = json::object();
    for (const auto& [cat, r] : rep.categories) cats[cat] = to_json(r);
    json j = {{"columns", kColumns}, {"scenes", scenes}, {"categories", cats}, {"average", to_json(rep.average)}};
    if (rep.category_average) j["category_average"] = to_json(*rep.category_average);
    return j;
}

/// Rebuilds scene results from a report JSON (used to merge several reports).
inline std::vector<SceneResult> scenes_from_json(const nlohmann::json& j) {
    std::vector<SceneResult> out;
    for (const auto& s : j.at("scenes")) {
        SceneResult r;
        r.scene_id = s.at("scene_id").get<std::string>();
        r.category = s.value("category", std::string{});
        r.frames = s.value("frames", 0L);
        if (s.contains("counts")) {
            const auto& c = s.at("counts");
            r.counts = {c.at("TP").get<std::uint64_t>(), c.at("FP").get<std::uint64_t>(), c.at("FN").get<std::uint64_t>(),
                        c.at("TN").get<std::uint64_t>()};
        }
        r.report = report_from_json(s.at("metrics"));
        out.push_back(std::move(r));
    }
    return out;
}

}  // namespace staug::metrics
