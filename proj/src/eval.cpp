#include "uwbmap/eval.hpp"

#include "uwbmap/errors.hpp"
#include "uwbmap/numfmt.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <sstream>

namespace uwbmap {

namespace {

using ordered_json = nlohmann::ordered_json;

ordered_json optional_number(const std::optional<double>& v) {
    if (v) return *v;
    return nullptr;
}

std::string percent_or_dash(const std::optional<double>& v) {
    return v ? format_fixed(*v * 100.0, 2) : std::string("-");
}

}  // namespace

GroundTruth truth_from_json(const std::string& text) {
    GroundTruth gt;
    try {
        const auto j = nlohmann::json::parse(text);
        for (const auto& o : j.at("objects")) {
            TruthObject t;
            t.x = o.at("x").get<double>();
            t.y = o.at("y").get<double>();
            if (auto it = o.find("label"); it != o.end()) t.label = it->get<std::string>();
            gt.objects.push_back(t);
        }
        if (auto fr = j.find("frames"); fr != j.end()) {
            for (const auto& f : *fr) {
                TruthFrame t;
                t.t_ms = f.at("t_ms").get<std::int64_t>();
                t.receiver_id = f.at("rx").get<std::string>();
                t.ranges = f.at("ranges").get<std::vector<double>>();
                gt.frames.push_back(std::move(t));
            }
        }
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorKind::Config, std::string("bad truth file: ") + e.what());
    }
    return gt;
}

std::string truth_to_json(const GroundTruth& gt) {
    ordered_json j;
    j["objects"] = ordered_json::array();
    for (const auto& o : gt.objects) j["objects"].push_back({{"x", o.x}, {"y", o.y}, {"label", o.label}});
    j["frames"] = ordered_json::array();
    for (const auto& f : gt.frames) {
        j["frames"].push_back({{"t_ms", f.t_ms}, {"rx", f.receiver_id}, {"ranges", f.ranges}});
    }
    return j.dump();
}

MatchResult match_detections(std::span<const std::array<double, 2>> detections, std::span<const TruthObject> truth,
                             double margin) {
    if (truth.empty()) throw Error(ErrorKind::Config, "ground truth has no objects");
    if (!(margin > 0.0)) throw Error(ErrorKind::Config, "match margin must be positive");
    MatchResult r;
    std::vector<bool> found(truth.size(), false);
    for (const auto& d : detections) {
        double best = std::numeric_limits<double>::infinity();
        for (std::size_t k = 0; k < truth.size(); ++k) {
            const double dist = std::hypot(d[0] - truth[k].x, d[1] - truth[k].y);
            best = std::min(best, dist);
            if (dist <= margin) found[k] = true;
        }
        r.errors.push_back(best);
        if (best <= margin) {
            ++r.tp;
        } else {
            ++r.fp;
        }
    }
    r.fn = static_cast<std::size_t>(std::count(found.begin(), found.end(), false));
    return r;
}

MatchResult match_step2(std::span<const FrameRanges> frames, const GroundTruth& truth, double margin) {
    if (!(margin > 0.0)) throw Error(ErrorKind::Config, "match margin must be positive");
    if (truth.frames.empty()) throw Error(ErrorKind::Config, "step-2 evaluation needs per-frame truth ranges");
    std::map<std::pair<std::int64_t, std::string>, const TruthFrame*> index;
    for (const auto& f : truth.frames) index[{f.t_ms, f.receiver_id}] = &f;

    MatchResult r;
    std::size_t matched_frames = 0;
    for (const auto& f : frames) {
        auto it = index.find({f.t_ms, f.receiver_id});
        if (it == index.end()) continue;
        ++matched_frames;
        const auto& expected = it->second->ranges;
        bool hit = false;
        for (double range : f.ranges) {
            double best = std::numeric_limits<double>::infinity();
            for (double t : expected) best = std::min(best, std::abs(range - t));
            if (std::isfinite(best)) r.errors.push_back(best);
            if (best <= margin) {
                ++r.tp;
                hit = true;
            } else {
                ++r.fp;
            }
        }
        if (!expected.empty() && !hit) ++r.fn;
    }
    if (matched_frames == 0 && !frames.empty()) {
        throw Error(ErrorKind::Format, "no detection frame matches a truth frame (t_ms, rx)");
    }
    return r;
}

MatchResult match_step3(std::span<const MapSnapshot> snapshots, const GroundTruth& truth, double margin,
                        bool final_only) {
    if (snapshots.empty()) throw Error(ErrorKind::Empty, "no map snapshots to evaluate");
    MatchResult total;
    const std::size_t first = final_only ? snapshots.size() - 1 : 0;
    for (std::size_t s = first; s < snapshots.size(); ++s) {
        std::vector<std::array<double, 2>> centroids;
        for (const auto& c : snapshots[s].clusters) centroids.push_back(c.centroid);
        const MatchResult r = match_detections(centroids, truth.objects, margin);
        total.tp += r.tp;
        total.fp += r.fp;
        total.fn += r.fn;
        total.errors.insert(total.errors.end(), r.errors.begin(), r.errors.end());
    }
    return total;
}

DetectionMetrics detection_metrics(std::size_t tp, std::size_t fp, std::size_t fn) {
    DetectionMetrics m;
    const auto t = static_cast<double>(tp);
    if (tp + fp > 0) m.precision = t / static_cast<double>(tp + fp);
    if (tp + fn > 0) m.recall = t / static_cast<double>(tp + fn);
    if (m.precision && m.recall) {
        // Same value as 2PR / (P + R), and defined (0) when both are 0.
        m.f1 = 2.0 * t / static_cast<double>(2 * tp + fp + fn);
    }
    return m;
}

double percentile(std::span<const double> sorted, double p) {
    if (sorted.empty()) throw Error(ErrorKind::Empty, "percentile of an empty list");
    const double pos = std::clamp(p, 0.0, 100.0) / 100.0 * static_cast<double>(sorted.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
    const double frac = pos - static_cast<double>(lo);
    return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

DistanceStats distance_stats(std::span<const double> errors) {
    if (errors.empty()) throw Error(ErrorKind::Empty, "distance statistics of an empty error list");
    DistanceStats s;
    s.cdf.reserve(errors.size());
    for (double e : errors) s.cdf.push_back(std::abs(e));
    std::sort(s.cdf.begin(), s.cdf.end());
    const auto n = static_cast<double>(s.cdf.size());
    double sum = 0.0;
    for (double e : s.cdf) sum += e;
    s.mae = sum / n;
    double sq = 0.0;
    for (double e : s.cdf) sq += (e - s.mae) * (e - s.mae);
    s.sd = std::sqrt(sq / n);
    s.p50 = percentile(s.cdf, 50.0);
    s.p90 = percentile(s.cdf, 90.0);
    s.p95 = percentile(s.cdf, 95.0);
    return s;
}

EvalReport make_report(const std::string& mode, const MatchResult& match, double margin) {
    EvalReport r;
    r.mode = mode;
    r.margin_cm = margin;
    r.tp = match.tp;
    r.fp = match.fp;
    r.fn = match.fn;
    r.metrics = detection_metrics(match.tp, match.fp, match.fn);
    if (!match.errors.empty()) r.distance = distance_stats(match.errors);
    return r;
}

std::string report_to_json(const EvalReport& r) {
    ordered_json j;
    j["mode"] = r.mode;
    j["meta"] = {{"margin_cm", r.margin_cm},
                 {"sd", "population standard deviation of absolute errors"},
                 {"percentiles", "linear interpolation between closest ranks"},
                 {"fn_window", r.mode == "step3" ? "per snapshot" : "per frame"}};
    j["tp"] = r.tp;
    j["fp"] = r.fp;
    j["fn"] = r.fn;
    j["precision"] = optional_number(r.metrics.precision);
    j["recall"] = optional_number(r.metrics.recall);
    j["f1"] = optional_number(r.metrics.f1);
    if (r.distance) {
        j["mae"] = r.distance->mae;
        j["sd"] = r.distance->sd;
        j["p50"] = r.distance->p50;
        j["p90"] = r.distance->p90;
        j["p95"] = r.distance->p95;
        j["n_errors"] = r.distance->cdf.size();
    } else {
        j["mae"] = nullptr;
        j["sd"] = nullptr;
        j["p50"] = nullptr;
        j["p90"] = nullptr;
        j["p95"] = nullptr;
        j["n_errors"] = 0;
    }
    return j.dump(2);
}

std::string report_table(const EvalReport& r, const std::string& label) {
    std::ostringstream out;
    auto cm = [&](double DistanceStats::*field) {
        return r.distance ? format_fixed((*r.distance).*field, 2) : std::string("-");
    };
    out << "mode: " << r.mode << " (margin " << format_fixed(r.margin_cm, 1) << " cm)\n";
    out << "           |      Distance accuracy (cm)       | Detection probability (%)\n";
    out << "label      |    MAE     P90     P95      SD    | Precision  Recall  F1-score\n";
    std::string name = label.substr(0, 10);
    name.resize(10, ' ');
    auto col = [](const std::string& s, std::size_t w) {
        std::string v = s;
        if (v.size() < w) v.insert(0, w - v.size(), ' ');
        return v;
    };
    out << name << " | " << col(cm(&DistanceStats::mae), 6) << ' ' << col(cm(&DistanceStats::p90), 7) << ' '
        << col(cm(&DistanceStats::p95), 7) << ' ' << col(cm(&DistanceStats::sd), 7) << "    | "
        << col(percent_or_dash(r.metrics.precision), 9) << ' ' << col(percent_or_dash(r.metrics.recall), 7) << ' '
        << col(percent_or_dash(r.metrics.f1), 9) << '\n';
    out << "tp=" << r.tp << " fp=" << r.fp << " fn=" << r.fn << '\n';
    return out.str();
}

std::string cdf_csv(const EvalReport& r) {
    std::string out = "error_cm,cdf\n";
    if (!r.distance) return out;
    const auto& c = r.distance->cdf;
    for (std::size_t k = 0; k < c.size(); ++k) {
        out += format_double(c[k]);
        out += ',';
        out += format_double(static_cast<double>(k + 1) / static_cast<double>(c.size()));
        out += '\n';
    }
    return out;
}

}  // namespace uwbmap
