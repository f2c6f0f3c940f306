#pragma once

#include "uwbmap/clustering.hpp"

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace uwbmap {

inline constexpr double kMatchMarginCm = 20.0;

struct TruthObject {
    double x{0.0};
    double y{0.0};
    std::string label;
};

// Ranges (cm, receiver to object) the receiver is expected to report in one
// frame. An empty list means nothing should be detected.
struct TruthFrame {
    std::int64_t t_ms{0};
    std::string receiver_id;
    std::vector<double> ranges;
};

struct GroundTruth {
    std::vector<TruthObject> objects;
    std::vector<TruthFrame> frames;
};

GroundTruth truth_from_json(const std::string& text);
std::string truth_to_json(const GroundTruth& truth);

struct MatchResult {
    std::size_t tp{0};
    std::size_t fp{0};
    std::size_t fn{0};
    // Shortest distance to truth for every detection that had something to be
    // compared against, in detection order.
    std::vector<double> errors;
};

// Each detection is a TP when some truth object lies within margin, else an
// FP; every object with no detection within margin is one FN. Throws
// Error{Config} when truth is empty or margin is not positive.
MatchResult match_detections(std::span<const std::array<double, 2>> detections, std::span<const TruthObject> truth,
                             double margin = kMatchMarginCm);

// Per-frame range detections, compared as if straight in front of the antenna.
struct FrameRanges {
    std::int64_t t_ms{0};
    std::string receiver_id;
    std::vector<double> ranges;
};

// Range-only matching per frame. A frame whose truth lists ranges but has no
// matching detection adds one FN. Frames without a truth entry are skipped.
MatchResult match_step2(std::span<const FrameRanges> frames, const GroundTruth& truth,
                        double margin = kMatchMarginCm);

// Cluster centroids against object coordinates, one evaluation window per
// snapshot (or only the last snapshot).
MatchResult match_step3(std::span<const MapSnapshot> snapshots, const GroundTruth& truth,
                        double margin = kMatchMarginCm, bool final_only = false);

struct DetectionMetrics {
    std::optional<double> precision;
    std::optional<double> recall;
    std::optional<double> f1;
};

DetectionMetrics detection_metrics(std::size_t tp, std::size_t fp, std::size_t fn);

// Linear interpolation between closest ranks, p in [0, 100].
double percentile(std::span<const double> sorted, double p);

struct DistanceStats {
    double mae{0.0};
    double sd{0.0};  // population SD of absolute errors
    double p50{0.0};
    double p90{0.0};
    double p95{0.0};
    std::vector<double> cdf;  // sorted absolute errors
};

DistanceStats distance_stats(std::span<const double> errors);

struct EvalReport {
    std::string mode;  // "step2" | "step3"
    double margin_cm{kMatchMarginCm};
    std::size_t tp{0};
    std::size_t fp{0};
    std::size_t fn{0};
    DetectionMetrics metrics;
    std::optional<DistanceStats> distance;
};

EvalReport make_report(const std::string& mode, const MatchResult& match, double margin);

std::string report_to_json(const EvalReport& report);
// Human-readable row laid out like the accuracy / detection tables.
std::string report_table(const EvalReport& report, const std::string& label);
std::string cdf_csv(const EvalReport& report);

}  // namespace uwbmap
