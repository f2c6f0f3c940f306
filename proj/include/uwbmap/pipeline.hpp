#pragma once

// End-to-end processing: peaks and filters per frame, projection into the
// world frame, then density clustering over the accumulated points.

#include "uwbmap/capture.hpp"
#include "uwbmap/clustering.hpp"
#include "uwbmap/eval.hpp"
#include "uwbmap/filtering.hpp"
#include "uwbmap/geometry.hpp"

#include <array>
#include <cstddef>
#include <cstdint>
#include <istream>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace uwbmap {

struct PipelineConfig {
    FilterParams filter_ch5{threshold_preset(Channel::Ch5, Material::Overall)};
    FilterParams filter_ch9{threshold_preset(Channel::Ch9, Material::Overall)};
    GeometryParams geometry;
    ClusterParams cluster;
    std::size_t n_noise{kDefaultNoiseSamples};
    bool subsample_refine{true};
    // Emit every peak that survives the filters instead of only the strongest.
    bool all_survivors{false};
    // Frames on the other channel are skipped.
    std::optional<Channel> channel;

    const FilterParams& filter_for(Channel ch) const { return ch == Channel::Ch5 ? filter_ch5 : filter_ch9; }
    void set_material(Material m);
    void validate() const;
};

enum class PeakStage {
    Rejected = 0,   // failed width / prominence / SNR-score
    Property = 1,   // passed the property filters, outside the PDoA gate
    Gated = 2,      // passed every filter
};

struct PeakRecord {
    ScoredPeak peak;
    PeakStage stage{PeakStage::Rejected};
    bool selected{false};
    // Position if the reflection were straight ahead of the receiver.
    std::optional<std::array<double, 2>> front_xy;
};

struct Detection {
    std::size_t peak{0};  // index into FrameResult::peaks
    double total_path{0.0};
    double range_front{0.0};  // range assuming theta = 0
    DetectedPoint point;
};

struct FrameResult {
    std::int64_t t_ms{0};
    std::string receiver_id;
    Channel channel{Channel::Ch9};
    Pose pose;
    std::vector<PeakRecord> peaks;
    std::vector<Detection> detections;
    std::vector<std::string> diagnostics;
};

FrameResult process_frame(const CirCapture& capture, const PipelineConfig& config);

struct LatencyStats {
    std::size_t frames{0};
    double mean_frame_ms{0.0};
    double max_frame_ms{0.0};
    std::size_t cluster_runs{0};
    double mean_cluster_ms{0.0};
    double max_cluster_ms{0.0};
};

struct RunResult {
    std::vector<FrameResult> frames;
    std::vector<MapSnapshot> snapshots;
    std::size_t skipped_frames{0};  // wrong channel
    LatencyStats latency;
};

// Frames are processed on up to `threads` workers; accumulation into the map
// is sequential in input order.
RunResult run_pipeline(std::span<const CirCapture> captures, const PipelineConfig& config, unsigned threads = 1);

std::string frame_to_json(const FrameResult& frame);
FrameResult frame_from_json(const std::string& line, std::size_t line_no = 0);
std::vector<FrameResult> read_frames(std::istream& in);

// Range detections per frame, for range-only evaluation.
std::vector<FrameRanges> frame_ranges(std::span<const FrameResult> frames);

struct PoseSample {
    std::int64_t t_ms{0};
    Pose pose;
};

// CSV with header t_ms,x,y,yaw.
std::vector<PoseSample> read_pose_log(std::istream& in);

// Replaces every capture pose with the pose whose timestamp is nearest (the
// earlier one on ties). Throws Error{Empty} when the log is empty.
void attach_poses(std::span<CirCapture> captures, std::span<const PoseSample> poses);

}  // namespace uwbmap
