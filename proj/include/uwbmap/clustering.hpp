#pragma once

#include "uwbmap/geometry.hpp"

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace uwbmap {

struct ClusterParams {
    double eps{20.0};              // cm
    std::size_t min_samples{20};   // neighbourhood size incl. the point itself
    std::size_t min_peaks{50};     // new points between clustering runs

    void validate() const;
};

struct Cluster {
    int id{0};
    std::vector<DetectedPoint> members;
    std::array<double, 2> centroid{0.0, 0.0};
    double mean_snr{0.0};
};

struct ClusteringResult {
    std::vector<Cluster> clusters;
    std::vector<DetectedPoint> noise;
};

// Labels in input order: cluster id >= 0, or -1 for noise. Clusters are
// numbered in discovery order; a border point belongs to the first cluster
// that reaches it.
struct DbscanLabels {
    std::vector<int> label;
    std::vector<bool> core;
    int cluster_count{0};
};

DbscanLabels dbscan_labels(std::span<const std::array<double, 2>> xy, double eps, std::size_t min_samples);

// Points are ordered by (timestamp, x, y) before labelling so the result does
// not depend on the caller's order.
ClusteringResult dbscan(std::span<const DetectedPoint> points, const ClusterParams& params);

std::array<double, 2> cluster_centroid(std::span<const DetectedPoint> members);

struct MapSnapshot {
    std::int64_t t_ms{0};
    std::vector<Cluster> clusters;
    std::size_t noise_count{0};
};

// Buffers points and re-clusters the whole buffer every min_peaks arrivals.
// Noise points stay in the buffer and are re-tested on later runs.
class MapAccumulator {
public:
    explicit MapAccumulator(ClusterParams params);

    std::optional<MapSnapshot> push(DetectedPoint point);
    // Clusters any points that arrived since the last run.
    std::optional<MapSnapshot> flush();

    std::size_t buffered() const noexcept { return buffer_.size(); }
    std::size_t pending() const noexcept { return pending_; }

private:
    MapSnapshot run();

    ClusterParams params_;
    std::vector<DetectedPoint> buffer_;
    std::size_t pending_{0};
};

std::string snapshot_to_json(const MapSnapshot& snapshot);
MapSnapshot snapshot_from_json(const std::string& line);

}  // namespace uwbmap
