#pragma once

#include "uwbmap/clustering.hpp"
#include "uwbmap/pipeline.hpp"

#include <array>
#include <span>
#include <string>
#include <vector>

namespace uwbmap {

enum class PlotStep { All, Final };

// Andrew's monotone chain, counter-clockwise, no collinear points. Fewer than
// three distinct points are returned as they are (deduplicated).
std::vector<std::array<double, 2>> convex_hull(std::vector<std::array<double, 2>> points);

// Five panels (raw peaks, after property filters, after the PDoA gate, with
// angle of arrival, clustered map) or only the map. Point colour encodes the
// SNR-score; the robot path comes from the frame poses.
std::string render_svg(std::span<const FrameResult> frames, std::span<const MapSnapshot> snapshots, PlotStep step);

}  // namespace uwbmap
