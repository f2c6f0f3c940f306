#pragma once

// Synthetic CIR generator. Each frame is a superposition of pulses, one for
// the direct TX -> RX path and one per visible obstacle, plus white Gaussian
// noise on every I and Q component.

#include "uwbmap/capture.hpp"
#include "uwbmap/eval.hpp"
#include "uwbmap/filtering.hpp"
#include "uwbmap/geometry.hpp"

#include <cstdint>
#include <istream>
#include <string>
#include <vector>

namespace uwbmap {

struct SceneObstacle {
    double x{0.0};  // cm
    double y{0.0};  // cm
    double reflect_amp{1.0};
    std::string label;
};

// Reflectivity presets; relative only.
double material_reflectivity(Material m);

struct TimedPose {
    std::int64_t t_ms{0};
    Pose pose;
};

struct SimReceiver {
    std::string id{"front"};
    Pose mount;
};

struct Scene {
    std::vector<SceneObstacle> obstacles;
    std::vector<TimedPose> trajectory;
    std::vector<SimReceiver> receivers{SimReceiver{}};
    double noise_sigma{0.0};
    double pulse_width_ns{2.0};  // full width at half maximum
    RadioConfig radio;
    GeometryParams geometry;
    // Emulate the hardware range / angle offsets that the pipeline's bias
    // calibration removes.
    bool apply_bias{true};
    Channel channel{Channel::Ch9};
    std::size_t n_samples{kDefaultCirLength};
    int first_path_index{8};
    double first_path_amp{1.0};
    // Obstacles closer than this to the receiver are not rendered. 0 = off.
    double blind_zone_cm{0.0};
    // Ground truth marks an obstacle as expected only beyond this range.
    double expect_min_range_cm{60.0};
    std::uint64_t seed{1};

    void validate() const;
};

// Straight-line trajectory at the radar frame rate, heading along the line.
std::vector<TimedPose> straight_trajectory(double x0, double y0, double x1, double y1, double speed_cm_s,
                                           std::int64_t t0_ms = 0);

// Observation geometry of one obstacle from one receiver.
struct ObstacleView {
    double d_tx{0.0};
    double d_rx{0.0};
    double theta{0.0};     // rad from boresight, CCW positive
    double delay_ns{0.0};  // after the first path, including emulated bias
    double amplitude{0.0};
    bool in_window{false};
    bool visible{false};   // in front of the antenna and outside the blind zone
};

ObstacleView observe(const Scene& scene, const SceneObstacle& obstacle, const Pose& robot, const SimReceiver& rx);

CirCapture synth_capture(const Scene& scene, const TimedPose& pose, std::size_t receiver = 0,
                         std::uint64_t frame_index = 0);

// One capture per trajectory pose and receiver, in timestamp order.
std::vector<CirCapture> synth_scene_stream(const Scene& scene);

// Labels of obstacles that never fall inside the CIR window.
std::vector<std::string> out_of_window_obstacles(const Scene& scene);

Scene scene_from_json(std::istream& in);

// Object positions and, per frame, the receiver ranges a perfect detector
// would report (visible, within the angular gate, beyond the blind zone).
GroundTruth scene_ground_truth(const Scene& scene);

}  // namespace uwbmap
