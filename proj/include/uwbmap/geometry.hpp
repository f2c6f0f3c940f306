#pragma once

// Bistatic ranging and world-frame projection.
//
// Angle convention: theta is the angle of arrival measured from the receiver
// boresight, counter-clockwise positive. The transmitter sits at distance
// d_tx_rx on the receiver's right (-90 degrees from boresight), so the angle
// at the receiver between the baseline and the target is theta + 90 degrees.
// With that, the cosine law on the TX/RX/target triangle solves to
//
//     d_rx = (d^2 - b^2) / (2 (d + b sin(theta)))
//
// where d is the total TX -> target -> RX path and b the baseline.

#include "uwbmap/capture.hpp"

#include <cstdint>
#include <map>
#include <optional>
#include <string>

namespace uwbmap {

inline constexpr double kAoaCoefficient = 0.95;

struct ChannelBias {
    double range_cm{0.0};
    double aoa_rad{0.0};
};

struct ChannelGeometry {
    double d_tx_rx{20.0};  // cm
    double aoa_coeff{kAoaCoefficient};
    double bias_cm{0.0};
    double bias_aoa_rad{0.0};
    double c{kSpeedOfLightCmPerNs};  // cm / ns
    double sample_interval_ns{kSampleIntervalNs};
    // The CIR delay is counted from the first path, which already travelled
    // the baseline; when set the baseline is added back to get the full path.
    bool baseline_in_delay{true};
};

struct GeometryParams {
    double d_tx_rx{20.0};
    double aoa_coeff{kAoaCoefficient};
    double c{kSpeedOfLightCmPerNs};
    double sample_interval_ns{kSampleIntervalNs};
    bool baseline_in_delay{true};
    ChannelBias bias_ch5{15.0, 0.0522};
    ChannelBias bias_ch9{13.0, 0.0209};
    // Receiver placement on the robot (robot frame, cm / rad), keyed by
    // receiver id. Unknown receivers use a zero offset.
    std::map<std::string, Pose> mounts;

    ChannelGeometry for_channel(Channel ch) const;
    Pose mount_for(const std::string& receiver_id) const;
    void validate() const;
};

struct DetectedPoint {
    double x{0.0};  // cm, world
    double y{0.0};  // cm, world
    double snr_score{0.0};
    std::int64_t timestamp_ms{0};
    std::string receiver_id;
    double aoa{0.0};       // rad
    double range_rx{0.0};  // cm
};

// theta = asin(alpha / pi) / aoa_coeff - bias. Throws Error{Domain} when
// |alpha| > pi.
double aoa_from_pdoa(double alpha, const ChannelGeometry& g);

// Inverse of aoa_from_pdoa without the bias: alpha = pi sin(aoa_coeff theta).
double pdoa_from_aoa(double theta, double aoa_coeff = kAoaCoefficient);

// Total TX -> target -> RX path for a reflection at refined_index, with the
// per-channel bias removed. Empty when the path does not exceed the baseline.
std::optional<double> total_path_length(double refined_index, double first_path_index, const ChannelGeometry& g);

// Receiver-to-target range on the ellipse. Empty when d <= d_tx_rx or the
// denominator is not positive.
std::optional<double> range_from_rx(double d, double theta, double d_tx_rx);

// Receiver pose in the world: robot pose composed with the mounting offset.
Pose receiver_world_pose(const Pose& robot, const Pose& mount);

// Target position for a polar (range, theta) observation from the receiver.
DetectedPoint to_world_frame(double range_rx, double theta, const Pose& robot, const Pose& mount);

}  // namespace uwbmap
