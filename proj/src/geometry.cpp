#include "uwbmap/geometry.hpp"

#include "uwbmap/errors.hpp"

#include <cmath>
#include <numbers>

namespace uwbmap {

ChannelGeometry GeometryParams::for_channel(Channel ch) const {
    const ChannelBias& b = ch == Channel::Ch5 ? bias_ch5 : bias_ch9;
    ChannelGeometry g;
    g.d_tx_rx = d_tx_rx;
    g.aoa_coeff = aoa_coeff;
    g.bias_cm = b.range_cm;
    g.bias_aoa_rad = b.aoa_rad;
    g.c = c;
    g.sample_interval_ns = sample_interval_ns;
    g.baseline_in_delay = baseline_in_delay;
    return g;
}

Pose GeometryParams::mount_for(const std::string& receiver_id) const {
    auto it = mounts.find(receiver_id);
    return it == mounts.end() ? Pose{} : it->second;
}

void GeometryParams::validate() const {
    if (!(d_tx_rx >= 0.0)) throw Error(ErrorKind::Config, "d_tx_rx must be non-negative");
    if (!(aoa_coeff > 0.0)) throw Error(ErrorKind::Config, "aoa_coeff must be positive");
    if (!(c > 0.0)) throw Error(ErrorKind::Config, "speed of light must be positive");
    if (!(sample_interval_ns > 0.0)) throw Error(ErrorKind::Config, "sample interval must be positive");
}

double aoa_from_pdoa(double alpha, const ChannelGeometry& g) {
    if (!(std::abs(alpha) <= std::numbers::pi)) {
        throw Error(ErrorKind::Domain, "PDoA magnitude exceeds pi");
    }
    return std::asin(alpha / std::numbers::pi) / g.aoa_coeff - g.bias_aoa_rad;
}

double pdoa_from_aoa(double theta, double aoa_coeff) { return std::numbers::pi * std::sin(aoa_coeff * theta); }

std::optional<double> total_path_length(double refined_index, double first_path_index, const ChannelGeometry& g) {
    const double delay_ns = (refined_index - first_path_index) * g.sample_interval_ns;
    if (!(delay_ns > 0.0)) return std::nullopt;
    const double base = g.baseline_in_delay ? g.d_tx_rx : 0.0;
    const double d = base + delay_ns * g.c - g.bias_cm;
    if (!(d > g.d_tx_rx)) return std::nullopt;
    return d;
}

std::optional<double> range_from_rx(double d, double theta, double d_tx_rx) {
    if (!(d > d_tx_rx)) return std::nullopt;
    const double denom = 2.0 * (d + d_tx_rx * std::sin(theta));
    if (!(denom > 0.0)) return std::nullopt;
    return (d * d - d_tx_rx * d_tx_rx) / denom;
}

Pose receiver_world_pose(const Pose& robot, const Pose& mount) {
    const double c = std::cos(robot.yaw);
    const double s = std::sin(robot.yaw);
    return Pose{robot.x + c * mount.x - s * mount.y, robot.y + s * mount.x + c * mount.y,
                normalize_angle(robot.yaw + mount.yaw)};
}

DetectedPoint to_world_frame(double range_rx, double theta, const Pose& robot, const Pose& mount) {
    const Pose rx = receiver_world_pose(robot, mount);
    DetectedPoint p;
    p.x = rx.x + range_rx * std::cos(rx.yaw + theta);
    p.y = rx.y + range_rx * std::sin(rx.yaw + theta);
    p.aoa = theta;
    p.range_rx = range_rx;
    return p;
}

}  // namespace uwbmap
