#include "uwbmap/sim.hpp"

#include "uwbmap/errors.hpp"
#include "uwbmap/eval.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

namespace uwbmap {

namespace {

// Raised-cosine pulse with full width at half maximum `fwhm`.
double pulse(double t_ns, double fwhm) {
    if (std::abs(t_ns) >= fwhm) return 0.0;
    return 0.5 * (1.0 + std::cos(std::numbers::pi * t_ns / fwhm));
}

struct PathTerm {
    double delay_ns;  // from sample 0
    double amplitude;
    double phase;  // carrier phase on antenna A
    double pdoa;   // extra phase on antenna B
};

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t frame, std::uint64_t receiver) {
    // splitmix64 finalizer over the combined key
    std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (frame + 1) + 0xbf58476d1ce4e5b9ULL * (receiver + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

template <typename T>
T opt(const nlohmann::json& j, const char* key, T fallback) {
    auto it = j.find(key);
    if (it == j.end() || it->is_null()) return fallback;
    return it->get<T>();
}

Pose pose_from(const nlohmann::json& j) {
    return Pose{opt(j, "x", 0.0), opt(j, "y", 0.0), normalize_angle(opt(j, "yaw", 0.0))};
}

}  // namespace

double material_reflectivity(Material m) {
    switch (m) {
        case Material::Metal: return 2.0e5;
        case Material::Concrete: return 6.0e4;
        case Material::Plywood: return 4.0e4;
        case Material::Overall: return 1.0e5;
    }
    return 1.0e5;
}

void Scene::validate() const {
    radio.validate();
    geometry.validate();
    if (n_samples < kMinCirLength) throw Error(ErrorKind::Config, "scene n_samples below minimum CIR length");
    if (first_path_index < 0 || static_cast<std::size_t>(first_path_index) >= n_samples - 4) {
        throw Error(ErrorKind::Config, "scene first_path_index out of range");
    }
    if (!(pulse_width_ns > 0.0)) throw Error(ErrorKind::Config, "pulse_width_ns must be positive");
    if (!(noise_sigma >= 0.0)) throw Error(ErrorKind::Config, "noise_sigma must be non-negative");
    if (receivers.empty()) throw Error(ErrorKind::Config, "scene needs at least one receiver");
    for (const auto& o : obstacles) {
        if (!(o.reflect_amp > 0.0)) throw Error(ErrorKind::Config, "obstacle reflect_amp must be positive");
    }
    for (std::size_t k = 1; k < trajectory.size(); ++k) {
        if (trajectory[k].t_ms <= trajectory[k - 1].t_ms) {
            throw Error(ErrorKind::Config, "trajectory timestamps must be strictly increasing");
        }
    }
}

std::vector<TimedPose> straight_trajectory(double x0, double y0, double x1, double y1, double speed_cm_s,
                                           std::int64_t t0_ms) {
    if (!(speed_cm_s > 0.0)) throw Error(ErrorKind::Config, "trajectory speed must be positive");
    const double length = std::hypot(x1 - x0, y1 - y0);
    const double yaw = length > 0.0 ? std::atan2(y1 - y0, x1 - x0) : 0.0;
    const double duration_s = length / speed_cm_s;
    const auto frames = static_cast<std::size_t>(std::floor(duration_s * 1000.0 / kFrameIntervalMs)) + 1;
    std::vector<TimedPose> out;
    out.reserve(frames);
    for (std::size_t k = 0; k < frames; ++k) {
        const double t_s = static_cast<double>(k) * kFrameIntervalMs / 1000.0;
        const double f = length > 0.0 ? std::min(1.0, t_s * speed_cm_s / length) : 0.0;
        TimedPose tp;
        tp.t_ms = t0_ms + static_cast<std::int64_t>(std::llround(static_cast<double>(k) * kFrameIntervalMs));
        tp.pose = Pose{x0 + f * (x1 - x0), y0 + f * (y1 - y0), yaw};
        out.push_back(tp);
    }
    return out;
}

ObstacleView observe(const Scene& scene, const SceneObstacle& obstacle, const Pose& robot, const SimReceiver& rx) {
    const Pose rxw = receiver_world_pose(robot, rx.mount);
    const double c = std::cos(rxw.yaw);
    const double s = std::sin(rxw.yaw);
    const double b = scene.geometry.d_tx_rx;
    // Transmitter at (0, -b) in the receiver frame.
    const double tx_x = rxw.x + s * b;
    const double tx_y = rxw.y - c * b;

    const double dx = obstacle.x - rxw.x;
    const double dy = obstacle.y - rxw.y;
    ObstacleView v;
    v.d_rx = std::hypot(dx, dy);
    v.d_tx = std::hypot(obstacle.x - tx_x, obstacle.y - tx_y);
    v.theta = std::atan2(-s * dx + c * dy, c * dx + s * dy);

    const ChannelGeometry g = scene.geometry.for_channel(scene.channel);
    const double bias = scene.apply_bias ? g.bias_cm : 0.0;
    v.delay_ns = (v.d_tx + v.d_rx - b + bias) / g.c;
    v.amplitude = obstacle.reflect_amp / (v.d_tx * v.d_rx);

    const double last = static_cast<double>(scene.n_samples - 1) - static_cast<double>(scene.first_path_index);
    v.in_window = v.delay_ns > 0.0 && v.delay_ns <= last;
    v.visible = std::abs(v.theta) < std::numbers::pi / 2.0 && v.d_rx >= scene.blind_zone_cm;
    return v;
}

CirCapture synth_capture(const Scene& scene, const TimedPose& tp, std::size_t receiver, std::uint64_t frame_index) {
    const SimReceiver& rx = scene.receivers.at(receiver);
    const ChannelGeometry g = scene.geometry.for_channel(scene.channel);
    const double fp = static_cast<double>(scene.first_path_index);
    const double f_ghz = scene.radio.center_frequency_hz * 1e-9;

    std::vector<PathTerm> paths;
    // Direct path: arrives from the transmitter side, 90 degrees to the right.
    paths.push_back({fp, scene.first_path_amp, 0.0, pdoa_from_aoa(-std::numbers::pi / 2.0, g.aoa_coeff)});
    for (const auto& o : scene.obstacles) {
        const ObstacleView v = observe(scene, o, tp.pose, rx);
        if (!v.visible || v.delay_ns <= 0.0) continue;
        const double theta_hw = v.theta + (scene.apply_bias ? g.bias_aoa_rad : 0.0);
        const double carrier = -2.0 * std::numbers::pi * f_ghz * (v.d_tx + v.d_rx) / g.c;
        paths.push_back({fp + v.delay_ns, v.amplitude, normalize_angle(carrier), pdoa_from_aoa(theta_hw, g.aoa_coeff)});
    }

    CirCapture cap;
    cap.timestamp_ms = tp.t_ms;
    cap.channel = scene.channel;
    cap.receiver_id = rx.id;
    cap.first_path_index = scene.first_path_index;
    cap.pose = tp.pose;
    cap.preamble_cir.resize(scene.n_samples);
    cap.sts1_cir.resize(scene.n_samples);
    cap.sts2_cir.resize(scene.n_samples);

    for (std::size_t k = 0; k < scene.n_samples; ++k) {
        const double t = static_cast<double>(k) * g.sample_interval_ns;
        ComplexSample a{};
        ComplexSample bsum{};
        for (const auto& p : paths) {
            const double env = p.amplitude * pulse(t - p.delay_ns, scene.pulse_width_ns);
            if (env == 0.0) continue;
            a.i += env * std::cos(p.phase);
            a.q += env * std::sin(p.phase);
            bsum.i += env * std::cos(p.phase + p.pdoa);
            bsum.q += env * std::sin(p.phase + p.pdoa);
        }
        cap.preamble_cir[k] = a;
        cap.sts1_cir[k] = a;
        cap.sts2_cir[k] = bsum;
    }

    if (scene.noise_sigma > 0.0) {
        std::mt19937_64 rng(mix_seed(scene.seed, frame_index, receiver));
        std::normal_distribution<double> noise(0.0, scene.noise_sigma);
        for (auto* cir : {&cap.preamble_cir, &cap.sts1_cir, &cap.sts2_cir}) {
            for (auto& s : *cir) {
                s.i += noise(rng);
                s.q += noise(rng);
            }
        }
    }
    return cap;
}

std::vector<CirCapture> synth_scene_stream(const Scene& scene) {
    scene.validate();
    std::vector<CirCapture> out;
    out.reserve(scene.trajectory.size() * scene.receivers.size());
    for (std::size_t f = 0; f < scene.trajectory.size(); ++f) {
        for (std::size_t r = 0; r < scene.receivers.size(); ++r) {
            out.push_back(synth_capture(scene, scene.trajectory[f], r, f));
        }
    }
    return out;
}

std::vector<std::string> out_of_window_obstacles(const Scene& scene) {
    std::vector<std::string> out;
    for (std::size_t i = 0; i < scene.obstacles.size(); ++i) {
        const auto& o = scene.obstacles[i];
        bool seen = false;
        for (const auto& tp : scene.trajectory) {
            for (const auto& rx : scene.receivers) {
                if (observe(scene, o, tp.pose, rx).in_window) {
                    seen = true;
                    break;
                }
            }
            if (seen) break;
        }
        if (!seen) out.push_back(o.label.empty() ? "obstacle#" + std::to_string(i) : o.label);
    }
    return out;
}

GroundTruth scene_ground_truth(const Scene& scene) {
    GroundTruth gt;
    for (const auto& o : scene.obstacles) gt.objects.push_back({o.x, o.y, o.label});
    const double gate = std::numbers::pi / 4.0;
    for (const auto& tp : scene.trajectory) {
        for (const auto& rx : scene.receivers) {
            TruthFrame f;
            f.t_ms = tp.t_ms;
            f.receiver_id = rx.id;
            for (const auto& o : scene.obstacles) {
                const ObstacleView v = observe(scene, o, tp.pose, rx);
                if (v.in_window && v.visible && std::abs(v.theta) <= gate && v.d_rx >= scene.expect_min_range_cm) {
                    f.ranges.push_back(v.d_rx);
                }
            }
            gt.frames.push_back(std::move(f));
        }
    }
    return gt;
}

Scene scene_from_json(std::istream& in) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw Error(ErrorKind::Config, std::string("scene is not valid JSON: ") + e.what());
    }
    Scene s;
    std::string where;
    try {
        where = "seed";
        s.seed = opt<std::uint64_t>(j, "seed", s.seed);
        where = "noise_sigma";
        s.noise_sigma = opt(j, "noise_sigma", s.noise_sigma);
        where = "pulse_width_ns";
        s.pulse_width_ns = opt(j, "pulse_width_ns", s.pulse_width_ns);
        where = "channel";
        s.channel = channel_from_number(opt(j, "channel", 9));
        where = "n_samples";
        s.n_samples = opt<std::size_t>(j, "n_samples", s.n_samples);
        where = "first_path_index";
        s.first_path_index = opt(j, "first_path_index", s.first_path_index);
        where = "first_path_amp";
        s.first_path_amp = opt(j, "first_path_amp", s.first_path_amp);
        where = "blind_zone_cm";
        s.blind_zone_cm = opt(j, "blind_zone_cm", s.blind_zone_cm);
        where = "expect_min_range_cm";
        s.expect_min_range_cm = opt(j, "expect_min_range_cm", s.expect_min_range_cm);
        where = "apply_bias";
        s.apply_bias = opt(j, "apply_bias", s.apply_bias);
        if (auto it = j.find("radio"); it != j.end()) {
            where = "radio";
            s.radio.center_frequency_hz = opt(*it, "center_frequency_hz", s.radio.center_frequency_hz);
            s.radio.bandwidth_hz = opt(*it, "bandwidth_hz", s.radio.bandwidth_hz);
        }
        if (auto it = j.find("geometry"); it != j.end()) {
            where = "geometry.d_tx_rx";
            s.geometry.d_tx_rx = opt(*it, "d_tx_rx", s.geometry.d_tx_rx);
        }
        if (auto it = j.find("receivers"); it != j.end()) {
            s.receivers.clear();
            for (std::size_t k = 0; k < it->size(); ++k) {
                where = "receivers[" + std::to_string(k) + "]";
                const auto& rj = it->at(k);
                SimReceiver r;
                r.id = rj.at("id").get<std::string>();
                if (auto m = rj.find("mount"); m != rj.end()) r.mount = pose_from(*m);
                s.geometry.mounts[r.id] = r.mount;
                s.receivers.push_back(r);
            }
        }
        if (auto it = j.find("obstacles"); it != j.end()) {
            for (std::size_t k = 0; k < it->size(); ++k) {
                where = "obstacles[" + std::to_string(k) + "]";
                const auto& oj = it->at(k);
                SceneObstacle o;
                o.x = oj.at("x").get<double>();
                o.y = oj.at("y").get<double>();
                const std::string material = opt<std::string>(oj, "material", "overall");
                o.reflect_amp = opt(oj, "reflect_amp", material_reflectivity(material_from_string(material)));
                o.label = opt<std::string>(oj, "label", material);
                s.obstacles.push_back(o);
            }
        }
        where = "trajectory";
        const auto& tj = j.at("trajectory");
        if (auto p = tj.find("poses"); p != tj.end()) {
            for (std::size_t k = 0; k < p->size(); ++k) {
                where = "trajectory.poses[" + std::to_string(k) + "]";
                const auto& pj = p->at(k);
                s.trajectory.push_back({pj.at("t_ms").get<std::int64_t>(), pose_from(pj)});
            }
        } else if (auto l = tj.find("line"); l != tj.end()) {
            where = "trajectory.line";
            const auto& a = l->at("start");
            const auto& b = l->at("end");
            s.trajectory = straight_trajectory(a.at(0).get<double>(), a.at(1).get<double>(), b.at(0).get<double>(),
                                               b.at(1).get<double>(), l->at("speed_cm_s").get<double>(),
                                               opt<std::int64_t>(*l, "t0_ms", 0));
        } else {
            throw Error(ErrorKind::Config, "trajectory needs 'poses' or 'line'");
        }
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorKind::Config, "scene field '" + where + "': " + e.what());
    } catch (const Error& e) {
        if (e.kind() == ErrorKind::Config && where == "trajectory") throw;
        throw Error(ErrorKind::Config, "scene field '" + where + "': " + e.detail());
    }
    s.validate();
    return s;
}

}  // namespace uwbmap
