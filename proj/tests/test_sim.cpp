#include <doctest.h>

#include "uwbmap/cir.hpp"
#include "uwbmap/errors.hpp"
#include "uwbmap/filtering.hpp"
#include "uwbmap/pipeline.hpp"
#include "uwbmap/sim.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

using namespace uwbmap;

namespace {

Scene still_scene() {
    Scene s;
    s.apply_bias = false;
    s.trajectory = {TimedPose{0, Pose{}}};
    return s;
}

std::size_t argmax_after(const std::vector<double>& v, std::size_t from) {
    std::size_t best = from;
    for (std::size_t k = from; k < v.size(); ++k) {
        if (v[k] > v[best]) best = k;
    }
    return best;
}

std::string error_text(const std::string& json) {
    std::istringstream in(json);
    try {
        scene_from_json(in);
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::Config);
        return e.what();
    }
    FAIL("no error");
    return {};
}

}  // namespace

TEST_CASE("empty scene renders only the first path") {
    const auto s = still_scene();
    const auto cap = synth_capture(s, s.trajectory[0]);
    CHECK_NOTHROW(validate(cap));
    const auto mag = magnitude(cap.preamble_cir);
    CHECK(argmax_after(mag, 0) == 8);
    CHECK(mag[8] == doctest::Approx(1.0));
    for (std::size_t k = 12; k < mag.size(); ++k) CHECK(mag[k] == 0.0);
}

TEST_CASE("obstacle straight ahead lands at the expected delay with zero PDoA") {
    auto s = still_scene();
    const double c = s.geometry.c;
    const double total = 20.0 + 10.0 * c;  // 10 ns after the first path
    const double x = (total * total - 400.0) / (2.0 * total);
    s.obstacles.push_back({x, 0.0, 1e5, "wall"});
    const auto v = observe(s, s.obstacles[0], Pose{}, s.receivers[0]);
    CHECK(v.delay_ns == doctest::Approx(10.0).epsilon(1e-12));
    CHECK(v.theta == 0.0);
    const auto cap = synth_capture(s, s.trajectory[0]);
    const auto mag = magnitude(cap.preamble_cir);
    CHECK(argmax_after(mag, 12) == 18);
    const auto p1 = phase(cap.sts1_cir);
    const auto p2 = phase(cap.sts2_cir);
    CHECK(std::abs(pdoa(p1.samples[18], p2.samples[18])) < 1e-12);
}

TEST_CASE("angle encoding") {
    CHECK(pdoa_from_aoa(std::numbers::pi / 4) == doctest::Approx(2.1325).epsilon(1e-4));
    ChannelGeometry g;
    for (int k = -40; k <= 40; ++k) {
        const double t = k * std::numbers::pi / 180.0;
        CHECK(std::abs(aoa_from_pdoa(pdoa_from_aoa(t), g) - t) < 1e-6);
    }
    // The encoded phase shows up on the second antenna.
    auto s = still_scene();
    const double r = 150.0;
    const double th = 0.3;
    s.obstacles.push_back({r * std::cos(th), r * std::sin(th), 1e5, "a"});
    const auto v = observe(s, s.obstacles[0], Pose{}, s.receivers[0]);
    CHECK(v.theta == doctest::Approx(th).epsilon(1e-12));
    const auto cap = synth_capture(s, s.trajectory[0]);
    const auto k = argmax_after(magnitude(cap.preamble_cir), 12);
    const double a = pdoa(phase(cap.sts1_cir).samples[k], phase(cap.sts2_cir).samples[k]);
    CHECK(a == doctest::Approx(pdoa_from_aoa(th)).epsilon(1e-9));
}

TEST_CASE("stream size and determinism") {
    Scene s;
    s.noise_sigma = 0.01;
    s.trajectory = straight_trajectory(0, 0, 50, 0, 30.0);
    s.obstacles.push_back({300, 10, 1e5, "m"});
    s.receivers.push_back(SimReceiver{"left", Pose{0, 10, std::numbers::pi / 2}});
    const auto a = synth_scene_stream(s);
    CHECK(a.size() == s.trajectory.size() * 2);
    CHECK(a == synth_scene_stream(s));
    s.seed = 2;
    CHECK_FALSE(a == synth_scene_stream(s));
    for (std::size_t k = 1; k < a.size(); ++k) CHECK(a[k - 1].timestamp_ms <= a[k].timestamp_ms);
}

TEST_CASE("amplitude falls with distance") {
    const auto s = still_scene();
    double last = 1e300;
    for (double x = 60; x < 400; x += 20) {
        const auto v = observe(s, SceneObstacle{x, 0, 1e5, ""}, Pose{}, s.receivers[0]);
        CHECK(v.amplitude < last);
        last = v.amplitude;
    }
    CHECK(material_reflectivity(Material::Metal) > material_reflectivity(Material::Plywood));
}

TEST_CASE("obstacles that never enter the window are listed") {
    auto s = still_scene();
    s.obstacles.push_back({200, 0, 1e5, "near"});
    s.obstacles.push_back({5000, 0, 1e5, "far"});
    s.obstacles.push_back({-300, 0, 1e5, ""});
    const auto out = out_of_window_obstacles(s);
    REQUIRE(out.size() == 1);
    CHECK(out[0] == "far");
}

TEST_CASE("scene JSON") {
    std::istringstream in(R"({"seed":7,"noise_sigma":0.02,"channel":5,
        "receivers":[{"id":"front"},{"id":"side","mount":{"x":0,"y":5,"yaw":1.5}}],
        "obstacles":[{"x":250,"y":0,"material":"metal"},{"x":100,"y":30,"reflect_amp":5e4,"label":"post"}],
        "trajectory":{"line":{"start":[0,0],"end":[30,0],"speed_cm_s":30}}})");
    const auto s = scene_from_json(in);
    CHECK(s.seed == 7);
    CHECK(s.channel == Channel::Ch5);
    CHECK(s.receivers.size() == 2);
    CHECK(s.geometry.mount_for("side").y == 5);
    CHECK(s.obstacles[0].reflect_amp == material_reflectivity(Material::Metal));
    CHECK(s.obstacles[0].label == "metal");
    CHECK(s.obstacles[1].label == "post");
    CHECK(s.trajectory.size() == static_cast<std::size_t>(std::floor(1000.0 / kFrameIntervalMs)) + 1);
    CHECK(s.trajectory.back().pose.x == doctest::Approx(30.0 * (s.trajectory.size() - 1) * kFrameIntervalMs / 1000.0));

    CHECK(error_text(R"({"trajectory":{"poses":[{"t_ms":0},{"x":1}]}})").find("trajectory.poses[1]") !=
          std::string::npos);
    CHECK(error_text(R"({"obstacles":[{"x":1,"y":2},{"y":2}],"trajectory":{"poses":[]}})").find("obstacles[1]") !=
          std::string::npos);
    CHECK(error_text(R"({"obstacles":[{"x":1,"y":2,"material":"glass"}],"trajectory":{"poses":[]}})")
              .find("obstacles[0]") != std::string::npos);
    CHECK(error_text(R"({"channel":6,"trajectory":{"poses":[]}})").find("channel") != std::string::npos);
    CHECK(error_text(R"({"obstacles":[]})").find("trajectory") != std::string::npos);
    CHECK(error_text("{nope").find("JSON") != std::string::npos);
}

TEST_CASE("noise free round trip through the pipeline") {
    for (const bool bias : {false, true}) {
        Scene s;
        s.apply_bias = bias;
        const double r = 180.0;
        const double th = 0.35;
        const Pose robot{40, -20, 0.4};
        s.obstacles.push_back({robot.x + r * std::cos(robot.yaw + th), robot.y + r * std::sin(robot.yaw + th), 1e5, "t"});
        s.trajectory = {TimedPose{0, robot}};
        PipelineConfig cfg;
        if (!bias) {
            cfg.geometry.bias_ch9 = ChannelBias{0.0, 0.0};
        }
        const auto cap = synth_capture(s, s.trajectory[0]);
        for (const bool refine : {false, true}) {
            cfg.subsample_refine = refine;
            const auto f = process_frame(cap, cfg);
            REQUIRE(f.detections.size() == 1);
            const auto& p = f.detections[0].point;
            const double err = std::hypot(p.x - s.obstacles[0].x, p.y - s.obstacles[0].y);
            CHECK(err < (refine ? 3.0 : 15.0));
        }
    }
}

TEST_CASE("ground truth frames") {
    Scene s;
    s.trajectory = straight_trajectory(0, 0, 100, 0, 50.0);
    s.obstacles.push_back({250, 0, 1e5, "ahead"});
    s.obstacles.push_back({0, 200, 1e5, "beside"});
    const auto gt = scene_ground_truth(s);
    CHECK(gt.objects.size() == 2);
    REQUIRE(gt.frames.size() == s.trajectory.size());
    CHECK(gt.frames.front().ranges.size() == 1);
    CHECK(gt.frames.front().ranges[0] == doctest::Approx(250.0));
    CHECK(gt.frames.back().ranges[0] == doctest::Approx(150.0));
}
