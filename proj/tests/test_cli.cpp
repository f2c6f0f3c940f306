#include <doctest.h>

#include "uwbmap/capture.hpp"
#include "uwbmap/cli.hpp"
#include "uwbmap/sim.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <nlohmann/json.hpp>
#include <random>
#include <sstream>
#include <string>

using namespace uwbmap;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    TempDir() {
        std::random_device rd;
        path = fs::temp_directory_path() / ("uwbmap_cli_" + std::to_string(rd()) + std::to_string(rd()));
        fs::create_directories(path);
    }
    ~TempDir() {
        std::error_code ec;
        fs::remove_all(path, ec);
    }
    std::string operator/(const std::string& name) const { return (path / name).string(); }
};

std::string slurp(const std::string& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void spit(const std::string& p, const std::string& text) {
    std::ofstream out(p, std::ios::binary);
    out << text;
}

int run(std::vector<std::string> args) {
    // Keep test output quiet.
    setenv("UWB_MAPPER_LOG", "off", 1);
    std::ostringstream sink;
    auto* old = std::cout.rdbuf(sink.rdbuf());
    const int rc = cli::run(args);
    std::cout.rdbuf(old);
    return rc;
}

std::size_t count(const std::string& hay, const std::string& needle) {
    std::size_t n = 0;
    for (auto p = hay.find(needle); p != std::string::npos; p = hay.find(needle, p + 1)) ++n;
    return n;
}

const char* kScene = R"({
  "seed": 3, "noise_sigma": 0.002,
  "obstacles": [{"x": 330, "y": 0, "material": "metal"}, {"x": 240, "y": 120, "material": "concrete"}],
  "trajectory": {"line": {"start": [0, 0], "end": [160, 0], "speed_cm_s": 30}}
})";

}  // namespace

TEST_CASE("run over a long stream writes snapshots") {
    TempDir tmp;
    Scene s;
    s.noise_sigma = 0.002;
    s.obstacles.push_back({330, 0, 2e5, "metal"});
    s.trajectory = straight_trajectory(0, 0, 160, 0, 30.0);
    s.trajectory.resize(500 <= s.trajectory.size() ? 500 : s.trajectory.size());
    const auto caps = synth_scene_stream(s);
    REQUIRE(caps.size() == 500);
    std::string text;
    for (const auto& c : caps) text += to_jsonl(c) + "\n";
    spit(tmp / "in.jsonl", text);
    CHECK(run({"run", tmp / "in.jsonl", "-o", tmp / "out", "--threads", "2"}) == cli::kExitOk);
    const auto snaps = slurp(tmp / "out/snapshots.jsonl");
    CHECK(count(snaps, "\n") >= 1);
    const auto summary = nlohmann::json::parse(slurp(tmp / "out/summary.json"));
    CHECK(summary.at("frames_processed").get<int>() == 500);
    CHECK(summary.at("final_clusters").get<int>() >= 1);
    CHECK(fs::exists(tmp / "out/peaks.jsonl"));
    CHECK(nlohmann::json::parse(slurp(tmp / "out/timing.json")).contains("mean_frame_ms"));
}

TEST_CASE("channel and material flags reach the summary") {
    TempDir tmp;
    spit(tmp / "scene.json", kScene);
    REQUIRE(run({"simulate", tmp / "scene.json", "-o", tmp / "cap.csv"}) == cli::kExitOk);
    REQUIRE(run({"run", tmp / "cap.csv", "-o", tmp / "out", "--channel", "9", "--material", "concrete"}) == 0);
    const auto j = nlohmann::json::parse(slurp(tmp / "out/summary.json"));
    CHECK(j.at("material") == "concrete");
    CHECK(j.at("config").at("channel") == 9);
    CHECK(j.at("config").at("filter_ch9").at("width").get<double>() == 2.0);
    CHECK(j.at("config").at("filter_ch9").at("snr").get<double>() == 10.0);

    spit(tmp / "p.params", "snr.ch9 = 14\n");
    REQUIRE(run({"run", tmp / "cap.csv", "-o", tmp / "out2", "--material", "concrete", "--params", tmp / "p.params"}) ==
            0);
    const auto k = nlohmann::json::parse(slurp(tmp / "out2/summary.json"));
    CHECK(k.at("config").at("filter_ch9").at("snr").get<double>() == 14.0);
    CHECK(k.at("config").at("filter_ch9").at("width").get<double>() == 2.0);

    CHECK(run({"run", tmp / "cap.csv", "-o", tmp / "out3", "--channel", "5"}) == 0);
    CHECK(nlohmann::json::parse(slurp(tmp / "out3/summary.json")).at("frames_skipped").get<int>() > 0);
}

TEST_CASE("missing input exits with an I/O code naming the path") {
    const char* bin = std::getenv("UWB_MAPPER_BIN");
    REQUIRE(bin != nullptr);
    TempDir tmp;
    const std::string missing = tmp / "nope.jsonl";
    const std::string cmd = std::string("UWB_MAPPER_LOG=error '") + bin + "' run '" + missing + "' -o '" +
                            (tmp / "o") + "' 2> '" + (tmp / "err.txt") + "'";
    const int status = std::system(cmd.c_str());
    REQUIRE(WIFEXITED(status));
    CHECK(WEXITSTATUS(status) == cli::kExitIo);
    CHECK(slurp(tmp / "err.txt").find(missing) != std::string::npos);

    const std::string usage = std::string("'") + bin + "' frobnicate > /dev/null 2>&1";
    const int u = std::system(usage.c_str());
    CHECK(WEXITSTATUS(u) == cli::kExitUsage);
}

TEST_CASE("simulate is deterministic for a seed") {
    TempDir tmp;
    spit(tmp / "scene.json", kScene);
    REQUIRE(run({"simulate", tmp / "scene.json", "-o", tmp / "a.jsonl", "--truth", tmp / "t.json"}) == 0);
    REQUIRE(run({"simulate", tmp / "scene.json", "-o", tmp / "b.jsonl"}) == 0);
    REQUIRE(run({"simulate", tmp / "scene.json", "-o", tmp / "c.jsonl", "--seed", "4"}) == 0);
    CHECK(slurp(tmp / "a.jsonl") == slurp(tmp / "b.jsonl"));
    CHECK(slurp(tmp / "a.jsonl") != slurp(tmp / "c.jsonl"));
    const auto truth = nlohmann::json::parse(slurp(tmp / "t.json"));
    CHECK(truth.at("objects").size() == 2);

    spit(tmp / "bad.json", R"({"obstacles":[{"x":1}],"trajectory":{"poses":[]}})");
    CHECK(run({"simulate", tmp / "bad.json", "-o", tmp / "x.jsonl"}) == cli::kExitConfig);
}

TEST_CASE("evaluate") {
    TempDir tmp;
    spit(tmp / "scene.json", kScene);
    REQUIRE(run({"simulate", tmp / "scene.json", "-o", tmp / "cap.jsonl", "--truth", tmp / "t.json"}) == 0);
    REQUIRE(run({"run", tmp / "cap.jsonl", "-o", tmp / "out"}) == 0);
    CHECK(run({"evaluate", "--truth", tmp / "t.json", "--snapshots", tmp / "out/snapshots.jsonl", "-o",
               tmp / "ev", "--label", "metal"}) == 0);
    const auto rep = nlohmann::json::parse(slurp(tmp / "ev/report.json"));
    CHECK(rep.at("mode") == "step3");
    CHECK(slurp(tmp / "ev/report.txt").find("metal") != std::string::npos);
    CHECK(slurp(tmp / "ev/cdf.csv").rfind("error_cm,cdf", 0) == 0);

    CHECK(run({"evaluate", "--truth", tmp / "t.json", "--peaks", tmp / "out/peaks.jsonl", "--mode", "step2", "-o",
               tmp / "ev2"}) == 0);
    CHECK(nlohmann::json::parse(slurp(tmp / "ev2/report.json")).at("mode") == "step2");

    spit(tmp / "empty.jsonl", "");
    CHECK(run({"evaluate", "--truth", tmp / "t.json", "--snapshots", tmp / "empty.jsonl", "-o", tmp / "ev3"}) ==
          cli::kExitData);
    spit(tmp / "notruth.json", R"({"objects":[]})");
    CHECK(run({"evaluate", "--truth", tmp / "notruth.json", "--snapshots", tmp / "out/snapshots.jsonl", "-o",
               tmp / "ev4"}) == cli::kExitConfig);
}

TEST_CASE("plot") {
    TempDir tmp;
    nlohmann::json two;
    two["t_ms"] = 100;
    two["noise_count"] = 0;
    two["clusters"] = nlohmann::json::array();
    for (int c = 0; c < 2; ++c) {
        nlohmann::json cl;
        cl["id"] = c;
        cl["centroid"] = {100.0 * c, 50.0};
        cl["n"] = 3;
        cl["mean_snr"] = 12.0;
        cl["points"] = {{100.0 * c, 40.0, 10.0}, {100.0 * c + 10, 60.0, 12.0}, {100.0 * c - 10, 60.0, 14.0}};
        two["clusters"].push_back(cl);
    }
    spit(tmp / "snap.jsonl", two.dump() + "\n");
    REQUIRE(run({"plot", "--snapshots", tmp / "snap.jsonl", "-o", tmp / "map.svg"}) == 0);
    const auto svg = slurp(tmp / "map.svg");
    CHECK(svg.rfind("<svg", 0) == 0);
    CHECK(count(svg, "<g class=\"cluster\"") == 2);
    CHECK(count(svg, "<polygon") == 2);

    spit(tmp / "scene.json", kScene);
    REQUIRE(run({"simulate", tmp / "scene.json", "-o", tmp / "cap.jsonl"}) == 0);
    REQUIRE(run({"run", tmp / "cap.jsonl", "-o", tmp / "out"}) == 0);
    spit(tmp / "none.jsonl", "");
    REQUIRE(run({"plot", "--snapshots", tmp / "none.jsonl", "--peaks", tmp / "out/peaks.jsonl", "-o",
                 tmp / "path.svg"}) == 0);
    const auto path_only = slurp(tmp / "path.svg");
    CHECK(count(path_only, "robot-path") == 1);
    CHECK(count(path_only, "<g class=\"cluster\"") == 0);
    CHECK(count(path_only, "<circle") == 0);

    REQUIRE(run({"plot", "--snapshots", tmp / "out/snapshots.jsonl", "--peaks", tmp / "out/peaks.jsonl", "--step",
                 "all", "-o", tmp / "all.svg"}) == 0);
    const auto all = slurp(tmp / "all.svg");
    CHECK(count(all, "<g class=\"panel\"") == 5);
    CHECK(all.find("(e) clustered map") != std::string::npos);
    CHECK(all.find("colorbar") != std::string::npos);
}

TEST_CASE("bad params file exits with the config code") {
    TempDir tmp;
    spit(tmp / "scene.json", kScene);
    REQUIRE(run({"simulate", tmp / "scene.json", "-o", tmp / "cap.jsonl"}) == 0);
    spit(tmp / "bad.params", "width = wide\n");
    CHECK(run({"run", tmp / "cap.jsonl", "-o", tmp / "out", "--params", tmp / "bad.params"}) == cli::kExitConfig);
    CHECK(run({"run", tmp / "cap.jsonl", "-o", tmp / "out", "--material", "glass"}) == cli::kExitUsage);
    spit(tmp / "broken.jsonl", "{\n");
    CHECK(run({"run", tmp / "broken.jsonl", "-o", tmp / "out"}) == cli::kExitData);
}
