#include <doctest.h>

#include "fixtures.hpp"
#include "oracles.hpp"
#include "uwbmap/clustering.hpp"
#include "uwbmap/errors.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

using namespace uwbmap;

namespace {

using XY = std::array<double, 2>;

DetectedPoint pt(double x, double y, std::int64_t t = 0, double snr = 15.0) {
    DetectedPoint p;
    p.x = x;
    p.y = y;
    p.timestamp_ms = t;
    p.snr_score = snr;
    return p;
}

std::vector<XY> blob(std::mt19937_64& rng, double cx, double cy, double spread, std::size_t n) {
    std::normal_distribution<double> g(0.0, spread);
    std::vector<XY> v(n);
    for (auto& p : v) p = {cx + g(rng), cy + g(rng)};
    return v;
}

void check_against_oracle(const std::vector<XY>& xy, double eps, std::size_t ms) {
    const auto got = dbscan_labels(xy, eps, ms);
    const auto want = oracle::dbscan(xy, eps, ms);
    CHECK(got.cluster_count == want.clusters);
    CHECK(got.label == want.label);
    CHECK(got.core == want.core);
}

}  // namespace

TEST_CASE("twenty identical points form one cluster") {
    std::vector<XY> xy(20, XY{5.0, 5.0});
    const auto r = dbscan_labels(xy, 20.0, 20);
    CHECK(r.cluster_count == 1);
    CHECK(std::all_of(r.label.begin(), r.label.end(), [](int l) { return l == 0; }));
    xy.pop_back();
    const auto s = dbscan_labels(xy, 20.0, 20);
    CHECK(s.cluster_count == 0);
    CHECK(std::all_of(s.label.begin(), s.label.end(), [](int l) { return l == -1; }));
}

TEST_CASE("two separated blobs") {
    std::mt19937_64 rng(21);
    auto xy = blob(rng, 0, 0, 3, 25);
    const auto b = blob(rng, 100, 0, 3, 25);
    xy.insert(xy.end(), b.begin(), b.end());
    const auto r = dbscan_labels(xy, 20.0, 20);
    CHECK(r.cluster_count == 2);
    for (std::size_t i = 0; i < 25; ++i) CHECK(r.label[i] == 0);
    for (std::size_t i = 25; i < 50; ++i) CHECK(r.label[i] == 1);
}

TEST_CASE("boundary distance counts as a neighbour") {
    // Exactly eps apart, min_samples 2.
    const std::vector<XY> xy{{0, 0}, {20, 0}};
    CHECK(dbscan_labels(xy, 20.0, 2).cluster_count == 1);
    const std::vector<XY> far{{0, 0}, {20.000001, 0}};
    CHECK(dbscan_labels(far, 20.0, 2).cluster_count == 0);
}

TEST_CASE("matches sklearn on fixture cases") {
    const auto& cases = derived().at("dbscan_cases");
    REQUIRE(cases.size() >= 10);
    for (const auto& c : cases) {
        std::vector<XY> xy;
        for (const auto& p : c.at("xy")) xy.push_back({p[0].get<double>(), p[1].get<double>()});
        const auto r = dbscan_labels(xy, 20.0, 20);
        CHECK(r.label == c.at("label").get<std::vector<int>>());
        CHECK(r.core == c.at("core").get<std::vector<bool>>());
    }
}

TEST_CASE("matches the brute force oracle on random instances") {
    std::mt19937_64 rng(77);
    std::uniform_int_distribution<int> nb(1, 5);
    std::uniform_real_distribution<double> c(0, 200);
    std::uniform_real_distribution<double> sp(2, 15);
    std::uniform_int_distribution<std::size_t> sz(0, 60);
    for (int t = 0; t < 200; ++t) {
        std::vector<XY> xy;
        const int blobs = nb(rng);
        for (int k = 0; k < blobs; ++k) {
            const auto b = blob(rng, c(rng), c(rng), sp(rng), sz(rng));
            xy.insert(xy.end(), b.begin(), b.end());
        }
        std::shuffle(xy.begin(), xy.end(), rng);
        check_against_oracle(xy, 20.0, 20);
        check_against_oracle(xy, 7.5, 4);
    }
}

TEST_CASE("labels are invariant to translation and input order") {
    std::mt19937_64 rng(5);
    for (int t = 0; t < 30; ++t) {
        auto xy = blob(rng, 0, 0, 12, 120);
        const auto more = blob(rng, 60, 10, 6, 40);
        xy.insert(xy.end(), more.begin(), more.end());
        std::vector<DetectedPoint> pts;
        for (std::size_t i = 0; i < xy.size(); ++i) pts.push_back(pt(xy[i][0], xy[i][1], static_cast<std::int64_t>(i)));
        const auto base = dbscan(pts, ClusterParams{});

        // Power of two shift keeps the arithmetic exact.
        auto shifted = pts;
        for (auto& p : shifted) {
            p.x += 1024.0;
            p.y -= 512.0;
        }
        const auto moved = dbscan(shifted, ClusterParams{});
        REQUIRE(moved.clusters.size() == base.clusters.size());
        for (std::size_t k = 0; k < base.clusters.size(); ++k) {
            CHECK(moved.clusters[k].members.size() == base.clusters[k].members.size());
            CHECK(moved.clusters[k].centroid[0] == doctest::Approx(base.clusters[k].centroid[0] + 1024.0));
        }

        auto shuffled = pts;
        std::shuffle(shuffled.begin(), shuffled.end(), rng);
        const auto again = dbscan(shuffled, ClusterParams{});
        REQUIRE(again.clusters.size() == base.clusters.size());
        CHECK(again.noise.size() == base.noise.size());
        for (std::size_t k = 0; k < base.clusters.size(); ++k) {
            CHECK(again.clusters[k].centroid == base.clusters[k].centroid);
        }
    }
}

TEST_CASE("centroid and mean SNR") {
    const std::vector<DetectedPoint> m{pt(0, 0, 0, 10), pt(2, 4, 0, 20), pt(4, 2, 0, 30)};
    const auto c = cluster_centroid(m);
    CHECK(c[0] == doctest::Approx(2.0));
    CHECK(c[1] == doctest::Approx(2.0));
    std::vector<DetectedPoint> many(25, pt(1, 1, 0, 12));
    const auto r = dbscan(many, ClusterParams{});
    REQUIRE(r.clusters.size() == 1);
    CHECK(r.clusters[0].mean_snr == doctest::Approx(12.0));
}

TEST_CASE("cluster params validation") {
    ClusterParams p;
    CHECK_NOTHROW(p.validate());
    p.eps = 0;
    CHECK_THROWS_AS(p.validate(), Error);
    p = ClusterParams{};
    p.min_peaks = 10;
    CHECK_THROWS_AS(p.validate(), Error);
}

TEST_CASE("accumulator runs every min_peaks points") {
    MapAccumulator acc(ClusterParams{});
    for (int i = 0; i < 49; ++i) CHECK_FALSE(acc.push(pt(0.1 * i, 0, i)).has_value());
    const auto snap = acc.push(pt(5, 0, 49));
    REQUIRE(snap.has_value());
    CHECK(snap->t_ms == 49);
    CHECK(snap->clusters.size() == 1);
    CHECK(acc.pending() == 0);
    CHECK(acc.buffered() == 50);
    CHECK_FALSE(acc.flush().has_value());
    for (int i = 0; i < 30; ++i) CHECK_FALSE(acc.push(pt(300 + 0.1 * i, 0, 100 + i)).has_value());
    const auto f = acc.flush();
    REQUIRE(f.has_value());
    CHECK(f->clusters.size() == 2);
    CHECK(f->t_ms == 129);
}

TEST_CASE("noise is retained and reconsidered") {
    ClusterParams p;
    p.min_peaks = 20;
    MapAccumulator acc(p);
    std::optional<MapSnapshot> s;
    for (int i = 0; i < 10; ++i) s = acc.push(pt(0, 0, i));
    for (int i = 0; i < 10; ++i) s = acc.push(pt(500 + i, 500, 10 + i));
    REQUIRE(s.has_value());
    CHECK(s->clusters.empty());
    CHECK(s->noise_count == 20);
    for (int i = 0; i < 20; ++i) s = acc.push(pt(0.5, 0.5, 20 + i));
    REQUIRE(s.has_value());
    REQUIRE(s->clusters.size() == 1);
    CHECK(s->clusters[0].members.size() == 30);
}

TEST_CASE("snapshot JSON round trip") {
    MapSnapshot s;
    s.t_ms = 1234;
    s.noise_count = 3;
    Cluster c;
    c.id = 0;
    c.members = {pt(1.25, -2.5, 0, 11.0), pt(3.0, 4.0, 0, std::numeric_limits<double>::infinity())};
    c.centroid = cluster_centroid(c.members);
    c.mean_snr = std::numeric_limits<double>::infinity();
    s.clusters.push_back(c);
    const auto line = snapshot_to_json(s);
    CHECK(line.find("null") != std::string::npos);
    const auto back = snapshot_from_json(line);
    CHECK(back.t_ms == 1234);
    CHECK(back.noise_count == 3);
    REQUIRE(back.clusters.size() == 1);
    CHECK(back.clusters[0].centroid == c.centroid);
    REQUIRE(back.clusters[0].members.size() == 2);
    CHECK(back.clusters[0].members[0].x == 1.25);
    CHECK(back.clusters[0].members[0].snr_score == 11.0);
    CHECK(std::isinf(back.clusters[0].members[1].snr_score));
    CHECK(snapshot_to_json(back) == line);
    CHECK_THROWS_AS(snapshot_from_json("{oops"), Error);
}

TEST_CASE("large dense input clusters quickly") {
    std::mt19937_64 rng(3);
    auto xy = blob(rng, 0, 0, 8, 2500);
    const auto b = blob(rng, 200, 200, 30, 2500);
    xy.insert(xy.end(), b.begin(), b.end());
    const auto t0 = std::chrono::steady_clock::now();
    const auto r = dbscan_labels(xy, 20.0, 20);
    const double ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    MESSAGE("5000 points: " << ms << " ms");
    CHECK(r.cluster_count >= 2);
    CHECK(ms < 500.0);
}
