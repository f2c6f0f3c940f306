#pragma once

// Slow reference implementations used to cross-check the library.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <deque>
#include <set>
#include <span>
#include <vector>

namespace oracle {

// Contour search: the base is the highest level h such that the connected
// run of samples >= h around the peak reaches a strictly higher sample or an
// array end.
inline double prominence(std::span<const double> x, std::size_t peak) {
    std::set<double, std::greater<>> levels;
    for (double v : x) {
        if (v <= x[peak]) levels.insert(v);
    }
    const std::size_t n = x.size();
    for (double h : levels) {
        std::size_t lo = peak;
        std::size_t hi = peak;
        while (lo > 0 && x[lo - 1] >= h) --lo;
        while (hi + 1 < n && x[hi + 1] >= h) ++hi;
        bool escapes = lo == 0 || hi == n - 1;
        for (std::size_t k = lo; k <= hi && !escapes; ++k) escapes = x[k] > x[peak];
        if (escapes) return x[peak] - h;
    }
    return 0.0;
}

// Textbook DBSCAN: scan points in order, expand every unvisited core point
// breadth-first with brute-force neighbourhoods.
struct DbscanResult {
    std::vector<int> label;
    std::vector<bool> core;
    int clusters{0};
};

inline DbscanResult dbscan(std::span<const std::array<double, 2>> xy, double eps, std::size_t min_samples) {
    const std::size_t n = xy.size();
    auto near = [&](std::size_t a, std::size_t b) {
        const double dx = xy[a][0] - xy[b][0];
        const double dy = xy[a][1] - xy[b][1];
        return dx * dx + dy * dy <= eps * eps;
    };
    std::vector<std::vector<std::size_t>> nb(n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            if (near(i, j)) nb[i].push_back(j);
        }
    }
    DbscanResult r;
    r.core.resize(n);
    for (std::size_t i = 0; i < n; ++i) r.core[i] = nb[i].size() >= min_samples;
    constexpr int unvisited = -2;
    r.label.assign(n, unvisited);
    for (std::size_t i = 0; i < n; ++i) {
        if (r.label[i] != unvisited) continue;
        if (!r.core[i]) {
            r.label[i] = -1;
            continue;
        }
        const int id = r.clusters++;
        r.label[i] = id;
        std::deque<std::size_t> q{i};
        while (!q.empty()) {
            const std::size_t p = q.front();
            q.pop_front();
            for (std::size_t j : nb[p]) {
                if (r.label[j] == -1) r.label[j] = id;
                if (r.label[j] != unvisited) continue;
                r.label[j] = id;
                if (r.core[j]) q.push_back(j);
            }
        }
    }
    return r;
}

// Receiver at the origin looking along +x, transmitter at (0, -b). Returns the
// total path TX -> target -> RX for a target at (r, theta).
inline double bistatic_path(double r, double theta, double b) {
    const double px = r * std::cos(theta);
    const double py = r * std::sin(theta);
    return std::hypot(px, py + b) + std::hypot(px, py);
}

// Linear interpolation between closest ranks, written from the rank formula.
inline double percentile(std::vector<double> v, double p) {
    std::sort(v.begin(), v.end());
    const double rank = p / 100.0 * static_cast<double>(v.size() - 1);
    const double lo = std::floor(rank);
    const double hi = std::ceil(rank);
    return v[static_cast<std::size_t>(lo)] * (1.0 - (rank - lo)) + v[static_cast<std::size_t>(hi)] * (rank - lo);
}

}  // namespace oracle
