#include "uwbmap/clustering.hpp"

#include "uwbmap/errors.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <unordered_map>

namespace uwbmap {

namespace {

constexpr int kNoise = -1;

// Square cells slightly smaller than eps / sqrt(2): any two points sharing a
// cell are within eps, and a neighbour is at most two cells away.
class GridIndex {
public:
    GridIndex(std::span<const std::array<double, 2>> xy, double eps)
        : xy_(xy), eps_sq_(eps * eps), side_(eps / std::numbers::sqrt2 * (1.0 - 1e-9)) {
        cell_.resize(xy.size());
        for (std::size_t i = 0; i < xy.size(); ++i) {
            cell_[i] = {cell_of(xy[i][0]), cell_of(xy[i][1])};
            cells_[key(cell_[i][0], cell_[i][1])].push_back(i);
        }
    }

    bool within(std::size_t a, std::size_t b) const {
        const double dx = xy_[a][0] - xy_[b][0];
        const double dy = xy_[a][1] - xy_[b][1];
        return dx * dx + dy * dy <= eps_sq_;
    }

    const std::vector<std::size_t>& members(std::size_t i) const { return cells_.at(key(cell_[i][0], cell_[i][1])); }

    // Calls fn(cell members) for the 5x5 block of cells around point i.
    template <typename Fn>
    void for_block(std::size_t i, Fn&& fn) const {
        for (std::int64_t dx = -2; dx <= 2; ++dx) {
            for (std::int64_t dy = -2; dy <= 2; ++dy) {
                auto it = cells_.find(key(cell_[i][0] + dx, cell_[i][1] + dy));
                if (it != cells_.end() && !fn(it->second)) return;
            }
        }
    }

    const std::array<std::int64_t, 2>& cell(std::size_t i) const { return cell_[i]; }

    static std::uint64_t key(std::int64_t cx, std::int64_t cy) {
        return (static_cast<std::uint64_t>(cx) << 32) ^ (static_cast<std::uint64_t>(cy) & 0xffffffffULL);
    }

private:
    std::int64_t cell_of(double v) const { return static_cast<std::int64_t>(std::floor(v / side_)); }

    std::span<const std::array<double, 2>> xy_;
    double eps_sq_;
    double side_;
    std::vector<std::array<std::int64_t, 2>> cell_;
    std::unordered_map<std::uint64_t, std::vector<std::size_t>> cells_;
};

std::size_t find_root(std::vector<std::size_t>& parent, std::size_t i) {
    while (parent[i] != i) {
        parent[i] = parent[parent[i]];
        i = parent[i];
    }
    return i;
}

bool point_less(const DetectedPoint& a, const DetectedPoint& b) {
    if (a.timestamp_ms != b.timestamp_ms) return a.timestamp_ms < b.timestamp_ms;
    if (a.x != b.x) return a.x < b.x;
    return a.y < b.y;
}

nlohmann::ordered_json number_or_null(double v) {
    if (std::isfinite(v)) return v;
    return nullptr;
}

double number_from(const nlohmann::json& j) {
    if (j.is_null()) return std::numeric_limits<double>::infinity();
    return j.get<double>();
}

}  // namespace

void ClusterParams::validate() const {
    if (!(eps > 0.0)) throw Error(ErrorKind::Config, "eps must be positive");
    if (min_samples < 1) throw Error(ErrorKind::Config, "min_samples must be at least 1");
    if (min_peaks < min_samples) throw Error(ErrorKind::Config, "min_peaks must be at least min_samples");
}

// Equivalent to the textbook scan-and-expand formulation: clusters are
// numbered by their lowest-index core point, and a border point goes to the
// lowest-numbered cluster with a core within eps.
DbscanLabels dbscan_labels(std::span<const std::array<double, 2>> xy, double eps, std::size_t min_samples) {
    const std::size_t n = xy.size();
    DbscanLabels r;
    r.label.assign(n, kNoise);
    r.core.assign(n, false);
    if (n == 0) return r;

    const GridIndex grid(xy, eps);
    for (std::size_t i = 0; i < n; ++i) {
        if (grid.members(i).size() >= min_samples) {
            r.core[i] = true;
            continue;
        }
        std::size_t count = 0;
        grid.for_block(i, [&](const std::vector<std::size_t>& cell) {
            for (std::size_t j : cell) {
                if (grid.within(i, j) && ++count >= min_samples) return false;
            }
            return true;
        });
        r.core[i] = count >= min_samples;
    }

    // Connect cores: all cores of one cell, then cell pairs with a close pair.
    std::vector<std::size_t> parent(n);
    std::iota(parent.begin(), parent.end(), std::size_t{0});
    std::unordered_map<std::uint64_t, std::vector<std::size_t>> core_cells;
    for (std::size_t i = 0; i < n; ++i) {
        if (r.core[i]) core_cells[GridIndex::key(grid.cell(i)[0], grid.cell(i)[1])].push_back(i);
    }
    for (const auto& [k, cores] : core_cells) {
        for (std::size_t m = 1; m < cores.size(); ++m) {
            parent[find_root(parent, cores[m])] = find_root(parent, cores[0]);
        }
    }
    for (const auto& [k, cores] : core_cells) {
        const auto& c = grid.cell(cores[0]);
        for (std::int64_t dx = -2; dx <= 2; ++dx) {
            for (std::int64_t dy = -2; dy <= 2; ++dy) {
                const std::uint64_t other = GridIndex::key(c[0] + dx, c[1] + dy);
                if (other <= k) continue;
                auto it = core_cells.find(other);
                if (it == core_cells.end()) continue;
                if (find_root(parent, cores[0]) == find_root(parent, it->second[0])) continue;
                bool linked = false;
                for (std::size_t a : cores) {
                    for (std::size_t b : it->second) {
                        if (grid.within(a, b)) {
                            linked = true;
                            break;
                        }
                    }
                    if (linked) break;
                }
                if (linked) parent[find_root(parent, it->second[0])] = find_root(parent, cores[0]);
            }
        }
    }

    std::vector<int> root_id(n, kNoise);
    for (std::size_t i = 0; i < n; ++i) {
        if (!r.core[i]) continue;
        const std::size_t root = find_root(parent, i);
        if (root_id[root] == kNoise) root_id[root] = r.cluster_count++;
        r.label[i] = root_id[root];
    }
    for (std::size_t i = 0; i < n; ++i) {
        if (r.core[i]) continue;
        int best = kNoise;
        grid.for_block(i, [&](const std::vector<std::size_t>& cell) {
            for (std::size_t j : cell) {
                if (r.core[j] && (best == kNoise || r.label[j] < best) && grid.within(i, j)) best = r.label[j];
            }
            return true;
        });
        r.label[i] = best;
    }
    return r;
}

std::array<double, 2> cluster_centroid(std::span<const DetectedPoint> members) {
    if (members.empty()) {
        throw Error(ErrorKind::Empty, "centroid of an empty cluster");
    }
    double sx = 0.0;
    double sy = 0.0;
    for (const auto& p : members) {
        sx += p.x;
        sy += p.y;
    }
    const auto n = static_cast<double>(members.size());
    return {sx / n, sy / n};
}

ClusteringResult dbscan(std::span<const DetectedPoint> points, const ClusterParams& params) {
    std::vector<DetectedPoint> sorted(points.begin(), points.end());
    std::stable_sort(sorted.begin(), sorted.end(), point_less);

    std::vector<std::array<double, 2>> xy(sorted.size());
    std::transform(sorted.begin(), sorted.end(), xy.begin(), [](const DetectedPoint& p) {
        return std::array<double, 2>{p.x, p.y};
    });
    const DbscanLabels labels = dbscan_labels(xy, params.eps, params.min_samples);

    ClusteringResult out;
    out.clusters.resize(static_cast<std::size_t>(labels.cluster_count));
    for (std::size_t i = 0; i < sorted.size(); ++i) {
        const int l = labels.label[i];
        if (l < 0) {
            out.noise.push_back(sorted[i]);
        } else {
            out.clusters[static_cast<std::size_t>(l)].members.push_back(sorted[i]);
        }
    }
    for (std::size_t c = 0; c < out.clusters.size(); ++c) {
        Cluster& cl = out.clusters[c];
        cl.id = static_cast<int>(c);
        cl.centroid = cluster_centroid(cl.members);
        double snr = 0.0;
        for (const auto& m : cl.members) snr += m.snr_score;
        cl.mean_snr = snr / static_cast<double>(cl.members.size());
    }
    return out;
}

MapAccumulator::MapAccumulator(ClusterParams params) : params_(params) { params_.validate(); }

std::optional<MapSnapshot> MapAccumulator::push(DetectedPoint point) {
    buffer_.push_back(std::move(point));
    ++pending_;
    if (pending_ >= params_.min_peaks) return run();
    return std::nullopt;
}

std::optional<MapSnapshot> MapAccumulator::flush() {
    if (pending_ == 0) return std::nullopt;
    return run();
}

MapSnapshot MapAccumulator::run() {
    pending_ = 0;
    ClusteringResult r = dbscan(buffer_, params_);
    MapSnapshot s;
    for (const auto& p : buffer_) s.t_ms = std::max(s.t_ms, p.timestamp_ms);
    s.clusters = std::move(r.clusters);
    s.noise_count = r.noise.size();
    return s;
}

std::string snapshot_to_json(const MapSnapshot& s) {
    using ordered_json = nlohmann::ordered_json;
    ordered_json j;
    j["t_ms"] = s.t_ms;
    ordered_json clusters = ordered_json::array();
    for (const auto& c : s.clusters) {
        ordered_json cj;
        cj["id"] = c.id;
        cj["centroid"] = {c.centroid[0], c.centroid[1]};
        cj["n"] = c.members.size();
        cj["mean_snr"] = number_or_null(c.mean_snr);
        ordered_json pts = ordered_json::array();
        for (const auto& m : c.members) pts.push_back({m.x, m.y, number_or_null(m.snr_score)});
        cj["points"] = std::move(pts);
        clusters.push_back(std::move(cj));
    }
    j["clusters"] = std::move(clusters);
    j["noise_count"] = s.noise_count;
    return j.dump();
}

MapSnapshot snapshot_from_json(const std::string& line) {
    MapSnapshot s;
    try {
        const auto j = nlohmann::json::parse(line);
        s.t_ms = j.at("t_ms").get<std::int64_t>();
        s.noise_count = j.at("noise_count").get<std::size_t>();
        for (const auto& cj : j.at("clusters")) {
            Cluster c;
            c.id = cj.at("id").get<int>();
            c.centroid = {cj.at("centroid").at(0).get<double>(), cj.at("centroid").at(1).get<double>()};
            c.mean_snr = number_from(cj.at("mean_snr"));
            for (const auto& pj : cj.at("points")) {
                DetectedPoint p;
                p.x = pj.at(0).get<double>();
                p.y = pj.at(1).get<double>();
                p.snr_score = number_from(pj.at(2));
                p.timestamp_ms = s.t_ms;
                c.members.push_back(p);
            }
            s.clusters.push_back(std::move(c));
        }
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorKind::Format, std::string("bad snapshot: ") + e.what());
    }
    return s;
}

}  // namespace uwbmap
