#include "uwbmap/pipeline.hpp"

#include "uwbmap/cir.hpp"
#include "uwbmap/errors.hpp"
#include "uwbmap/peaks.hpp"

#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <limits>
#include <sstream>
#include <thread>

namespace uwbmap {

namespace {

using ordered_json = nlohmann::ordered_json;
using Clock = std::chrono::steady_clock;

double elapsed_ms(Clock::time_point t0) {
    return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

ordered_json num(double v) {
    if (std::isfinite(v)) return v;
    return nullptr;
}

double num_from(const nlohmann::json& j, double if_null) {
    if (j.is_null()) return if_null;
    return j.get<double>();
}

}  // namespace

void PipelineConfig::set_material(Material m) {
    filter_ch5 = threshold_preset(Channel::Ch5, m);
    filter_ch9 = threshold_preset(Channel::Ch9, m);
}

void PipelineConfig::validate() const {
    filter_ch5.validate();
    filter_ch9.validate();
    geometry.validate();
    cluster.validate();
}

FrameResult process_frame(const CirCapture& capture, const PipelineConfig& config) {
    validate(capture);
    FrameResult fr;
    fr.t_ms = capture.timestamp_ms;
    fr.receiver_id = capture.receiver_id;
    fr.channel = capture.channel;
    fr.pose = capture.pose;

    const FilterParams& fp = config.filter_for(capture.channel);
    const ChannelGeometry g = config.geometry.for_channel(capture.channel);
    const Pose mount = config.geometry.mount_for(capture.receiver_id);

    // Step 1: peaks on the normalized preamble magnitude.
    const auto mag_full = magnitude(capture.preamble_cir);
    const MagnitudeCir mag = split_noise_floor(mag_full, capture.first_path_index, config.n_noise);
    const NormalizedCir norm = minmax_normalize(mag);
    if (norm.degenerate) fr.diagnostics.push_back("flat CIR, no peaks");
    const auto raw = detect_peaks(norm, mag, PeakDetectionOptions{config.subsample_refine});

    // Step 2: scoring and filters.
    const PhaseCir ph1 = phase(capture.sts1_cir);
    const PhaseCir ph2 = phase(capture.sts2_cir);
    const auto scored = score_peaks(raw, mag, ph1, ph2, fp.k, config.n_noise);

    std::vector<ScoredPeak> survivors;
    std::vector<std::size_t> survivor_slot;
    for (const auto& s : scored) {
        PeakRecord rec;
        rec.peak = s;
        if (passes_property_filters(s, fp)) {
            rec.stage = passes_pdoa_gate(s, fp) ? PeakStage::Gated : PeakStage::Property;
        }
        if (auto d = total_path_length(s.raw.refined_index, mag.first_path_index, g)) {
            if (auto r = range_from_rx(*d, 0.0, g.d_tx_rx)) {
                const DetectedPoint p = to_world_frame(*r, 0.0, capture.pose, mount);
                rec.front_xy = std::array<double, 2>{p.x, p.y};
            }
        }
        if (rec.stage == PeakStage::Gated) {
            survivors.push_back(s);
            survivor_slot.push_back(fr.peaks.size());
        }
        fr.peaks.push_back(std::move(rec));
    }

    std::vector<std::size_t> emit;
    if (config.all_survivors) {
        emit = survivor_slot;
    } else if (auto best = select_target_peak(survivors)) {
        for (std::size_t k = 0; k < survivors.size(); ++k) {
            if (survivors[k].raw.index == best->raw.index) {
                emit.push_back(survivor_slot[k]);
                break;
            }
        }
    }

    // Geometry: angle, bistatic range, world position.
    for (std::size_t slot : emit) {
        PeakRecord& rec = fr.peaks[slot];
        rec.selected = true;
        const ScoredPeak& s = rec.peak;
        const auto d = total_path_length(s.raw.refined_index, mag.first_path_index, g);
        if (!d) {
            fr.diagnostics.push_back("peak " + std::to_string(s.raw.index) + ": path not longer than baseline");
            continue;
        }
        const double theta = aoa_from_pdoa(s.pdoa, g);
        const auto r = range_from_rx(*d, theta, g.d_tx_rx);
        const auto r0 = range_from_rx(*d, 0.0, g.d_tx_rx);
        if (!r || !r0) {
            fr.diagnostics.push_back("peak " + std::to_string(s.raw.index) + ": no valid range");
            continue;
        }
        Detection det;
        det.peak = slot;
        det.total_path = *d;
        det.range_front = *r0;
        det.point = to_world_frame(*r, theta, capture.pose, mount);
        det.point.snr_score = s.snr_score;
        det.point.timestamp_ms = capture.timestamp_ms;
        det.point.receiver_id = capture.receiver_id;
        fr.detections.push_back(std::move(det));
    }
    return fr;
}

RunResult run_pipeline(std::span<const CirCapture> captures, const PipelineConfig& config, unsigned threads) {
    config.validate();
    RunResult out;

    std::vector<std::size_t> todo;
    for (std::size_t i = 0; i < captures.size(); ++i) {
        if (config.channel && captures[i].channel != *config.channel) {
            ++out.skipped_frames;
        } else {
            todo.push_back(i);
        }
    }

    std::vector<FrameResult> results(todo.size());
    std::vector<double> frame_ms(todo.size(), 0.0);
    std::vector<std::exception_ptr> failures(todo.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t k = next++; k < todo.size(); k = next++) {
            const auto t0 = Clock::now();
            try {
                results[k] = process_frame(captures[todo[k]], config);
            } catch (...) {
                failures[k] = std::current_exception();
            }
            frame_ms[k] = elapsed_ms(t0);
        }
    };
    const unsigned n_workers = std::max(1U, std::min<unsigned>(threads, static_cast<unsigned>(todo.size())));
    if (n_workers <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (unsigned w = 0; w < n_workers; ++w) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }
    for (const auto& f : failures) {
        if (f) std::rethrow_exception(f);
    }

    MapAccumulator acc(config.cluster);
    auto record = [&](std::optional<MapSnapshot> s, Clock::time_point t0) {
        if (!s) return;
        const double ms = elapsed_ms(t0);
        ++out.latency.cluster_runs;
        out.latency.mean_cluster_ms += ms;
        out.latency.max_cluster_ms = std::max(out.latency.max_cluster_ms, ms);
        out.snapshots.push_back(std::move(*s));
    };
    for (const auto& fr : results) {
        for (const auto& det : fr.detections) {
            const auto t0 = Clock::now();
            record(acc.push(det.point), t0);
        }
    }
    const auto t0 = Clock::now();
    record(acc.flush(), t0);

    out.latency.frames = results.size();
    for (double ms : frame_ms) {
        out.latency.mean_frame_ms += ms;
        out.latency.max_frame_ms = std::max(out.latency.max_frame_ms, ms);
    }
    if (!frame_ms.empty()) out.latency.mean_frame_ms /= static_cast<double>(frame_ms.size());
    if (out.latency.cluster_runs > 0) out.latency.mean_cluster_ms /= static_cast<double>(out.latency.cluster_runs);
    out.frames = std::move(results);
    return out;
}

std::string frame_to_json(const FrameResult& fr) {
    ordered_json j;
    j["t_ms"] = fr.t_ms;
    j["rx"] = fr.receiver_id;
    j["ch"] = channel_number(fr.channel);
    j["pose"] = {fr.pose.x, fr.pose.y, fr.pose.yaw};
    ordered_json peaks = ordered_json::array();
    for (const auto& rec : fr.peaks) {
        const auto& p = rec.peak;
        ordered_json pj;
        pj["idx"] = p.raw.index;
        pj["refined"] = p.raw.refined_index;
        pj["amp"] = p.raw.amplitude_norm;
        pj["amp_raw"] = p.raw.amplitude_raw;
        pj["prom"] = p.raw.prominence;
        pj["width"] = p.raw.width;
        pj["trunc"] = p.raw.truncated;
        pj["delay"] = p.delay_samples;
        pj["snr"] = num(p.snr_score);
        pj["pdoa"] = p.pdoa;
        pj["stage"] = static_cast<int>(rec.stage);
        pj["selected"] = rec.selected;
        if (rec.front_xy) {
            pj["front"] = {(*rec.front_xy)[0], (*rec.front_xy)[1]};
        } else {
            pj["front"] = nullptr;
        }
        peaks.push_back(std::move(pj));
    }
    j["peaks"] = std::move(peaks);
    ordered_json dets = ordered_json::array();
    for (const auto& d : fr.detections) {
        ordered_json dj;
        dj["peak"] = d.peak;
        dj["d"] = d.total_path;
        dj["range_front"] = d.range_front;
        dj["range"] = d.point.range_rx;
        dj["aoa"] = d.point.aoa;
        dj["x"] = d.point.x;
        dj["y"] = d.point.y;
        dj["snr"] = num(d.point.snr_score);
        dets.push_back(std::move(dj));
    }
    j["detections"] = std::move(dets);
    j["diag"] = fr.diagnostics;
    return j.dump();
}

FrameResult frame_from_json(const std::string& line, std::size_t line_no) {
    constexpr double inf = std::numeric_limits<double>::infinity();
    FrameResult fr;
    try {
        const auto j = nlohmann::json::parse(line);
        fr.t_ms = j.at("t_ms").get<std::int64_t>();
        fr.receiver_id = j.at("rx").get<std::string>();
        fr.channel = channel_from_number(j.at("ch").get<int>());
        const auto& pose = j.at("pose");
        fr.pose = Pose{pose.at(0).get<double>(), pose.at(1).get<double>(), pose.at(2).get<double>()};
        for (const auto& pj : j.at("peaks")) {
            PeakRecord rec;
            rec.peak.raw.index = pj.at("idx").get<std::size_t>();
            rec.peak.raw.refined_index = pj.at("refined").get<double>();
            rec.peak.raw.amplitude_norm = pj.at("amp").get<double>();
            rec.peak.raw.amplitude_raw = pj.at("amp_raw").get<double>();
            rec.peak.raw.prominence = pj.at("prom").get<double>();
            rec.peak.raw.width = pj.at("width").get<double>();
            rec.peak.raw.truncated = pj.at("trunc").get<bool>();
            rec.peak.delay_samples = pj.at("delay").get<int>();
            rec.peak.snr_score = num_from(pj.at("snr"), inf);
            rec.peak.pdoa = pj.at("pdoa").get<double>();
            const int stage = pj.at("stage").get<int>();
            if (stage < 0 || stage > 2) throw Error(ErrorKind::Format, "bad peak stage", line_no);
            rec.stage = static_cast<PeakStage>(stage);
            rec.selected = pj.at("selected").get<bool>();
            const auto& front = pj.at("front");
            if (!front.is_null()) rec.front_xy = std::array<double, 2>{front.at(0).get<double>(), front.at(1).get<double>()};
            fr.peaks.push_back(std::move(rec));
        }
        for (const auto& dj : j.at("detections")) {
            Detection d;
            d.peak = dj.at("peak").get<std::size_t>();
            d.total_path = dj.at("d").get<double>();
            d.range_front = dj.at("range_front").get<double>();
            d.point.range_rx = dj.at("range").get<double>();
            d.point.aoa = dj.at("aoa").get<double>();
            d.point.x = dj.at("x").get<double>();
            d.point.y = dj.at("y").get<double>();
            d.point.snr_score = num_from(dj.at("snr"), inf);
            d.point.timestamp_ms = fr.t_ms;
            d.point.receiver_id = fr.receiver_id;
            fr.detections.push_back(std::move(d));
        }
        fr.diagnostics = j.at("diag").get<std::vector<std::string>>();
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorKind::Format, std::string("bad peaks record: ") + e.what(), line_no);
    }
    return fr;
}

std::vector<FrameResult> read_frames(std::istream& in) {
    std::vector<FrameResult> out;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        out.push_back(frame_from_json(line, line_no));
    }
    return out;
}

std::vector<FrameRanges> frame_ranges(std::span<const FrameResult> frames) {
    std::vector<FrameRanges> out;
    out.reserve(frames.size());
    for (const auto& f : frames) {
        FrameRanges r;
        r.t_ms = f.t_ms;
        r.receiver_id = f.receiver_id;
        for (const auto& d : f.detections) r.ranges.push_back(d.range_front);
        out.push_back(std::move(r));
    }
    return out;
}

std::vector<PoseSample> read_pose_log(std::istream& in) {
    std::vector<PoseSample> out;
    std::string line;
    std::size_t line_no = 0;
    bool header = true;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (header) {
            header = false;
            if (line != "t_ms,x,y,yaw") throw Error(ErrorKind::Format, "pose log header must be t_ms,x,y,yaw", line_no);
            continue;
        }
        std::istringstream row(line);
        std::string cell;
        std::vector<double> v;
        while (std::getline(row, cell, ',')) {
            try {
                std::size_t used = 0;
                v.push_back(std::stod(cell, &used));
                if (used != cell.size()) throw std::invalid_argument(cell);
            } catch (const std::exception&) {
                throw Error(ErrorKind::Format, "non-numeric pose field '" + cell + "'", line_no);
            }
        }
        if (v.size() != 4) throw Error(ErrorKind::Format, "pose row needs 4 fields", line_no);
        PoseSample p;
        p.t_ms = static_cast<std::int64_t>(std::llround(v[0]));
        p.pose = Pose{v[1], v[2], normalize_angle(v[3])};
        if (!out.empty() && p.t_ms < out.back().t_ms) {
            throw Error(ErrorKind::Order, "pose timestamps go backwards", line_no);
        }
        out.push_back(p);
    }
    return out;
}

void attach_poses(std::span<CirCapture> captures, std::span<const PoseSample> poses) {
    if (poses.empty()) throw Error(ErrorKind::Empty, "pose log has no rows");
    for (auto& c : captures) {
        auto it = std::lower_bound(poses.begin(), poses.end(), c.timestamp_ms,
                                   [](const PoseSample& p, std::int64_t t) { return p.t_ms < t; });
        if (it == poses.end()) {
            c.pose = poses.back().pose;
        } else if (it == poses.begin()) {
            c.pose = it->pose;
        } else {
            auto prev = std::prev(it);
            c.pose = (c.timestamp_ms - prev->t_ms <= it->t_ms - c.timestamp_ms) ? prev->pose : it->pose;
        }
    }
}

}  // namespace uwbmap
