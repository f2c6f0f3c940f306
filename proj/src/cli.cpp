#include "uwbmap/cli.hpp"

#include "uwbmap/capture.hpp"
#include "uwbmap/errors.hpp"
#include "uwbmap/eval.hpp"
#include "uwbmap/numfmt.hpp"
#include "uwbmap/params.hpp"
#include "uwbmap/pipeline.hpp"
#include "uwbmap/plot.hpp"
#include "uwbmap/sim.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

namespace uwbmap::cli {

namespace fs = std::filesystem;
using ordered_json = nlohmann::ordered_json;

namespace {

enum class Level { Error = 0, Warn = 1, Info = 2, Debug = 3 };

Level log_level() {
    const char* env = std::getenv("UWB_MAPPER_LOG");
    if (!env) return Level::Warn;
    const std::string v = env;
    if (v == "error" || v == "off") return Level::Error;
    if (v == "info") return Level::Info;
    if (v == "debug") return Level::Debug;
    return Level::Warn;
}

void log(Level lvl, const std::string& msg) {
    static const Level threshold = log_level();
    if (lvl > threshold) return;
    static const char* names[] = {"error", "warning", "info", "debug"};
    std::cerr << "uwb_mapper: " << names[static_cast<int>(lvl)] << ": " << msg << '\n';
}

std::ifstream open_in(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorKind::Io, "cannot open '" + path + "'");
    return in;
}

void write_file(const fs::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorKind::Io, "cannot write '" + path.string() + "'");
    out << content;
    if (!out) throw Error(ErrorKind::Io, "write failed for '" + path.string() + "'");
}

void make_dir(const fs::path& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw Error(ErrorKind::Io, "cannot create directory '" + dir.string() + "': " + ec.message());
}

CaptureFormat format_for(const std::string& path, const std::string& flag) {
    if (flag == "csv") return CaptureFormat::Csv;
    if (flag == "jsonl") return CaptureFormat::Jsonl;
    return fs::path(path).extension() == ".csv" ? CaptureFormat::Csv : CaptureFormat::Jsonl;
}

ordered_json filter_json(const FilterParams& f) {
    return {{"width", f.width_min}, {"prominence", f.prominence_min}, {"snr", f.snr_min},
            {"k", f.k},             {"pdoa_gate", f.pdoa_gate},       {"drop_truncated", f.drop_truncated}};
}

ordered_json config_json(const PipelineConfig& c) {
    ordered_json j;
    j["filter_ch5"] = filter_json(c.filter_ch5);
    j["filter_ch9"] = filter_json(c.filter_ch9);
    j["geometry"] = {{"d_tx_rx", c.geometry.d_tx_rx},
                     {"aoa_coeff", c.geometry.aoa_coeff},
                     {"baseline_in_delay", c.geometry.baseline_in_delay},
                     {"bias_ch5", {c.geometry.bias_ch5.range_cm, c.geometry.bias_ch5.aoa_rad}},
                     {"bias_ch9", {c.geometry.bias_ch9.range_cm, c.geometry.bias_ch9.aoa_rad}}};
    j["cluster"] = {{"eps", c.cluster.eps}, {"min_samples", c.cluster.min_samples}, {"min_peaks", c.cluster.min_peaks}};
    j["n_noise"] = c.n_noise;
    j["subsample_refine"] = c.subsample_refine;
    j["all_survivors"] = c.all_survivors;
    if (c.channel) {
        j["channel"] = channel_number(*c.channel);
    } else {
        j["channel"] = nullptr;
    }
    return j;
}

std::vector<MapSnapshot> read_snapshots(const std::string& path) {
    auto in = open_in(path);
    std::vector<MapSnapshot> out;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        try {
            out.push_back(snapshot_from_json(line));
        } catch (const Error& e) {
            throw Error(e.kind(), path + ": " + e.detail(), line_no);
        }
    }
    return out;
}

struct RunOptions {
    std::string input;
    std::string format{"auto"};
    std::string out_dir{"uwb_out"};
    std::vector<std::string> params;
    std::optional<int> channel;
    std::string material{"overall"};
    bool all_survivors{false};
    bool no_refine{false};
    std::optional<std::string> baseline_in_delay;
    unsigned threads{1};
    std::string poses;
};

int cmd_run(const RunOptions& o) {
    PipelineConfig cfg;
    cfg.set_material(material_from_string(o.material));
    for (const auto& p : o.params) {
        auto in = open_in(p);
        apply_params(in, cfg, p);
    }
    if (o.channel) cfg.channel = channel_from_number(*o.channel);
    if (o.all_survivors) cfg.all_survivors = true;
    if (o.no_refine) cfg.subsample_refine = false;
    if (o.baseline_in_delay) cfg.geometry.baseline_in_delay = parse_bool(*o.baseline_in_delay);
    cfg.validate();

    std::vector<CirCapture> captures;
    {
        auto in = open_in(o.input);
        try {
            captures = parse_capture_stream(in, format_for(o.input, o.format));
        } catch (const Error& e) {
            throw Error(e.kind(), o.input + ": " + e.detail(), e.line());
        }
    }
    if (!o.poses.empty()) {
        auto in = open_in(o.poses);
        const auto poses = read_pose_log(in);
        attach_poses(captures, poses);
    }
    log(Level::Info, "read " + std::to_string(captures.size()) + " captures from " + o.input);

    const RunResult r = run_pipeline(captures, cfg, o.threads);

    const fs::path dir(o.out_dir);
    make_dir(dir);
    std::string snaps;
    for (const auto& s : r.snapshots) snaps += snapshot_to_json(s) + "\n";
    write_file(dir / "snapshots.jsonl", snaps);
    std::string peaks;
    std::size_t n_peaks = 0;
    std::size_t n_det = 0;
    for (const auto& f : r.frames) {
        peaks += frame_to_json(f) + "\n";
        n_peaks += f.peaks.size();
        n_det += f.detections.size();
        for (const auto& d : f.diagnostics) log(Level::Debug, "t=" + std::to_string(f.t_ms) + " " + d);
    }
    write_file(dir / "peaks.jsonl", peaks);

    ordered_json summary;
    summary["input"] = fs::path(o.input).filename().string();
    summary["captures"] = captures.size();
    summary["frames_processed"] = r.frames.size();
    summary["frames_skipped"] = r.skipped_frames;
    summary["peaks"] = n_peaks;
    summary["detections"] = n_det;
    summary["snapshots"] = r.snapshots.size();
    summary["final_clusters"] = r.snapshots.empty() ? 0 : r.snapshots.back().clusters.size();
    summary["material"] = o.material;
    summary["config"] = config_json(cfg);
    write_file(dir / "summary.json", summary.dump(2) + "\n");

    // Wall-clock numbers vary run to run; kept apart from the reproducible files.
    ordered_json timing;
    timing["frames"] = r.latency.frames;
    timing["mean_frame_ms"] = r.latency.mean_frame_ms;
    timing["max_frame_ms"] = r.latency.max_frame_ms;
    timing["frame_budget_ms"] = kFrameIntervalMs;
    timing["cluster_runs"] = r.latency.cluster_runs;
    timing["mean_cluster_ms"] = r.latency.mean_cluster_ms;
    timing["max_cluster_ms"] = r.latency.max_cluster_ms;
    write_file(dir / "timing.json", timing.dump(2) + "\n");

    std::cout << "frames " << r.frames.size() << " (skipped " << r.skipped_frames << "), peaks " << n_peaks
              << ", detections " << n_det << ", snapshots " << r.snapshots.size() << ", final clusters "
              << summary["final_clusters"].get<std::size_t>() << '\n';
    std::cout << "mean latency " << format_fixed(r.latency.mean_frame_ms, 4) << " ms/frame (budget "
              << format_fixed(kFrameIntervalMs, 2) << " ms), max clustering "
              << format_fixed(r.latency.max_cluster_ms, 3) << " ms\n";
    if (r.latency.mean_frame_ms >= kFrameIntervalMs) {
        log(Level::Warn, "mean frame latency exceeds the frame interval");
    }
    return kExitOk;
}

struct SimOptions {
    std::string scene;
    std::string out;
    std::string truth;
    std::string format{"auto"};
    std::optional<std::uint64_t> seed;
};

int cmd_simulate(const SimOptions& o) {
    Scene scene;
    {
        auto in = open_in(o.scene);
        scene = scene_from_json(in);
    }
    if (o.seed) scene.seed = *o.seed;
    const auto missing = out_of_window_obstacles(scene);
    if (!missing.empty()) {
        std::string names;
        for (const auto& m : missing) names += (names.empty() ? "" : ", ") + m;
        log(Level::Warn, "obstacles outside the CIR window: " + names);
    }
    const auto caps = synth_scene_stream(scene);
    std::string text;
    if (format_for(o.out, o.format) == CaptureFormat::Csv) {
        text = csv_header(scene.n_samples) + "\n";
        for (const auto& c : caps) text += to_csv_row(c) + "\n";
    } else {
        for (const auto& c : caps) text += to_jsonl(c) + "\n";
    }
    if (fs::path(o.out).has_parent_path()) make_dir(fs::path(o.out).parent_path());
    write_file(o.out, text);
    if (!o.truth.empty()) {
        if (fs::path(o.truth).has_parent_path()) make_dir(fs::path(o.truth).parent_path());
        write_file(o.truth, truth_to_json(scene_ground_truth(scene)) + "\n");
    }
    log(Level::Info, "wrote " + std::to_string(caps.size()) + " captures to " + o.out);
    return kExitOk;
}

struct EvalOptions {
    std::string snapshots;
    std::string peaks;
    std::string truth;
    std::string mode{"step3"};
    bool final_only{false};
    double margin{kMatchMarginCm};
    std::string out_dir{"."};
    std::string label;
};

int cmd_evaluate(const EvalOptions& o) {
    GroundTruth truth;
    {
        auto in = open_in(o.truth);
        std::stringstream ss;
        ss << in.rdbuf();
        truth = truth_from_json(ss.str());
    }
    MatchResult m;
    if (o.mode == "step2") {
        if (o.peaks.empty()) throw Error(ErrorKind::Config, "step2 mode needs --peaks");
        auto in = open_in(o.peaks);
        std::vector<FrameResult> frames;
        try {
            frames = read_frames(in);
        } catch (const Error& e) {
            throw Error(e.kind(), o.peaks + ": " + e.detail(), e.line());
        }
        if (frames.empty()) throw Error(ErrorKind::Empty, "'" + o.peaks + "' holds no frames");
        const auto ranges = frame_ranges(frames);
        m = match_step2(ranges, truth, o.margin);
    } else {
        if (o.snapshots.empty()) throw Error(ErrorKind::Config, "step3 mode needs --snapshots");
        const auto snaps = read_snapshots(o.snapshots);
        if (snaps.empty()) throw Error(ErrorKind::Empty, "'" + o.snapshots + "' holds no snapshots");
        m = match_step3(snaps, truth, o.margin, o.final_only);
    }
    const EvalReport rep = make_report(o.mode, m, o.margin);
    const std::string table = report_table(rep, o.label.empty() ? o.mode : o.label);
    const fs::path dir(o.out_dir);
    make_dir(dir);
    write_file(dir / "report.json", report_to_json(rep) + "\n");
    write_file(dir / "report.txt", table);
    write_file(dir / "cdf.csv", cdf_csv(rep));
    std::cout << table;
    return kExitOk;
}

struct PlotOptions {
    std::string snapshots;
    std::string peaks;
    std::string out{"map.svg"};
    std::string step{"final"};
};

int cmd_plot(const PlotOptions& o) {
    const auto snaps = read_snapshots(o.snapshots);
    std::vector<FrameResult> frames;
    if (!o.peaks.empty()) {
        auto in = open_in(o.peaks);
        frames = read_frames(in);
    } else if (o.step == "all") {
        log(Level::Warn, "--step all without --peaks: panels (a) to (d) will be empty");
    }
    const auto svg = render_svg(frames, snaps, o.step == "all" ? PlotStep::All : PlotStep::Final);
    if (fs::path(o.out).has_parent_path()) make_dir(fs::path(o.out).parent_path());
    write_file(o.out, svg);
    return kExitOk;
}

int exit_code_for(ErrorKind k) {
    switch (k) {
        case ErrorKind::Io: return kExitIo;
        case ErrorKind::Config: return kExitConfig;
        default: return kExitData;
    }
}

}  // namespace

int run(const std::vector<std::string>& args) {
    CLI::App app{"UWB radar obstacle mapper"};
    app.name("uwb_mapper");
    app.require_subcommand(1);

    RunOptions ro;
    int channel = 0;
    auto* run_cmd = app.add_subcommand("run", "Process captures into obstacle map snapshots");
    run_cmd->add_option("input", ro.input, "Capture file (JSONL or CSV)")->required();
    run_cmd->add_option("--format", ro.format, "Input format")->check(CLI::IsMember({"auto", "jsonl", "csv"}));
    run_cmd->add_option("--out-dir,-o", ro.out_dir, "Output directory");
    run_cmd->add_option("--params", ro.params, "Parameter file (repeatable, applied in order)");
    auto* ch_opt = run_cmd->add_option("--channel", channel, "Only process this channel")->check(CLI::IsMember({5, 9}));
    run_cmd->add_option("--material", ro.material, "Filter threshold preset")
        ->check(CLI::IsMember({"metal", "concrete", "plywood", "overall"}));
    run_cmd->add_flag("--all-survivors", ro.all_survivors, "Emit every filtered peak, not only the strongest");
    run_cmd->add_flag("--no-subsample-refine", ro.no_refine, "Use integer peak positions");
    run_cmd->add_option("--baseline-in-delay", ro.baseline_in_delay, "Add the TX-RX baseline to the path length")
        ->check(CLI::IsMember({"true", "false"}));
    run_cmd->add_option("--threads", ro.threads, "Frame worker threads")->check(CLI::Range(1U, 256U));
    run_cmd->add_option("--poses", ro.poses, "CSV pose log (t_ms,x,y,yaw) joined by nearest timestamp");
    std::uint64_t run_seed = 0;
    run_cmd->add_option("--seed", run_seed, "Accepted for symmetry; processing is deterministic");

    SimOptions so;
    std::uint64_t seed = 0;
    auto* sim_cmd = app.add_subcommand("simulate", "Generate synthetic captures from a scene file");
    sim_cmd->add_option("scene", so.scene, "Scene JSON")->required();
    sim_cmd->add_option("--out,-o", so.out, "Capture output file")->required();
    sim_cmd->add_option("--truth", so.truth, "Ground-truth output file");
    sim_cmd->add_option("--format", so.format, "Output format")->check(CLI::IsMember({"auto", "jsonl", "csv"}));
    auto* seed_opt = sim_cmd->add_option("--seed", seed, "Override the scene seed");

    EvalOptions eo;
    auto* eval_cmd = app.add_subcommand("evaluate", "Score snapshots or per-frame peaks against ground truth");
    eval_cmd->add_option("--snapshots", eo.snapshots, "Snapshot JSONL from run");
    eval_cmd->add_option("--peaks", eo.peaks, "Peaks JSONL from run (step2)");
    eval_cmd->add_option("--truth", eo.truth, "Ground-truth JSON")->required();
    eval_cmd->add_option("--mode", eo.mode, "Evaluation mode")->check(CLI::IsMember({"step2", "step3"}));
    eval_cmd->add_flag("--final-only", eo.final_only, "Evaluate only the last snapshot");
    eval_cmd->add_option("--margin", eo.margin, "Match margin in cm")->check(CLI::PositiveNumber);
    eval_cmd->add_option("--out-dir,-o", eo.out_dir, "Report directory");
    eval_cmd->add_option("--label", eo.label, "Row label in the table");

    PlotOptions po;
    auto* plot_cmd = app.add_subcommand("plot", "Render snapshots as SVG");
    plot_cmd->add_option("--snapshots", po.snapshots, "Snapshot JSONL from run")->required();
    plot_cmd->add_option("--peaks", po.peaks, "Peaks JSONL from run");
    plot_cmd->add_option("--out,-o", po.out, "SVG output file");
    plot_cmd->add_option("--step", po.step, "all = five pipeline panels, final = map only")
        ->check(CLI::IsMember({"all", "final"}));

    std::vector<std::string> rev(args.rbegin(), args.rend());
    try {
        app.parse(rev);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e, std::cout, std::cerr);
        return rc == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (*run_cmd) {
            if (*ch_opt) ro.channel = channel;
            return cmd_run(ro);
        }
        if (*sim_cmd) {
            if (*seed_opt) so.seed = seed;
            return cmd_simulate(so);
        }
        if (*eval_cmd) return cmd_evaluate(eo);
        if (*plot_cmd) return cmd_plot(po);
    } catch (const Error& e) {
        log(Level::Error, e.what());
        return exit_code_for(e.kind());
    } catch (const std::exception& e) {
        log(Level::Error, e.what());
        return kExitData;
    }
    return kExitUsage;
}

}  // namespace uwbmap::cli
