#include "uwbmap/params.hpp"

#include "uwbmap/errors.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <functional>
#include <vector>

namespace uwbmap {

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

double parse_number(const std::string& text) {
    double v = 0.0;
    const char* first = text.data();
    const char* last = text.data() + text.size();
    auto [ptr, ec] = std::from_chars(first, last, v);
    if (ec != std::errc() || ptr != last || !std::isfinite(v)) {
        throw Error(ErrorKind::Config, "'" + text + "' is not a number");
    }
    return v;
}

std::size_t parse_count(const std::string& text) {
    const double v = parse_number(text);
    if (v < 0.0 || v != std::floor(v)) throw Error(ErrorKind::Config, "'" + text + "' is not a non-negative integer");
    return static_cast<std::size_t>(v);
}

// Splits "name.ch5" into ("name", Ch5); names without a channel suffix apply
// to both channels.
std::vector<FilterParams*> filters_for(const std::string& key, std::string& base, PipelineConfig& cfg) {
    auto dot = key.rfind('.');
    if (dot != std::string::npos) {
        const std::string suffix = key.substr(dot + 1);
        if (suffix == "ch5" || suffix == "ch9") {
            base = key.substr(0, dot);
            return {suffix == "ch5" ? &cfg.filter_ch5 : &cfg.filter_ch9};
        }
    }
    base = key;
    return {&cfg.filter_ch5, &cfg.filter_ch9};
}

void apply_one(const std::string& key, const std::string& value, PipelineConfig& cfg) {
    if (key.rfind("mount.", 0) == 0) {
        const auto dot = key.rfind('.');
        if (dot <= 6) throw Error(ErrorKind::Config, "mount key needs mount.<rx>.<x|y|yaw>");
        const std::string rx = key.substr(6, dot - 6);
        const std::string field = key.substr(dot + 1);
        Pose& m = cfg.geometry.mounts[rx];
        if (field == "x") {
            m.x = parse_number(value);
        } else if (field == "y") {
            m.y = parse_number(value);
        } else if (field == "yaw") {
            m.yaw = normalize_angle(parse_number(value));
        } else {
            throw Error(ErrorKind::Config, "unknown mount field '" + field + "'");
        }
        return;
    }

    if (key == "bias.ch5") { cfg.geometry.bias_ch5.range_cm = parse_number(value); return; }
    if (key == "bias.ch9") { cfg.geometry.bias_ch9.range_cm = parse_number(value); return; }
    if (key == "bias_aoa.ch5") { cfg.geometry.bias_ch5.aoa_rad = parse_number(value); return; }
    if (key == "bias_aoa.ch9") { cfg.geometry.bias_ch9.aoa_rad = parse_number(value); return; }
    if (key == "d_tx_rx") { cfg.geometry.d_tx_rx = parse_number(value); return; }
    if (key == "aoa_coeff") { cfg.geometry.aoa_coeff = parse_number(value); return; }
    if (key == "baseline_in_delay") { cfg.geometry.baseline_in_delay = parse_bool(value); return; }
    if (key == "eps") { cfg.cluster.eps = parse_number(value); return; }
    if (key == "min_samples") { cfg.cluster.min_samples = parse_count(value); return; }
    if (key == "min_peaks") { cfg.cluster.min_peaks = parse_count(value); return; }
    if (key == "n_noise") { cfg.n_noise = parse_count(value); return; }

    std::string base;
    auto targets = filters_for(key, base, cfg);
    std::function<void(FilterParams&)> set;
    if (base == "width") {
        const double v = parse_number(value);
        set = [v](FilterParams& f) { f.width_min = v; };
    } else if (base == "prominence") {
        const double v = parse_number(value);
        set = [v](FilterParams& f) { f.prominence_min = v; };
    } else if (base == "snr") {
        const double v = parse_number(value);
        set = [v](FilterParams& f) { f.snr_min = v; };
    } else if (base == "k") {
        const double v = parse_number(value);
        set = [v](FilterParams& f) { f.k = v; };
    } else if (base == "pdoa_gate") {
        const double v = parse_number(value);
        set = [v](FilterParams& f) { f.pdoa_gate = v; };
    } else if (base == "drop_truncated") {
        const bool v = parse_bool(value);
        set = [v](FilterParams& f) { f.drop_truncated = v; };
    } else {
        throw Error(ErrorKind::Config, "unknown key '" + key + "'");
    }
    for (auto* f : targets) set(*f);
}

}  // namespace

bool parse_bool(const std::string& raw) {
    std::string text = raw;
    std::transform(text.begin(), text.end(), text.begin(), [](unsigned char c) { return std::tolower(c); });
    if (text == "true" || text == "1" || text == "yes" || text == "on") return true;
    if (text == "false" || text == "0" || text == "no" || text == "off") return false;
    throw Error(ErrorKind::Config, "'" + raw + "' is not a boolean");
}

void apply_params(std::istream& in, PipelineConfig& config, const std::string& source) {
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw Error(ErrorKind::Config, source + ": expected key = value", line_no);
        }
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        try {
            apply_one(key, value, config);
        } catch (const Error& e) {
            throw Error(ErrorKind::Config, source + ": " + key + ": " + e.detail(), line_no);
        }
    }
}

}  // namespace uwbmap
