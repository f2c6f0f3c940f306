#include "uwbmap/capture.hpp"

#include "uwbmap/errors.hpp"
#include "uwbmap/numfmt.hpp"

#include <json.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <numbers>
#include <sstream>
#include <unordered_map>

namespace uwbmap {

namespace {

using ordered_json = nlohmann::ordered_json;

std::string record_name(const CirCapture& c) {
    return "record t_ms=" + std::to_string(c.timestamp_ms) + " rx=" + c.receiver_id;
}

bool finite_samples(std::span<const ComplexSample> cir) {
    return std::all_of(cir.begin(), cir.end(), [](const ComplexSample& s) {
        return std::isfinite(s.i) && std::isfinite(s.q);
    });
}

std::vector<ComplexSample> read_cir(const nlohmann::json& arr, const char* name, std::size_t line) {
    if (!arr.is_array()) {
        throw Error(ErrorKind::Format, std::string("field '") + name + "' is not an array", line);
    }
    std::vector<ComplexSample> out;
    out.reserve(arr.size());
    for (const auto& pair : arr) {
        if (!pair.is_array() || pair.size() != 2 || !pair[0].is_number() || !pair[1].is_number()) {
            throw Error(ErrorKind::Format,
                        std::string("field '") + name + "' must hold [i,q] numeric pairs", line);
        }
        out.push_back({pair[0].get<double>(), pair[1].get<double>()});
    }
    return out;
}

template <typename T>
T require(const nlohmann::json& obj, const char* key, std::size_t line) {
    auto it = obj.find(key);
    if (it == obj.end()) {
        throw Error(ErrorKind::Format, std::string("missing field '") + key + "'", line);
    }
    try {
        return it->get<T>();
    } catch (const nlohmann::json::exception&) {
        throw Error(ErrorKind::Format, std::string("field '") + key + "' has the wrong type", line);
    }
}

void finish_record(CirCapture& c, bool has_fp, std::size_t line) {
    c.pose.yaw = normalize_angle(c.pose.yaw);
    if (!has_fp) {
        try {
            c.first_path_index = estimate_first_path_index(c.preamble_cir);
        } catch (const Error& e) {
            throw Error(e.kind(), record_name(c) + ": cannot estimate first path", line);
        }
    }
    try {
        validate(c);
    } catch (const Error& e) {
        throw Error(e.kind(), e.detail(), line);
    }
}

std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> out;
    std::string field;
    std::istringstream ss(line);
    while (std::getline(ss, field, ',')) {
        if (!field.empty() && field.back() == '\r') {
            field.pop_back();
        }
        out.push_back(field);
    }
    if (!line.empty() && line.back() == ',') {
        out.emplace_back();
    }
    return out;
}

double parse_number(const std::string& text, const std::string& column, std::size_t line) {
    double value = 0.0;
    const char* first = text.data();
    const char* last = text.data() + text.size();
    auto [ptr, ec] = std::from_chars(first, last, value);
    if (ec != std::errc() || ptr != last || text.empty()) {
        throw Error(ErrorKind::Format, "column '" + column + "' is not numeric: '" + text + "'", line);
    }
    return value;
}

std::int64_t parse_integer(const std::string& text, const std::string& column, std::size_t line) {
    std::int64_t value = 0;
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec != std::errc() || ptr != text.data() + text.size() || text.empty()) {
        throw Error(ErrorKind::Format, "column '" + column + "' is not an integer: '" + text + "'", line);
    }
    return value;
}

bool is_blank(const std::string& s) {
    return std::all_of(s.begin(), s.end(), [](unsigned char ch) { return std::isspace(ch) != 0; });
}

}  // namespace

int channel_number(Channel ch) { return ch == Channel::Ch5 ? 5 : 9; }

Channel channel_from_number(int number) {
    if (number == 5) return Channel::Ch5;
    if (number == 9) return Channel::Ch9;
    throw Error(ErrorKind::Range, "channel must be 5 or 9, got " + std::to_string(number));
}

double normalize_angle(double rad) {
    constexpr double two_pi = 2.0 * std::numbers::pi;
    double r = std::fmod(rad, two_pi);
    if (r <= -std::numbers::pi) {
        r += two_pi;
    } else if (r > std::numbers::pi) {
        r -= two_pi;
    }
    return r;
}

void RadioConfig::validate() const {
    if (!(bandwidth_hz >= 499e6)) {
        throw Error(ErrorKind::Config, "bandwidth must be at least 499 MHz");
    }
    if (!(sample_interval_ns > 0.0)) {
        throw Error(ErrorKind::Config, "sample interval must be positive");
    }
}

void validate(const CirCapture& c) {
    const std::size_t n = c.preamble_cir.size();
    if (c.sts1_cir.size() != n || c.sts2_cir.size() != n) {
        throw Error(ErrorKind::Length, record_name(c) + ": CIR arrays have unequal lengths (pre=" +
                                           std::to_string(n) + ", sts1=" + std::to_string(c.sts1_cir.size()) +
                                           ", sts2=" + std::to_string(c.sts2_cir.size()) + ")");
    }
    if (n < kMinCirLength) {
        throw Error(ErrorKind::Length, record_name(c) + ": CIR length " + std::to_string(n) + " below " +
                                           std::to_string(kMinCirLength));
    }
    if (c.first_path_index < 0 || static_cast<std::size_t>(c.first_path_index) >= n - 4) {
        throw Error(ErrorKind::Range, record_name(c) + ": first_path_index " +
                                          std::to_string(c.first_path_index) + " outside [0, " +
                                          std::to_string(n - 4) + ")");
    }
    if (!finite_samples(c.preamble_cir) || !finite_samples(c.sts1_cir) || !finite_samples(c.sts2_cir)) {
        throw Error(ErrorKind::Format, record_name(c) + ": non-finite I/Q sample");
    }
    if (!std::isfinite(c.pose.x) || !std::isfinite(c.pose.y) || !std::isfinite(c.pose.yaw)) {
        throw Error(ErrorKind::Format, record_name(c) + ": non-finite pose");
    }
}

int estimate_first_path_index(std::span<const ComplexSample> preamble, std::size_t n_noise) {
    if (preamble.size() <= n_noise) {
        throw Error(ErrorKind::Length, "CIR shorter than the noise floor window");
    }
    double sum_sq = 0.0;
    for (std::size_t k = 0; k < n_noise; ++k) {
        sum_sq += preamble[k].i * preamble[k].i + preamble[k].q * preamble[k].q;
    }
    const double rms = n_noise > 0 ? std::sqrt(sum_sq / static_cast<double>(n_noise)) : 0.0;
    const double threshold = 6.0 * rms;
    for (std::size_t k = n_noise; k < preamble.size(); ++k) {
        if (std::hypot(preamble[k].i, preamble[k].q) > threshold) {
            return static_cast<int>(k);
        }
    }
    throw Error(ErrorKind::Range, "no sample exceeds 6x the noise floor RMS");
}

double fractional_bandwidth(double f_high_hz, double f_low_hz) {
    if (!(f_low_hz > 0.0) || !(f_high_hz > f_low_hz)) {
        throw Error(ErrorKind::Domain, "fractional bandwidth needs f_high > f_low > 0");
    }
    return (f_high_hz - f_low_hz) / ((f_high_hz + f_low_hz) / 2.0);
}

CirCapture parse_capture_jsonl(const std::string& text, std::size_t line) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw Error(ErrorKind::Format, std::string("invalid JSON: ") + e.what(), line);
    }
    if (!j.is_object()) {
        throw Error(ErrorKind::Format, "capture must be a JSON object", line);
    }
    CirCapture c;
    c.timestamp_ms = require<std::int64_t>(j, "t_ms", line);
    try {
        c.channel = channel_from_number(require<int>(j, "ch", line));
    } catch (const Error& e) {
        throw Error(ErrorKind::Format, e.detail(), line);
    }
    c.receiver_id = require<std::string>(j, "rx", line);
    bool has_fp = false;
    if (auto it = j.find("fp_idx"); it != j.end() && !it->is_null()) {
        if (!it->is_number_integer()) {
            throw Error(ErrorKind::Format, "field 'fp_idx' must be an integer", line);
        }
        c.first_path_index = it->get<int>();
        has_fp = true;
    }
    auto pose = j.find("pose");
    if (pose == j.end() || !pose->is_object()) {
        throw Error(ErrorKind::Format, "missing object field 'pose'", line);
    }
    c.pose.x = require<double>(*pose, "x", line);
    c.pose.y = require<double>(*pose, "y", line);
    c.pose.yaw = require<double>(*pose, "yaw", line);
    for (const char* key : {"pre", "sts1", "sts2"}) {
        if (!j.contains(key)) {
            throw Error(ErrorKind::Format, std::string("missing field '") + key + "'", line);
        }
    }
    c.preamble_cir = read_cir(j["pre"], "pre", line);
    c.sts1_cir = read_cir(j["sts1"], "sts1", line);
    c.sts2_cir = read_cir(j["sts2"], "sts2", line);
    finish_record(c, has_fp, line);
    return c;
}

CaptureReader::CaptureReader(std::istream& in, CaptureFormat format) : in_(in), format_(format) {}

std::optional<CirCapture> CaptureReader::next() {
    auto c = format_ == CaptureFormat::Jsonl ? next_jsonl() : next_csv();
    if (c) {
        check_order(*c);
    }
    return c;
}

void CaptureReader::check_order(const CirCapture& c) {
    if (last_timestamp_ && c.timestamp_ms < *last_timestamp_) {
        throw Error(ErrorKind::Order,
                    "timestamp " + std::to_string(c.timestamp_ms) + " precedes " + std::to_string(*last_timestamp_),
                    line_);
    }
    last_timestamp_ = c.timestamp_ms;
}

std::optional<CirCapture> CaptureReader::next_jsonl() {
    std::string text;
    while (std::getline(in_, text)) {
        ++line_;
        if (is_blank(text)) continue;
        return parse_capture_jsonl(text, line_);
    }
    return std::nullopt;
}

std::optional<CirCapture> CaptureReader::next_csv() {
    std::string text;
    while (std::getline(in_, text)) {
        ++line_;
        if (is_blank(text)) continue;
        if (csv_header_.empty()) {
            csv_header_ = split_csv(text);
            continue;
        }
        const auto fields = split_csv(text);
        if (fields.size() != csv_header_.size()) {
            throw Error(ErrorKind::Format,
                        "expected " + std::to_string(csv_header_.size()) + " fields, got " +
                            std::to_string(fields.size()),
                        line_);
        }
        std::unordered_map<std::string, std::size_t> col;
        for (std::size_t k = 0; k < csv_header_.size(); ++k) col[csv_header_[k]] = k;
        auto field = [&](const std::string& name) -> const std::string& {
            auto it = col.find(name);
            if (it == col.end()) {
                throw Error(ErrorKind::Format, "missing column '" + name + "'", line_);
            }
            return fields[it->second];
        };

        CirCapture c;
        c.timestamp_ms = parse_integer(field("t_ms"), "t_ms", line_);
        try {
            c.channel = channel_from_number(static_cast<int>(parse_integer(field("ch"), "ch", line_)));
        } catch (const Error& e) {
            throw Error(ErrorKind::Format, e.detail(), line_);
        }
        c.receiver_id = field("rx");
        const std::string& fp = field("fp_idx");
        const bool has_fp = !fp.empty();
        if (has_fp) c.first_path_index = static_cast<int>(parse_integer(fp, "fp_idx", line_));
        c.pose.x = parse_number(field("pose_x"), "pose_x", line_);
        c.pose.y = parse_number(field("pose_y"), "pose_y", line_);
        c.pose.yaw = parse_number(field("pose_yaw"), "pose_yaw", line_);

        auto read_block = [&](const std::string& prefix) {
            std::vector<ComplexSample> cir;
            for (std::size_t k = 0;; ++k) {
                const std::string i_name = prefix + "_i" + std::to_string(k);
                const std::string q_name = prefix + "_q" + std::to_string(k);
                auto i_it = col.find(i_name);
                auto q_it = col.find(q_name);
                if (i_it == col.end() && q_it == col.end()) break;
                if (i_it == col.end() || q_it == col.end()) {
                    throw Error(ErrorKind::Format, "unpaired I/Q column for " + prefix + " sample " + std::to_string(k),
                                line_);
                }
                // Trailing empty cells mark a shorter CIR in a wider file.
                if (fields[i_it->second].empty() && fields[q_it->second].empty()) break;
                cir.push_back({parse_number(fields[i_it->second], i_name, line_),
                               parse_number(fields[q_it->second], q_name, line_)});
            }
            return cir;
        };
        c.preamble_cir = read_block("pre");
        c.sts1_cir = read_block("sts1");
        c.sts2_cir = read_block("sts2");
        finish_record(c, has_fp, line_);
        return c;
    }
    return std::nullopt;
}

std::vector<CirCapture> parse_capture_stream(std::istream& in, CaptureFormat format) {
    CaptureReader reader(in, format);
    std::vector<CirCapture> out;
    while (auto c = reader.next()) {
        out.push_back(std::move(*c));
    }
    return out;
}

std::string to_jsonl(const CirCapture& c) {
    auto cir_json = [](const std::vector<ComplexSample>& cir) {
        ordered_json arr = ordered_json::array();
        for (const auto& s : cir) arr.push_back({s.i, s.q});
        return arr;
    };
    ordered_json j;
    j["t_ms"] = c.timestamp_ms;
    j["ch"] = channel_number(c.channel);
    j["rx"] = c.receiver_id;
    j["fp_idx"] = c.first_path_index;
    j["pose"] = {{"x", c.pose.x}, {"y", c.pose.y}, {"yaw", c.pose.yaw}};
    j["pre"] = cir_json(c.preamble_cir);
    j["sts1"] = cir_json(c.sts1_cir);
    j["sts2"] = cir_json(c.sts2_cir);
    return j.dump();
}

std::string csv_header(std::size_t n) {
    std::string out = "t_ms,ch,rx,fp_idx,pose_x,pose_y,pose_yaw";
    for (const char* prefix : {"pre", "sts1", "sts2"}) {
        for (std::size_t k = 0; k < n; ++k) {
            out += ',';
            out += prefix;
            out += "_i" + std::to_string(k) + ',' + prefix + "_q" + std::to_string(k);
        }
    }
    return out;
}

std::string to_csv_row(const CirCapture& c) {
    std::string out = std::to_string(c.timestamp_ms) + ',' + std::to_string(channel_number(c.channel)) + ',' +
                      c.receiver_id + ',' + std::to_string(c.first_path_index) + ',' + format_double(c.pose.x) +
                      ',' + format_double(c.pose.y) + ',' + format_double(c.pose.yaw);
    for (const auto* cir : {&c.preamble_cir, &c.sts1_cir, &c.sts2_cir}) {
        for (const auto& s : *cir) {
            out += ',';
            out += format_double(s.i);
            out += ',';
            out += format_double(s.q);
        }
    }
    return out;
}

}  // namespace uwbmap
