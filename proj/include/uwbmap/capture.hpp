#pragma once

// Capture records: one radar frame of three complex CIRs plus the robot pose
// at the time of capture, and the JSONL / CSV readers and writers for them.

#include <cstddef>
#include <cstdint>
#include <istream>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace uwbmap {

inline constexpr double kSpeedOfLightCmPerNs = 29.9792458;
inline constexpr double kSampleIntervalNs = 1.0;
inline constexpr std::size_t kDefaultCirLength = 50;
inline constexpr std::size_t kDefaultNoiseSamples = 4;
inline constexpr std::size_t kMinCirLength = 8;
inline constexpr double kFrameIntervalMs = 1000.0 / 96.0;

struct ComplexSample {
    double i{0.0};
    double q{0.0};

    friend bool operator==(const ComplexSample&, const ComplexSample&) = default;
};

enum class Channel { Ch5, Ch9 };

int channel_number(Channel ch);
Channel channel_from_number(int number);  // throws Error{Range}

struct Pose {
    double x{0.0};    // cm
    double y{0.0};    // cm
    double yaw{0.0};  // rad, (-pi, pi]

    friend bool operator==(const Pose&, const Pose&) = default;
};

// Wraps an angle into (-pi, pi].
double normalize_angle(double rad);

struct RadioConfig {
    double center_frequency_hz{7.9872e9};
    double bandwidth_hz{499.2e6};
    double update_rate_hz{96.0};
    double sample_interval_ns{kSampleIntervalNs};

    void validate() const;
};

struct CirCapture {
    std::int64_t timestamp_ms{0};
    Channel channel{Channel::Ch9};
    std::string receiver_id;
    std::vector<ComplexSample> preamble_cir;
    std::vector<ComplexSample> sts1_cir;
    std::vector<ComplexSample> sts2_cir;
    // Index into the full (untrimmed) CIR arrays.
    int first_path_index{0};
    Pose pose;

    std::size_t length() const noexcept { return preamble_cir.size(); }

    friend bool operator==(const CirCapture&, const CirCapture&) = default;
};

// Throws Error{Length|Range|Format} when an invariant does not hold.
void validate(const CirCapture& capture);

// First sample past the noise floor whose magnitude exceeds 6x the floor RMS.
// Used when a record carries no first-path index. Throws Error{Range} if no
// sample qualifies.
int estimate_first_path_index(std::span<const ComplexSample> preamble,
                              std::size_t n_noise = kDefaultNoiseSamples);

double fractional_bandwidth(double f_high_hz, double f_low_hz);

enum class CaptureFormat { Jsonl, Csv };

// Streaming reader. Blank lines are skipped; every error carries the 1-based
// line number of the offending record.
class CaptureReader {
public:
    CaptureReader(std::istream& in, CaptureFormat format);

    std::optional<CirCapture> next();

private:
    std::optional<CirCapture> next_jsonl();
    std::optional<CirCapture> next_csv();
    void check_order(const CirCapture& c);

    std::istream& in_;
    CaptureFormat format_;
    std::size_t line_{0};
    std::vector<std::string> csv_header_;
    std::optional<std::int64_t> last_timestamp_;
};

std::vector<CirCapture> parse_capture_stream(std::istream& in, CaptureFormat format);
CirCapture parse_capture_jsonl(const std::string& line, std::size_t line_no = 0);

std::string to_jsonl(const CirCapture& capture);
std::string csv_header(std::size_t cir_length);
std::string to_csv_row(const CirCapture& capture);

}  // namespace uwbmap
