#pragma once

#include "uwbmap/cir.hpp"

#include <cstddef>
#include <span>
#include <vector>

namespace uwbmap {

// A local maximum of the normalized preamble CIR, in trimmed-array
// coordinates (sample 0 is the first sample after the noise floor).
struct RawPeak {
    std::size_t index{0};
    double refined_index{0.0};
    double amplitude_norm{0.0};
    double amplitude_raw{0.0};
    double prominence{0.0};
    double width{0.0};  // samples, 1 sample = 1 ns
    double left_ip{0.0};
    double right_ip{0.0};
    bool truncated{false};
};

// Strict rise on the left, non-strict fall on the right. A flat top counts
// only if it is followed by a strict descent; it reports its left midpoint.
// Endpoints are never peaks.
std::vector<std::size_t> find_local_maxima(std::span<const double> samples);

struct ProminenceResult {
    double prominence{0.0};
    std::size_t left_base{0};
    std::size_t right_base{0};
};

// Walk outwards on each side until a strictly higher sample or the array end,
// take the minimum on each side; the higher of the two minima is the base.
ProminenceResult peak_prominence(std::span<const double> samples, std::size_t peak);
double prominence(std::span<const double> samples, std::size_t peak);

struct WidthResult {
    double width{0.0};
    double left_ip{0.0};
    double right_ip{0.0};
    // A flank crossing was bracketed by an array endpoint.
    bool truncated{false};
};

// Horizontal extent at (peak - prominence / 2) with linearly interpolated
// crossings.
WidthResult peak_width(std::span<const double> samples, std::size_t peak, double prominence);
double width_at_half_prominence(std::span<const double> samples, std::size_t peak, double prominence);

// Vertex of the parabola through (k-1, k, k+1), limited to +/-0.5 sample.
double refine_peak_position(std::span<const double> samples, std::size_t peak);

struct PeakDetectionOptions {
    bool subsample_refine{true};
};

std::vector<RawPeak> detect_peaks(const NormalizedCir& normalized, const MagnitudeCir& raw,
                                  const PeakDetectionOptions& options = {});

}  // namespace uwbmap
