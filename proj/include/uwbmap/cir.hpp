#pragma once

#include "uwbmap/capture.hpp"

#include <span>
#include <vector>

namespace uwbmap {

struct MagnitudeCir {
    std::vector<double> samples;  // raw magnitudes after the noise-floor window
    double noise_rms{0.0};
    // First-path index in trimmed coordinates. Negative when the record places
    // the first path inside the noise-floor window.
    int first_path_index{0};
};

struct PhaseCir {
    std::vector<double> samples;     // rad, (-pi, pi]
    std::vector<bool> low_quality;   // true where the sample was exactly (0, 0)
};

struct NormalizedCir {
    std::vector<double> samples;  // [0, 1]
    double scale_min{0.0};
    double scale_max{0.0};
    bool degenerate{false};  // max == min, every sample mapped to 0
};

std::vector<double> magnitude(std::span<const ComplexSample> cir);

PhaseCir phase(std::span<const ComplexSample> cir);

// Splits the first n_noise magnitudes off as the noise floor. Throws
// Error{Length} when nothing would remain.
MagnitudeCir split_noise_floor(std::span<const double> mag, int first_path_index = 0,
                               std::size_t n_noise = kDefaultNoiseSamples);

NormalizedCir minmax_normalize(std::span<const double> samples);
inline NormalizedCir minmax_normalize(const MagnitudeCir& mag) { return minmax_normalize(mag.samples); }

}  // namespace uwbmap
