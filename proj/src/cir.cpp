#include "uwbmap/cir.hpp"

#include "uwbmap/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace uwbmap {

std::vector<double> magnitude(std::span<const ComplexSample> cir) {
    std::vector<double> out(cir.size());
    std::transform(cir.begin(), cir.end(), out.begin(),
                   [](const ComplexSample& s) { return std::sqrt(s.i * s.i + s.q * s.q); });
    return out;
}

PhaseCir phase(std::span<const ComplexSample> cir) {
    PhaseCir out;
    out.samples.reserve(cir.size());
    out.low_quality.reserve(cir.size());
    for (const auto& s : cir) {
        const bool zero = s.i == 0.0 && s.q == 0.0;
        // atan2 returns -pi for (-1, -0.0); fold it onto the closed end.
        double phi = zero ? 0.0 : std::atan2(s.q, s.i);
        if (phi == -std::numbers::pi) phi = std::numbers::pi;
        out.samples.push_back(phi);
        out.low_quality.push_back(zero);
    }
    return out;
}

MagnitudeCir split_noise_floor(std::span<const double> mag, int first_path_index, std::size_t n_noise) {
    if (mag.size() <= n_noise) {
        throw Error(ErrorKind::Length, "CIR of length " + std::to_string(mag.size()) +
                                           " has no samples beyond the " + std::to_string(n_noise) +
                                           "-sample noise floor");
    }
    MagnitudeCir out;
    double sum_sq = 0.0;
    for (std::size_t k = 0; k < n_noise; ++k) sum_sq += mag[k] * mag[k];
    out.noise_rms = n_noise > 0 ? std::sqrt(sum_sq / static_cast<double>(n_noise)) : 0.0;
    out.samples.assign(mag.begin() + static_cast<std::ptrdiff_t>(n_noise), mag.end());
    out.first_path_index = first_path_index - static_cast<int>(n_noise);
    return out;
}

NormalizedCir minmax_normalize(std::span<const double> samples) {
    NormalizedCir out;
    if (samples.empty()) return out;
    const auto [lo, hi] = std::minmax_element(samples.begin(), samples.end());
    out.scale_min = *lo;
    out.scale_max = *hi;
    out.samples.resize(samples.size(), 0.0);
    if (!(out.scale_max > out.scale_min)) {
        out.degenerate = true;
        return out;
    }
    const double span = out.scale_max - out.scale_min;
    for (std::size_t k = 0; k < samples.size(); ++k) {
        out.samples[k] = (samples[k] - out.scale_min) / span;
    }
    // Pin the extremes so rounding never leaves max at 0.9999999999999999.
    out.samples[static_cast<std::size_t>(hi - samples.begin())] = 1.0;
    out.samples[static_cast<std::size_t>(lo - samples.begin())] = 0.0;
    return out;
}

}  // namespace uwbmap
