#include "uwbmap/filtering.hpp"

#include "uwbmap/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace uwbmap {

void FilterParams::validate() const {
    if (width_min < 0.0 || prominence_min < 0.0 || snr_min < 0.0 || k < 0.0 || pdoa_gate < 0.0) {
        throw Error(ErrorKind::Config, "filter thresholds must be non-negative");
    }
    if (pdoa_gate > std::numbers::pi) {
        throw Error(ErrorKind::Config, "pdoa_gate must not exceed pi");
    }
}

Material material_from_string(const std::string& name) {
    if (name == "metal") return Material::Metal;
    if (name == "concrete") return Material::Concrete;
    if (name == "plywood") return Material::Plywood;
    if (name == "overall") return Material::Overall;
    throw Error(ErrorKind::Config, "unknown material '" + name + "'");
}

std::string to_string(Material m) {
    switch (m) {
        case Material::Metal: return "metal";
        case Material::Concrete: return "concrete";
        case Material::Plywood: return "plywood";
        case Material::Overall: return "overall";
    }
    return "overall";
}

FilterParams threshold_preset(Channel channel, Material material) {
    struct Row {
        double width, prominence, snr;
    };
    Row row{};
    if (channel == Channel::Ch5) {
        switch (material) {
            case Material::Metal: row = {1.0, 0.04, 25.0}; break;
            case Material::Concrete: row = {1.0, 0.05, 20.0}; break;
            case Material::Plywood: row = {1.0, 0.02, 15.0}; break;
            case Material::Overall: row = {1.0, 0.05, 20.0}; break;
        }
    } else {
        switch (material) {
            case Material::Metal: row = {1.0, 0.05, 20.0}; break;
            case Material::Concrete: row = {2.0, 0.03, 10.0}; break;
            case Material::Plywood: row = {0.10, 0.01, 10.0}; break;
            case Material::Overall: row = {0.20, 0.03, 10.0}; break;
        }
    }
    FilterParams p;
    p.width_min = row.width;
    p.prominence_min = row.prominence;
    p.snr_min = row.snr;
    return p;
}

double snr_score(double amplitude_raw, double noise_rms, int delay_samples, double k) {
    const double bonus = k * static_cast<double>(delay_samples);
    if (!(amplitude_raw > 0.0)) return -std::numeric_limits<double>::infinity();
    if (!(noise_rms > 0.0)) return std::numeric_limits<double>::infinity();
    return 20.0 * std::log10(amplitude_raw / noise_rms) + bonus;
}

double pdoa(double phase_a, double phase_b) {
    constexpr double two_pi = 2.0 * std::numbers::pi;
    double r = std::fmod(-phase_a + phase_b + std::numbers::pi, two_pi);
    if (r < 0.0) r += two_pi;
    if (r >= two_pi) r -= two_pi;
    double alpha = r - std::numbers::pi;
    // fmod round-off can land a hair outside the half-open interval.
    if (alpha >= std::numbers::pi) alpha = -std::numbers::pi;
    return alpha;
}

std::vector<ScoredPeak> score_peaks(std::span<const RawPeak> peaks, const MagnitudeCir& mag,
                                    const PhaseCir& sts1, const PhaseCir& sts2, double k, std::size_t n_noise) {
    std::vector<ScoredPeak> out;
    for (const auto& p : peaks) {
        const int delay = static_cast<int>(p.index) - mag.first_path_index;
        if (delay < 1) continue;
        const std::size_t full = p.index + n_noise;
        ScoredPeak s;
        s.raw = p;
        s.delay_samples = delay;
        s.snr_score = snr_score(p.amplitude_raw, mag.noise_rms, delay, k);
        s.pdoa = full < sts1.samples.size() && full < sts2.samples.size()
                     ? pdoa(sts1.samples[full], sts2.samples[full])
                     : 0.0;
        out.push_back(s);
    }
    return out;
}

bool passes_property_filters(const ScoredPeak& p, const FilterParams& params) {
    if (params.drop_truncated && p.raw.truncated) return false;
    return p.raw.width >= params.width_min && p.raw.prominence >= params.prominence_min &&
           p.snr_score >= params.snr_min;
}

bool passes_pdoa_gate(const ScoredPeak& p, const FilterParams& params) { return std::abs(p.pdoa) <= params.pdoa_gate; }

std::vector<ScoredPeak> apply_filters(std::span<const ScoredPeak> peaks, const FilterParams& params) {
    std::vector<ScoredPeak> out;
    std::copy_if(peaks.begin(), peaks.end(), std::back_inserter(out), [&](const ScoredPeak& p) {
        return passes_property_filters(p, params) && passes_pdoa_gate(p, params);
    });
    return out;
}

std::optional<ScoredPeak> select_target_peak(std::span<const ScoredPeak> filtered) {
    std::optional<ScoredPeak> best;
    for (const auto& p : filtered) {
        if (!best || p.raw.amplitude_raw > best->raw.amplitude_raw ||
            (p.raw.amplitude_raw == best->raw.amplitude_raw && p.raw.index < best->raw.index)) {
            best = p;
        }
    }
    return best;
}

}  // namespace uwbmap
