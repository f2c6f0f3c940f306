#pragma once

#include "uwbmap/capture.hpp"
#include "uwbmap/cir.hpp"
#include "uwbmap/peaks.hpp"

#include <optional>
#include <span>
#include <string>
#include <vector>

namespace uwbmap {

// PDoA magnitude that maps to a 45 degree angle of arrival.
inline constexpr double kPdoaGateRad = 2.1325;
inline constexpr double kSnrDelayWeight = 0.20;

struct FilterParams {
    double width_min{0.20};       // samples
    double prominence_min{0.03};  // normalized units
    double snr_min{10.0};         // dB-like score
    double k{kSnrDelayWeight};    // score per sample of delay
    double pdoa_gate{kPdoaGateRad};
    bool drop_truncated{false};

    void validate() const;
};

enum class Material { Metal, Concrete, Plywood, Overall };

Material material_from_string(const std::string& name);  // throws Error{Config}
std::string to_string(Material m);

// Tuned width / prominence / SNR-score thresholds per channel and material.
FilterParams threshold_preset(Channel channel, Material material);

struct ScoredPeak {
    RawPeak raw;
    double snr_score{0.0};
    int delay_samples{0};
    double pdoa{0.0};
};

// 20 log10(A / A_noise) + k * delay. A zero noise floor scores +inf, a zero
// amplitude -inf.
double snr_score(double amplitude_raw, double noise_rms, int delay_samples, double k);

// Phase difference between antennas A and B wrapped into [-pi, pi).
double pdoa(double phase_a, double phase_b);

// Scores every peak that lies strictly after the first path. Phase arrays are
// full-length (untrimmed); peak indices are trimmed by n_noise.
std::vector<ScoredPeak> score_peaks(std::span<const RawPeak> peaks, const MagnitudeCir& mag,
                                    const PhaseCir& sts1, const PhaseCir& sts2, double k,
                                    std::size_t n_noise = kDefaultNoiseSamples);

bool passes_property_filters(const ScoredPeak& p, const FilterParams& params);
bool passes_pdoa_gate(const ScoredPeak& p, const FilterParams& params);

std::vector<ScoredPeak> apply_filters(std::span<const ScoredPeak> peaks, const FilterParams& params);

// Highest raw amplitude wins; ties go to the smaller index.
std::optional<ScoredPeak> select_target_peak(std::span<const ScoredPeak> filtered);

}  // namespace uwbmap
