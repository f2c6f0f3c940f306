#include "uwbmap/peaks.hpp"

#include "uwbmap/errors.hpp"

#include <algorithm>
#include <cmath>

namespace uwbmap {

std::vector<std::size_t> find_local_maxima(std::span<const double> x) {
    std::vector<std::size_t> peaks;
    const std::size_t n = x.size();
    if (n < 3) return peaks;
    std::size_t i = 1;
    const std::size_t last = n - 1;
    while (i < last) {
        if (x[i - 1] < x[i]) {
            std::size_t ahead = i + 1;
            while (ahead < last && x[ahead] == x[i]) ++ahead;
            if (x[ahead] < x[i]) {
                const std::size_t right_edge = ahead - 1;
                peaks.push_back((i + right_edge) / 2);
                i = ahead;
                continue;
            }
        }
        ++i;
    }
    return peaks;
}

ProminenceResult peak_prominence(std::span<const double> x, std::size_t peak) {
    const double top = x[peak];
    ProminenceResult r;

    double left_min = top;
    r.left_base = peak;
    for (std::size_t i = peak + 1; i-- > 0;) {
        if (x[i] > top) break;
        if (x[i] < left_min) {
            left_min = x[i];
            r.left_base = i;
        }
    }

    double right_min = top;
    r.right_base = peak;
    for (std::size_t i = peak; i < x.size(); ++i) {
        if (x[i] > top) break;
        if (x[i] < right_min) {
            right_min = x[i];
            r.right_base = i;
        }
    }

    r.prominence = top - std::max(left_min, right_min);
    return r;
}

double prominence(std::span<const double> x, std::size_t peak) { return peak_prominence(x, peak).prominence; }

WidthResult peak_width(std::span<const double> x, std::size_t peak, double prom) {
    if (!(prom > 0.0)) {
        throw Error(ErrorKind::Domain, "width needs a positive prominence");
    }
    const double height = x[peak] - prom / 2.0;
    const std::size_t n = x.size();
    WidthResult r;

    std::size_t i = peak;
    while (i > 0 && x[i] > height) --i;
    r.left_ip = static_cast<double>(i);
    if (x[i] < height && i + 1 < n) {
        r.left_ip += (height - x[i]) / (x[i + 1] - x[i]);
    }
    if (i == 0) r.truncated = true;

    std::size_t j = peak;
    while (j + 1 < n && x[j] > height) ++j;
    r.right_ip = static_cast<double>(j);
    if (x[j] < height && j > 0) {
        r.right_ip -= (height - x[j]) / (x[j - 1] - x[j]);
    }
    if (j + 1 == n) r.truncated = true;

    r.width = r.right_ip - r.left_ip;
    return r;
}

double width_at_half_prominence(std::span<const double> x, std::size_t peak, double prom) {
    return peak_width(x, peak, prom).width;
}

double refine_peak_position(std::span<const double> x, std::size_t peak) {
    const double k = static_cast<double>(peak);
    if (peak == 0 || peak + 1 >= x.size()) return k;
    const double ym = x[peak - 1];
    const double y0 = x[peak];
    const double yp = x[peak + 1];
    const double denom = ym - 2.0 * y0 + yp;
    if (!(denom < 0.0)) return k;  // flat or not concave
    const double delta = std::clamp(0.5 * (ym - yp) / denom, -0.5, 0.5);
    return k + delta;
}

std::vector<RawPeak> detect_peaks(const NormalizedCir& normalized, const MagnitudeCir& raw,
                                  const PeakDetectionOptions& options) {
    std::vector<RawPeak> out;
    std::span<const double> x = normalized.samples;
    for (std::size_t idx : find_local_maxima(x)) {
        RawPeak p;
        p.index = idx;
        p.amplitude_norm = x[idx];
        p.amplitude_raw = idx < raw.samples.size() ? raw.samples[idx] : 0.0;
        p.prominence = prominence(x, idx);
        if (p.prominence > 0.0) {
            const WidthResult w = peak_width(x, idx, p.prominence);
            p.width = w.width;
            p.left_ip = w.left_ip;
            p.right_ip = w.right_ip;
            p.truncated = w.truncated;
        }
        p.refined_index = options.subsample_refine ? refine_peak_position(x, idx) : static_cast<double>(idx);
        out.push_back(p);
    }
    return out;
}

}  // namespace uwbmap
