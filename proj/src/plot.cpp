#include "uwbmap/plot.hpp"

#include "uwbmap/numfmt.hpp"

#include <algorithm>
#include <cstdio>
#include <cmath>
#include <limits>
#include <sstream>

namespace uwbmap {

namespace {

constexpr double kPanel = 360.0;
constexpr double kMargin = 40.0;
constexpr double kBarWidth = 90.0;

struct ColouredPoint {
    double x;
    double y;
    double snr;
};

struct Bounds {
    double x0{std::numeric_limits<double>::infinity()};
    double y0{std::numeric_limits<double>::infinity()};
    double x1{-std::numeric_limits<double>::infinity()};
    double y1{-std::numeric_limits<double>::infinity()};

    void add(double x, double y) {
        x0 = std::min(x0, x);
        y0 = std::min(y0, y);
        x1 = std::max(x1, x);
        y1 = std::max(y1, y);
    }
    bool empty() const { return !(x1 >= x0); }
};

// Dark blue to yellow, brighter = higher score.
std::string ramp(double t) {
    static constexpr double stops[][3] = {
        {68, 1, 84}, {59, 82, 139}, {33, 145, 140}, {94, 201, 98}, {253, 231, 37}};
    t = std::clamp(t, 0.0, 1.0) * 4.0;
    const auto k = std::min(static_cast<int>(t), 3);
    const double f = t - k;
    char buf[8];
    int rgb[3];
    for (int c = 0; c < 3; ++c) rgb[c] = static_cast<int>(std::lround(stops[k][c] + f * (stops[k + 1][c] - stops[k][c])));
    std::snprintf(buf, sizeof buf, "#%02x%02x%02x", rgb[0], rgb[1], rgb[2]);
    return buf;
}

std::string f2(double v) { return format_fixed(v, 2); }

class Canvas {
public:
    Canvas(const Bounds& b) {
        const double span = std::max({b.x1 - b.x0, b.y1 - b.y0, 1.0});
        scale_ = (kPanel - 2.0 * kMargin) / (span * 1.1);
        cx_ = 0.5 * (b.x0 + b.x1);
        cy_ = 0.5 * (b.y0 + b.y1);
    }

    double px(double x) const { return kPanel / 2.0 + (x - cx_) * scale_; }
    double py(double y) const { return kPanel / 2.0 - (y - cy_) * scale_; }

private:
    double scale_{1.0};
    double cx_{0.0};
    double cy_{0.0};
};

}  // namespace

std::vector<std::array<double, 2>> convex_hull(std::vector<std::array<double, 2>> pts) {
    std::sort(pts.begin(), pts.end());
    pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
    if (pts.size() < 3) return pts;
    auto cross = [](const auto& o, const auto& a, const auto& b) {
        return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0]);
    };
    std::vector<std::array<double, 2>> hull(2 * pts.size());
    std::size_t k = 0;
    for (const auto& p : pts) {
        while (k >= 2 && cross(hull[k - 2], hull[k - 1], p) <= 0) --k;
        hull[k++] = p;
    }
    for (std::size_t i = pts.size() - 1, t = k + 1; i-- > 0;) {
        while (k >= t && cross(hull[k - 2], hull[k - 1], pts[i]) <= 0) --k;
        hull[k++] = pts[i];
    }
    hull.resize(k - 1);
    return hull;
}

std::string render_svg(std::span<const FrameResult> frames, std::span<const MapSnapshot> snapshots, PlotStep step) {
    // Point sets per panel.
    std::vector<std::vector<ColouredPoint>> panels(4);
    std::vector<std::array<double, 2>> path;
    for (const auto& f : frames) {
        if (path.empty() || path.back() != std::array<double, 2>{f.pose.x, f.pose.y}) path.push_back({f.pose.x, f.pose.y});
        for (const auto& rec : f.peaks) {
            if (!rec.front_xy) continue;
            const ColouredPoint p{(*rec.front_xy)[0], (*rec.front_xy)[1], rec.peak.snr_score};
            panels[0].push_back(p);
            if (rec.stage != PeakStage::Rejected) panels[1].push_back(p);
            if (rec.stage == PeakStage::Gated) panels[2].push_back(p);
        }
        for (const auto& d : f.detections) panels[3].push_back({d.point.x, d.point.y, d.point.snr_score});
    }
    const MapSnapshot* last = snapshots.empty() ? nullptr : &snapshots.back();

    Bounds b;
    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();
    auto note_snr = [&](double s) {
        if (!std::isfinite(s)) return;
        lo = std::min(lo, s);
        hi = std::max(hi, s);
    };
    for (const auto& p : path) b.add(p[0], p[1]);
    if (step == PlotStep::All) {
        for (const auto& pts : panels) {
            for (const auto& p : pts) {
                b.add(p.x, p.y);
                note_snr(p.snr);
            }
        }
    }
    if (last) {
        for (const auto& c : last->clusters) {
            for (const auto& m : c.members) {
                b.add(m.x, m.y);
                note_snr(m.snr_score);
            }
        }
    }
    if (b.empty()) b.add(0.0, 0.0);
    if (!(hi >= lo)) {
        lo = 0.0;
        hi = 1.0;
    }
    if (hi == lo) hi = lo + 1.0;
    auto colour = [&](double s) {
        if (std::isnan(s)) return ramp(0.0);
        if (std::isinf(s)) return ramp(s > 0 ? 1.0 : 0.0);
        return ramp((s - lo) / (hi - lo));
    };

    const Canvas cv(b);
    static const char* titles[] = {"(a) raw peaks", "(b) property filters", "(c) PDoA gate", "(d) angle of arrival",
                                   "(e) clustered map"};
    const int n_panels = step == PlotStep::All ? 5 : 1;
    const double width = n_panels * kPanel + kBarWidth;

    std::ostringstream svg;
    svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << f2(width) << "\" height=\"" << f2(kPanel + 30.0)
        << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
    svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";

    auto robot_path = [&] {
        if (path.empty()) return;
        svg << "<polyline class=\"robot-path\" fill=\"none\" stroke=\"#d62728\" stroke-width=\"1.5\" points=\"";
        for (std::size_t i = 0; i < path.size(); ++i) {
            svg << (i ? " " : "") << f2(cv.px(path[i][0])) << ',' << f2(cv.py(path[i][1]));
        }
        svg << "\"/>\n";
    };
    auto dot = [&](double x, double y, double s) {
        svg << "<circle cx=\"" << f2(cv.px(x)) << "\" cy=\"" << f2(cv.py(y)) << "\" r=\"2.5\" fill=\"" << colour(s)
            << "\"/>\n";
    };

    for (int panel = 0; panel < n_panels; ++panel) {
        const int kind = step == PlotStep::All ? panel : 4;
        svg << "<g class=\"panel\" transform=\"translate(" << f2(panel * kPanel) << ",0)\">\n";
        svg << "<rect x=\"2\" y=\"2\" width=\"" << f2(kPanel - 4.0) << "\" height=\"" << f2(kPanel - 4.0)
            << "\" fill=\"none\" stroke=\"#888\"/>\n";
        svg << "<text x=\"" << f2(kPanel / 2.0) << "\" y=\"" << f2(kPanel + 20.0) << "\" text-anchor=\"middle\">"
            << titles[kind] << "</text>\n";
        robot_path();
        if (kind < 4) {
            for (const auto& p : panels[static_cast<std::size_t>(kind)]) dot(p.x, p.y, p.snr);
        } else if (last) {
            for (const auto& c : last->clusters) {
                svg << "<g class=\"cluster\" data-id=\"" << c.id << "\">\n";
                std::vector<std::array<double, 2>> pts;
                for (const auto& m : c.members) pts.push_back({m.x, m.y});
                const auto hull = convex_hull(pts);
                svg << "<polygon fill=\"none\" stroke=\"black\" stroke-dasharray=\"4 2\" points=\"";
                for (std::size_t i = 0; i < hull.size(); ++i) {
                    svg << (i ? " " : "") << f2(cv.px(hull[i][0])) << ',' << f2(cv.py(hull[i][1]));
                }
                svg << "\"/>\n";
                for (const auto& m : c.members) dot(m.x, m.y, m.snr_score);
                svg << "</g>\n";
            }
        }
        svg << "</g>\n";
    }

    // Colour bar.
    const double bx = n_panels * kPanel + 20.0;
    svg << "<g class=\"colorbar\">\n";
    constexpr int kSteps = 20;
    const double bar_h = kPanel - 2.0 * kMargin;
    for (int i = 0; i < kSteps; ++i) {
        const double t = 1.0 - (i + 0.5) / kSteps;
        svg << "<rect x=\"" << f2(bx) << "\" y=\"" << f2(kMargin + i * bar_h / kSteps) << "\" width=\"16\" height=\""
            << f2(bar_h / kSteps + 0.5) << "\" fill=\"" << ramp(t) << "\"/>\n";
    }
    svg << "<text x=\"" << f2(bx + 20.0) << "\" y=\"" << f2(kMargin + 4.0) << "\">" << f2(hi) << "</text>\n";
    svg << "<text x=\"" << f2(bx + 20.0) << "\" y=\"" << f2(kMargin + bar_h) << "\">" << f2(lo) << "</text>\n";
    svg << "<text x=\"" << f2(bx) << "\" y=\"" << f2(kMargin - 10.0) << "\">SNR-score</text>\n";
    svg << "</g>\n</svg>\n";
    return svg.str();
}

}  // namespace uwbmap
