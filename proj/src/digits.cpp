#include "vmfkd/digits.hpp"

#include <algorithm>
#include <cmath>

#include "vmfkd/rng.hpp"

namespace vmfkd {
namespace {

constexpr std::size_t kSide = 28;

struct Point {
    double x, y;
};
using Stroke = std::vector<Point>;  // polyline in glyph box [0,1]^2, y down

void arc(Stroke& s, double cx, double cy, double rx, double ry, double a0,
         double a1, int steps = 14) {
    for (int i = 0; i <= steps; ++i) {
        const double t = a0 + (a1 - a0) * static_cast<double>(i) / steps;
        s.push_back({cx + rx * std::cos(t), cy + ry * std::sin(t)});
    }
}

// Stroke skeletons per digit, with writing-style variants drawn per sample.
// Angles measured with y pointing down, so a positive sweep runs clockwise.
std::vector<Stroke> glyph(std::size_t digit, Rng& rng) {
    std::vector<Stroke> strokes;
    auto line = [&](double x0, double y0, double x1, double y1) {
        strokes.push_back({{x0, y0}, {x1, y1}});
    };
    switch (digit) {
        case 0: {
            Stroke s;
            arc(s, 0.5, 0.5, 0.28 + rng.uniform(0.0, 0.06),
                0.36 + rng.uniform(0.0, 0.08), 0.0, 2.0 * M_PI, 26);
            strokes.push_back(std::move(s));
            if (rng.uniform() < 0.25)  // slashed zero
                line(0.34, 0.68, 0.66, 0.32);
            break;
        }
        case 1:
            line(0.36, 0.26, 0.56, 0.08);
            line(0.56, 0.08, 0.56, 0.92);
            if (rng.uniform() < 0.4) line(0.38, 0.92, 0.74, 0.92);  // base bar
            break;
        case 2: {
            Stroke s;
            arc(s, 0.50, 0.32, 0.26, 0.24, -M_PI * 0.9,
                M_PI * (0.05 + rng.uniform(0.0, 0.18)));
            strokes.push_back(std::move(s));
            line(0.70, 0.44, 0.24, 0.90);
            line(0.24, 0.90, 0.80, 0.90);
            break;
        }
        case 3: {
            Stroke top, bot;
            arc(top, 0.46, 0.30, 0.25, 0.21, -M_PI * 0.75, M_PI * 0.45);
            arc(bot, 0.46, 0.68, 0.27, 0.24, -M_PI * 0.45, M_PI * 0.80);
            strokes.push_back(std::move(top));
            strokes.push_back(std::move(bot));
            break;
        }
        case 4:
            if (rng.uniform() < 0.5) {  // open top
                line(0.60, 0.08, 0.20, 0.60);
                line(0.20, 0.60, 0.84, 0.60);
                line(0.64, 0.32, 0.64, 0.92);
            } else {  // closed top
                line(0.30, 0.08, 0.22, 0.58);
                line(0.22, 0.58, 0.82, 0.58);
                line(0.62, 0.08, 0.62, 0.92);
            }
            break;
        case 5: {
            line(0.74, 0.10, 0.30, 0.10);
            line(0.30, 0.10, 0.27, 0.46);
            Stroke bowl;
            arc(bowl, 0.47, 0.66, 0.26, 0.24, -M_PI * 0.60, M_PI * 0.75);
            strokes.push_back(std::move(bowl));
            break;
        }
        case 6: {
            Stroke sweep;
            arc(sweep, 0.70 + rng.uniform(0.0, 0.06), 0.52, 0.42, 0.46,
                -M_PI * 0.85, -M_PI * 0.55);
            strokes.push_back(std::move(sweep));
            Stroke bowl;
            arc(bowl, 0.50, 0.66, 0.23, 0.22, 0.0, 2.0 * M_PI, 22);
            strokes.push_back(std::move(bowl));
            break;
        }
        case 7:
            line(0.20, 0.10, 0.80, 0.10);
            line(0.80, 0.10, 0.40, 0.92);
            if (rng.uniform() < 0.35) line(0.40, 0.50, 0.70, 0.50);  // crossbar
            break;
        case 8: {
            Stroke top, bot;
            const double squeeze = rng.uniform(0.0, 0.04);
            arc(top, 0.50, 0.30, 0.21 - squeeze, 0.20, 0.0, 2.0 * M_PI, 20);
            arc(bot, 0.50, 0.70, 0.25, 0.23, 0.0, 2.0 * M_PI, 20);
            strokes.push_back(std::move(top));
            strokes.push_back(std::move(bot));
            break;
        }
        case 9: {
            Stroke head;
            arc(head, 0.50, 0.34, 0.23, 0.22, 0.0, 2.0 * M_PI, 22);
            strokes.push_back(std::move(head));
            if (rng.uniform() < 0.5)
                line(0.72, 0.40, 0.58, 0.92);  // straight tail
            else {
                Stroke tail;  // curved tail
                arc(tail, 0.42, 0.58, 0.31, 0.34, -M_PI * 0.12, M_PI * 0.45);
                strokes.push_back(std::move(tail));
            }
            break;
        }
        default: break;
    }
    return strokes;
}

double point_segment_dist(double px, double py, const Point& a, const Point& b) {
    const double dx = b.x - a.x, dy = b.y - a.y;
    const double len2 = dx * dx + dy * dy;
    double t = len2 > 0.0 ? ((px - a.x) * dx + (py - a.y) * dy) / len2 : 0.0;
    t = std::clamp(t, 0.0, 1.0);
    const double qx = a.x + t * dx, qy = a.y + t * dy;
    return std::hypot(px - qx, py - qy);
}

struct Pose {
    double rot, sx, sy, shear, tx, ty;
    double warp_amp, warp_freq, warp_phase;
    double warp_amp_y, warp_phase_y;
    double stroke_w, ink, noise;
};

Pose draw_pose(Rng& rng) {
    Pose p;
    p.rot = rng.uniform(-0.30, 0.30);
    p.sx = rng.uniform(0.72, 1.18);
    p.sy = rng.uniform(0.75, 1.18);
    p.shear = rng.uniform(-0.30, 0.30);
    p.tx = rng.uniform(-2.2, 2.2);
    p.ty = rng.uniform(-2.2, 2.2);
    p.warp_amp = rng.uniform(0.0, 1.5);
    p.warp_freq = rng.uniform(0.5, 1.8);
    p.warp_phase = rng.uniform(0.0, 2.0 * M_PI);
    p.warp_amp_y = rng.uniform(0.0, 1.1);
    p.warp_phase_y = rng.uniform(0.0, 2.0 * M_PI);
    p.stroke_w = rng.uniform(1.3, 3.0);
    p.ink = rng.uniform(0.70, 1.0);
    p.noise = rng.uniform(0.01, 0.06);
    return p;
}

Point place(const Point& g, const Pose& p) {
    // glyph box -> canvas pixels, centered, with the sampled pose
    double x = (g.x - 0.5) * 19.0 * p.sx;
    double y = (g.y - 0.5) * 21.0 * p.sy;
    x += p.shear * y;
    const double c = std::cos(p.rot), s = std::sin(p.rot);
    const double xr = c * x - s * y, yr = s * x + c * y;
    x = xr + 13.5 + p.tx;
    y = yr + 13.5 + p.ty;
    x += p.warp_amp * std::sin(2.0 * M_PI * p.warp_freq * y / 28.0 + p.warp_phase);
    y += p.warp_amp_y *
         std::sin(2.0 * M_PI * p.warp_freq * x / 28.0 + p.warp_phase_y);
    return {x, y};
}

void render(std::size_t digit, const Pose& pose, Rng& rng, double* pixels) {
    std::vector<Stroke> strokes = glyph(digit, rng);
    for (auto& s : strokes)
        for (auto& pt : s) pt = place(pt, pose);

    // faint clutter: a few short random strokes and dots in the margins
    const int n_clutter = static_cast<int>(rng.uniform(0.0, 3.0));
    std::vector<Stroke> clutter;
    for (int k = 0; k < n_clutter; ++k) {
        const double x0 = rng.uniform(1.0, 27.0), y0 = rng.uniform(1.0, 27.0);
        clutter.push_back(
            {{x0, y0},
             {x0 + rng.uniform(-3.0, 3.0), y0 + rng.uniform(-3.0, 3.0)}});
    }

    const double half_w = 0.5 * pose.stroke_w;
    for (std::size_t r = 0; r < kSide; ++r) {
        for (std::size_t col = 0; col < kSide; ++col) {
            const double px = static_cast<double>(col) + 0.5;
            const double py = static_cast<double>(r) + 0.5;
            double dist = 1e9;
            for (const auto& s : strokes)
                for (std::size_t k = 0; k + 1 < s.size(); ++k)
                    dist = std::min(dist,
                                    point_segment_dist(px, py, s[k], s[k + 1]));
            // ~1px soft edge around the stroke core
            double v = std::clamp(half_w + 0.5 - dist, 0.0, 1.0) * pose.ink;
            double cdist = 1e9;
            for (const auto& s : clutter)
                cdist = std::min(cdist, point_segment_dist(px, py, s[0], s[1]));
            v = std::max(v, std::clamp(1.0 - cdist, 0.0, 1.0) * 0.35);
            v += pose.noise * rng.normal();
            pixels[r * kSide + col] = std::clamp(v, 0.0, 1.0);
        }
    }
}

}  // namespace

Dataset make_digits(std::size_t n, std::uint64_t seed, Dataset::Split split) {
    Dataset ds;
    ds.class_count = 10;
    ds.split = split;
    ds.image_rows = kSide;
    ds.image_cols = kSide;
    ds.features = Matrix(n, kSide * kSide);
    ds.labels.resize(n);
    const Rng master(seed);
    for (std::size_t i = 0; i < n; ++i) {
        Rng rng = master.split(i);
        const std::size_t digit = i % 10;  // exactly balanced
        ds.labels[i] = digit;
        const Pose pose = draw_pose(rng);
        render(digit, pose, rng, ds.features.row(i));
    }
    ds.validate();
    return ds;
}

}  // namespace vmfkd
