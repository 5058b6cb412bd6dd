#include "vmfkd/viz.hpp"

#include <cmath>
#include <fstream>

#include "vmfkd/common.hpp"

namespace vmfkd {
namespace {

constexpr std::size_t kDensityAngles = 720;

void check_planar(const Network& net) {
    if (net.penultimate_dim() != 2)
        throw NumericError(
            "viz export needs a 2-d penultimate space (got d = " +
            std::to_string(net.penultimate_dim()) +
            "); train the network with its last hidden width set to 2");
}

const char* class_color(std::size_t c) {
    static const char* palette[10] = {"#e6194b", "#3cb44b", "#ffe119", "#4363d8",
                                      "#f58231", "#911eb4", "#46f0f0", "#f032e6",
                                      "#bcf60c", "#008080"};
    return palette[c % 10];
}

}  // namespace

std::vector<double> class_angle_gaps_deg(const Network& net, const Dataset& ds) {
    check_planar(net);
    ds.validate();
    const std::size_t c = net.class_count();
    std::vector<double> sum_x(c, 0.0), sum_y(c, 0.0);
    for (std::size_t i = 0; i < ds.size(); ++i) {
        const auto a = net.penultimate(ds.features.row_span(i));
        const double n = std::hypot(a[0], a[1]);
        if (!(n > 0.0)) continue;
        sum_x[ds.labels[i]] += a[0] / n;
        sum_y[ds.labels[i]] += a[1] / n;
    }
    std::vector<double> gaps(c, 180.0);
    for (std::size_t k = 0; k < c; ++k) {
        if (sum_x[k] == 0.0 && sum_y[k] == 0.0) continue;
        const double mean_angle = std::atan2(sum_y[k], sum_x[k]);
        const double proto_angle =
            std::atan2(net.prototypes().at(k, 1), net.prototypes().at(k, 0));
        double diff = std::fmod(mean_angle - proto_angle, 2.0 * M_PI);
        if (diff > M_PI) diff -= 2.0 * M_PI;
        if (diff < -M_PI) diff += 2.0 * M_PI;
        gaps[k] = std::abs(diff) * 180.0 / M_PI;
    }
    return gaps;
}

void viz_export(const Network& net, const Dataset& ds,
                const ClassActivationModel& model, const std::string& prefix,
                bool svg) {
    check_planar(net);
    model.validate();
    if (model.dim() != 2)
        throw NumericError("viz export needs a 2-d activation model");
    ds.validate();

    // per-sample normalized activation angles
    std::vector<double> angles(ds.size());
    {
        std::ofstream out(prefix + "_activations.csv");
        if (!out) throw IoError("cannot write " + prefix + "_activations.csv");
        out << "angle_rad,label\n";
        for (std::size_t i = 0; i < ds.size(); ++i) {
            const auto a = net.penultimate(ds.features.row_span(i));
            angles[i] = std::atan2(a[1], a[0]);
            out << fmt_double(angles[i]) << ',' << ds.labels[i] << '\n';
        }
    }

    // per-class vMF density on the circle
    {
        std::ofstream out(prefix + "_density.csv");
        if (!out) throw IoError("cannot write " + prefix + "_density.csv");
        out << "class,angle_rad,density\n";
        for (std::size_t c = 0; c < model.class_count(); ++c) {
            const double k = model.concentration(c);
            const double log_c = log_norm_const(2, k);
            const double mode = std::atan2(model.class_directions[c][1],
                                           model.class_directions[c][0]);
            for (std::size_t j = 0; j < kDensityAngles; ++j) {
                const double theta = 2.0 * M_PI * static_cast<double>(j) /
                                     static_cast<double>(kDensityAngles);
                const double density =
                    std::exp(log_c + k * std::cos(theta - mode));
                out << c << ',' << fmt_double(theta) << ','
                    << fmt_double(density) << '\n';
            }
        }
    }

    if (!svg) return;
    // Convenience polar plot over the CSV contents: activation dots on the
    // unit circle, density curves scaled into an outer band.
    std::ofstream out(prefix + "_polar.svg");
    if (!out) throw IoError("cannot write " + prefix + "_polar.svg");
    const double cx = 300.0, cy = 300.0, r_dots = 170.0, r_band = 80.0;
    out << "<svg xmlns='http://www.w3.org/2000/svg' width='600' height='600' "
           "viewBox='0 0 600 600'>\n"
        << "<rect width='600' height='600' fill='white'/>\n"
        << "<circle cx='300' cy='300' r='170' fill='none' stroke='#cccccc'/>\n";
    for (std::size_t i = 0; i < ds.size(); ++i) {
        const double x = cx + r_dots * std::cos(angles[i]);
        const double y = cy - r_dots * std::sin(angles[i]);
        out << "<circle cx='" << fmt_double(x) << "' cy='" << fmt_double(y)
            << "' r='2' fill='" << class_color(ds.labels[i])
            << "' fill-opacity='0.45'/>\n";
    }
    for (std::size_t c = 0; c < model.class_count(); ++c) {
        const double k = model.concentration(c);
        const double log_c = log_norm_const(2, k);
        const double mode = std::atan2(model.class_directions[c][1],
                                       model.class_directions[c][0]);
        const double peak = std::exp(log_c + k);
        out << "<path fill='none' stroke='" << class_color(c)
            << "' stroke-width='1.5' d='";
        for (std::size_t j = 0; j <= kDensityAngles; ++j) {
            const double theta = 2.0 * M_PI * static_cast<double>(j % kDensityAngles) /
                                 static_cast<double>(kDensityAngles);
            const double density = std::exp(log_c + k * std::cos(theta - mode));
            const double r = r_dots + r_band * density / peak;
            const double x = cx + r * std::cos(theta);
            const double y = cy - r * std::sin(theta);
            out << (j == 0 ? 'M' : 'L') << fmt_double(x) << ' ' << fmt_double(y);
        }
        out << "Z'/>\n";
    }
    out << "</svg>\n";
    if (!out) throw IoError("write failed: " + prefix + "_polar.svg");
}

}  // namespace vmfkd
