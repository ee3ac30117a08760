#include "phaselock/io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>

namespace phaselock {

namespace {
constexpr double kPi = std::numbers::pi;
}

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

void write_trajectory_csv(std::ostream& out, const Trajectory& traj) {
    out << "t,theta_delta";
    for (Eigen::Index i = 0; i < traj.filter_dim; ++i) out << ",x_" << i;
    out << "\n";
    for (size_t k = 0; k < traj.times.size(); ++k) {
        const Eigen::VectorXd& y = traj.states[k];
        out << format_double(traj.times[k]) << ',' << format_double(y[traj.filter_dim]);
        for (Eigen::Index i = 0; i < traj.filter_dim; ++i) out << ',' << format_double(y[i]);
        out << "\n";
    }
}

PortraitCurve sample_curve(const Trajectory& traj, int samples, PortraitCurve::Style style) {
    PortraitCurve c;
    c.style = style;
    if (traj.times.empty() || samples < 2) return c;
    const double t0 = traj.times.front(), t1 = traj.times.back();
    c.theta.reserve(static_cast<size_t>(samples));
    c.x.reserve(static_cast<size_t>(samples));
    for (int i = 0; i < samples; ++i) {
        const double t = t0 + (t1 - t0) * static_cast<double>(i) / (samples - 1);
        const Eigen::VectorXd y = traj.at(t);
        c.theta.push_back(y[traj.filter_dim]);
        c.x.push_back(traj.filter_dim == 1 ? y[0] : y.head(traj.filter_dim).norm());
    }
    return c;
}

namespace {

struct Mapper {
    double x_lo, x_hi;
    static constexpr double kW = 800.0, kH = 560.0, kMargin = 50.0;

    double px(double theta_wrapped) const {
        return kMargin + (theta_wrapped + kPi / 2.0) / kPi * (kW - 2.0 * kMargin);
    }
    double py(double x) const {
        const double span = x_hi - x_lo;
        return kH - kMargin - (x - x_lo) / span * (kH - 2.0 * kMargin);
    }
};

const char* stroke_for(PortraitCurve::Style s) {
    switch (s) {
        case PortraitCurve::Style::Trajectory: return "stroke=\"#4477aa\" stroke-width=\"1\"";
        case PortraitCurve::Style::StableCycle:
            return "stroke=\"#228833\" stroke-width=\"2\"";
        case PortraitCurve::Style::UnstableCycle:
            return "stroke=\"#cc3311\" stroke-width=\"2\" stroke-dasharray=\"6,4\"";
    }
    return "stroke=\"#000000\"";
}

void emit_polyline(std::ostream& out, const Mapper& map, const PortraitCurve& c) {
    // split the polyline at wrap jumps so curves do not smear across the seam
    std::vector<std::pair<double, double>> run;
    auto flush = [&]() {
        if (run.size() < 2) {
            run.clear();
            return;
        }
        out << "  <polyline fill=\"none\" " << stroke_for(c.style) << " points=\"";
        for (const auto& [tx, ty] : run) out << tx << ',' << ty << ' ';
        out << "\"/>\n";
        run.clear();
    };
    double prev_w = 0.0;
    for (size_t i = 0; i < c.theta.size(); ++i) {
        const double w = wrap_display(c.theta[i]);
        if (i > 0 && std::abs(w - prev_w) > kPi / 2.0) flush();
        run.emplace_back(map.px(w), map.py(c.x[i]));
        prev_w = w;
    }
    flush();
}

}  // namespace

void write_portrait_svg(std::ostream& out, const std::vector<PortraitCurve>& curves,
                        const std::vector<PortraitPoint>& equilibria) {
    double x_lo = std::numeric_limits<double>::infinity();
    double x_hi = -std::numeric_limits<double>::infinity();
    for (const auto& c : curves)
        for (double v : c.x) {
            x_lo = std::min(x_lo, v);
            x_hi = std::max(x_hi, v);
        }
    for (const auto& p : equilibria) {
        x_lo = std::min(x_lo, p.x);
        x_hi = std::max(x_hi, p.x);
    }
    if (!std::isfinite(x_lo)) {
        x_lo = -1.0;
        x_hi = 1.0;
    }
    const double pad = 0.05 * std::max(x_hi - x_lo, 1e-12);
    Mapper map{x_lo - pad, x_hi + pad};

    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << Mapper::kW
        << "\" height=\"" << Mapper::kH << "\" viewBox=\"0 0 " << Mapper::kW << ' '
        << Mapper::kH << "\">\n";
    out << "  <rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    out << "  <rect x=\"" << Mapper::kMargin << "\" y=\"" << Mapper::kMargin << "\" width=\""
        << Mapper::kW - 2 * Mapper::kMargin << "\" height=\"" << Mapper::kH - 2 * Mapper::kMargin
        << "\" fill=\"none\" stroke=\"#888888\"/>\n";
    out << "  <text x=\"" << Mapper::kW / 2.0 << "\" y=\"" << Mapper::kH - 12.0
        << "\" text-anchor=\"middle\" font-size=\"14\">theta_delta (wrapped, rad)</text>\n";
    out << "  <text x=\"16\" y=\"" << Mapper::kH / 2.0 << "\" text-anchor=\"middle\""
        << " font-size=\"14\" transform=\"rotate(-90 16 " << Mapper::kH / 2.0
        << ")\">filter state</text>\n";

    for (const auto& c : curves) emit_polyline(out, map, c);
    for (const auto& p : equilibria) {
        out << "  <circle cx=\"" << map.px(wrap_display(p.theta)) << "\" cy=\"" << map.py(p.x)
            << "\" r=\"4\" " << (p.stable ? "fill=\"#000000\"" : "fill=\"white\" stroke=\"#000000\"")
            << "/>\n";
    }
    out << "</svg>\n";
}

}  // namespace phaselock
