#pragma once

#include "phaselock/analysis.hpp"
#include "phaselock/integrate.hpp"

#include <ostream>
#include <string>
#include <vector>

namespace phaselock {

/// Full round-trip decimal formatting (17 significant digits).
std::string format_double(double v);

/// Columns: t,theta_delta,x_0..x_{n-1}; one row per accepted step endpoint.
void write_trajectory_csv(std::ostream& out, const Trajectory& traj);

/// A sampled curve in (theta, filter-state) coordinates, theta unwrapped.
struct PortraitCurve {
    enum class Style { Trajectory, StableCycle, UnstableCycle } style = Style::Trajectory;
    std::vector<double> theta;
    std::vector<double> x;
};

struct PortraitPoint {
    double theta;
    double x;
    bool stable;
};

/// Phase portrait on the cylinder: wrapped theta in [-pi/2, pi/2) across,
/// filter state up; equilibria drawn as dots (filled when stable), stable
/// cycles solid, unstable cycles dashed, trajectories thin.
void write_portrait_svg(std::ostream& out, const std::vector<PortraitCurve>& curves,
                        const std::vector<PortraitPoint>& equilibria);

/// Uniform resampling of a trajectory into a portrait curve.
PortraitCurve sample_curve(const Trajectory& traj, int samples,
                           PortraitCurve::Style style = PortraitCurve::Style::Trajectory);

}  // namespace phaselock
